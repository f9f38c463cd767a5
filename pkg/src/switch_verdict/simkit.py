"""Trajectory simulation by per-dwell matrix exponentials and envelope checks."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import numkit
from .certkit import CertificateSet, SubsystemFamily
from .errors import DimensionMismatch, EnvelopeViolation, ExpmOverflow, TooFewSamples
from .sigkit import SwitchingSignal, as_time
from .verdikt import envelope_series

SLOPE_THRESHOLD = 1e-3
ENVELOPE_RTOL = 1e-6


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    sample_step: float
    overflow_cap: float = 1e300

    def __post_init__(self):
        if not self.horizon > 0 or not self.sample_step > 0:
            raise ValueError("horizon and sample_step must be positive")
        if self.sample_step > self.horizon:
            raise ValueError("sample_step must not exceed the horizon")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of x(t); ``modes[i]`` is the mode active at ``times[i]`` (right-continuous)."""

    times: np.ndarray
    states: np.ndarray
    modes: np.ndarray
    values: np.ndarray
    saturated: bool
    signal: SwitchingSignal

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def __len__(self) -> int:
        return len(self.times)


class Verdict(enum.Enum):
    CONVERGING = "Converging"
    DIVERGING = "Diverging"
    INCONCLUSIVE = "Inconclusive"


def propagate(family: SubsystemFamily, signal: SwitchingSignal, x0, config: SimConfig,
              certs: CertificateSet | None = None) -> Trajectory:
    """Advance ``x0`` through each dwell with ``expm(A_p h)``, ``h <= sample_step``.

    Every switching instant is a sample. ``values`` holds ``V_mode(x)`` when
    certificates are given, NaN otherwise. The run stops early and is flagged
    ``saturated`` once the norm passes ``overflow_cap``.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != family.dim:
        raise DimensionMismatch(f"x0 has dimension {x.shape[0]}, family has {family.dim}")
    step = as_time(config.sample_step)
    cache: dict[tuple[int, Fraction], np.ndarray] = {}

    def value(mode: int, state: np.ndarray) -> float:
        return certs.value(mode, state) if certs is not None else math.nan

    times = [0.0]
    states = [x.copy()]
    modes = [signal.initial_mode]
    values = [value(signal.initial_mode, x)]
    saturated = False
    segs = signal.segments(config.horizon)
    for i, (start, end, mode) in enumerate(segs):
        n = math.ceil((end - start) / step)
        h = (end - start) / n
        key = (mode, h)
        if key not in cache:
            try:
                cache[key] = numkit.expm(family.matrices[mode], float(h))
            except ExpmOverflow:
                saturated = True
                break
        E = cache[key]
        # the sample at ``end`` belongs to the next mode when a switch happens there
        next_mode = segs[i + 1][2] if i + 1 < len(segs) else mode
        for k in range(1, n + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                x = E @ x
            norm = float(np.linalg.norm(x))
            if not math.isfinite(norm) or norm > config.overflow_cap:
                saturated = True
                break
            m = next_mode if k == n else mode
            times.append(float(start + k * h))
            states.append(x.copy())
            modes.append(m)
            values.append(value(m, x))
        if saturated:
            break
    return Trajectory(
        times=np.array(times), states=np.array(states), modes=np.array(modes),
        values=np.array(values), saturated=saturated, signal=signal,
    )


@dataclass(frozen=True)
class EnvelopeReport:
    """Worst log-slack of each bound over all samples (negative = violated).

    ``lower``: ln(V(t) / (e^psi V(0))); ``upper``: ln(e^phi V(0) / V(t));
    ``norm_lower`` / ``norm_upper``: the same for the norm bounds
    ``c_hi |x(t)|^2 >= e^psi c_lo |x0|^2`` and ``c_lo |x(t)|^2 <= e^phi c_hi |x0|^2``.
    """

    lower: float
    upper: float
    norm_lower: float
    norm_upper: float
    samples: int

    @property
    def ok(self) -> bool:
        floor = math.log1p(-ENVELOPE_RTOL)
        return min(self.lower, self.upper, self.norm_lower, self.norm_upper) >= floor

    def as_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "norm_lower": self.norm_lower,
                "norm_upper": self.norm_upper, "samples": self.samples, "ok": self.ok}


def envelope_trace(traj: Trajectory, certs: CertificateSet) -> tuple[np.ndarray, np.ndarray]:
    """psi(t), phi(t) at the trajectory's sample times."""
    return envelope_series(traj.signal, certs, traj.times)


def check_envelopes(traj: Trajectory, certs: CertificateSet, rtol: float = ENVELOPE_RTOL,
                    raise_on_violation: bool = True) -> EnvelopeReport:
    """Check ``e^psi V(0) <= V(t) <= e^phi V(0)`` and the induced norm bounds at every sample."""
    psi, phi = envelope_trace(traj, certs)
    values = np.array([certs.value(int(m), x) for m, x in zip(traj.modes, traj.states)])
    log_v = np.log(values)
    log_v0 = log_v[0]
    lower = log_v - (psi + log_v0)
    upper = (phi + log_v0) - log_v
    c_lo, c_hi = certs.alpha_bounds()
    log_r2 = 2 * np.log(traj.norms)
    log_r02 = log_r2[0]
    norm_lower = (math.log(c_hi) + log_r2) - (psi + math.log(c_lo) + log_r02)
    norm_upper = (phi + math.log(c_hi) + log_r02) - (math.log(c_lo) + log_r2)
    if raise_on_violation:
        floor = math.log1p(-rtol)
        for name, arr in (("lower", lower), ("upper", upper),
                          ("norm lower", norm_lower), ("norm upper", norm_upper)):
            bad = np.flatnonzero(arr < floor)
            if bad.size:
                i = int(bad[0])
                raise EnvelopeViolation(
                    f"{name} envelope violated at sample {i} (t={traj.times[i]:.6g}), "
                    f"log-slack {arr[i]:.3e}", index=i, t=float(traj.times[i]))
    return EnvelopeReport(
        lower=float(lower.min()), upper=float(upper.min()),
        norm_lower=float(norm_lower.min()), norm_upper=float(norm_upper.min()),
        samples=len(traj),
    )


def log_norm_slope(traj: Trajectory) -> float:
    """Least-squares slope of ln|x(t)| over the final half of the samples."""
    half = len(traj) // 2
    t = traj.times[half:]
    with np.errstate(divide="ignore"):
        y = np.log(np.maximum(traj.norms[half:], np.finfo(float).tiny))
    return float(np.polyfit(t, y, 1)[0])


def log_value_slope(traj: Trajectory, t_lo: float, t_hi: float) -> float:
    """Least-squares slope of ln V_sigma(t)(x(t)) over samples with t in [t_lo, t_hi]."""
    sel = (traj.times >= t_lo) & (traj.times <= t_hi)
    if np.count_nonzero(sel) < 2:
        raise TooFewSamples(f"fewer than two samples in [{t_lo}, {t_hi}]")
    return float(np.polyfit(traj.times[sel], np.log(traj.values[sel]), 1)[0])


def divergence_verdict(traj: Trajectory, threshold: float = SLOPE_THRESHOLD) -> Verdict:
    if len(traj) < 10:
        raise TooFewSamples(f"need at least 10 samples, got {len(traj)}")
    if traj.saturated:
        return Verdict.DIVERGING
    slope = log_norm_slope(traj)
    if slope > threshold:
        return Verdict.DIVERGING
    if slope < -threshold:
        return Verdict.CONVERGING
    return Verdict.INCONCLUSIVE


def write_trace_csv(path: str | Path, traj: Trajectory, certs: CertificateSet) -> None:
    """CSV with columns ``t,mode,norm_x,V,psi_env,phi_env`` (17 significant digits)."""
    psi, phi = envelope_trace(traj, certs)
    v0 = traj.values[0]
    with np.errstate(over="ignore"):
        psi_env = np.exp(psi) * v0
        phi_env = np.exp(phi) * v0
    norms = traj.norms
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "mode", "norm_x", "V", "psi_env", "phi_env"])
        for i in range(len(traj)):
            writer.writerow([
                f"{traj.times[i]:.17g}", int(traj.modes[i]), f"{norms[i]:.17g}",
                f"{traj.values[i]:.17g}", f"{psi_env[i]:.17g}", f"{phi_env[i]:.17g}",
            ])
