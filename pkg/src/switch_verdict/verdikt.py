"""Stability / instability margins and the three-way classification.

For statistics (nu, rho, eta) and a certificate set, the margin is::

    nu * sum_{(p,q) in E} ln(mu_pq) rho_pq - sum_{p stable} |lambda_p| eta_p
                                           + sum_{p unstable} |lambda_p| eta_p

with the hat scalars (stability margin) or the check scalars (instability
margin). A signal is stabilizing when the limsup of the stability margin
is negative, destabilizing when the liminf of the instability margin is
positive, and undetermined otherwise.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .certkit import CertificateSet, Stability
from .errors import EmptyTail, MissingEdgeGain, NonpositiveTime
from .sigkit import (
    AsymptoticStatistics,
    SignalStatistics,
    SwitchingSignal,
    as_time,
    stats_at,
    stats_series,
)

ZERO_TOL = 1e-9
TAIL_SAMPLES = 100


class Classification(enum.Enum):
    STABILIZING = "Stabilizing"
    DESTABILIZING = "Destabilizing"
    UNDETERMINED = "Undetermined"


class EvaluationMode(enum.Enum):
    ASYMPTOTIC = "Asymptotic"
    EMPIRICAL_TAIL = "EmpiricalTail"


@dataclass(frozen=True)
class MarginReport:
    phi_hat_margin: float
    phi_check_margin: float
    evaluation_mode: EvaluationMode
    classification: Classification

    def as_dict(self) -> dict:
        return {
            "stability_margin": self.phi_hat_margin,
            "instability_margin": self.phi_check_margin,
            "evaluation_mode": self.evaluation_mode.value,
            "classification": self.classification.value,
        }


@dataclass(frozen=True)
class EnvelopeExponents:
    t: float
    psi: float
    phi: float


def _mode_rate(certs: CertificateSet, p: int, kind: str) -> float:
    """Signed contribution per unit activation: -|lambda| if stable, +|lambda| if not."""
    cert = certs.certificates[p]
    lam = cert.lambda_hat if kind == "hat" else cert.lambda_check
    return -abs(lam) if cert.stability is Stability.STABLE else abs(lam)


def _log_gain(certs: CertificateSet, edge, kind: str) -> float:
    try:
        g = certs.gains[edge]
    except KeyError:
        raise MissingEdgeGain(f"no gains for transition {edge[0]}->{edge[1]}") from None
    return math.log(g.mu_hat if kind == "hat" else g.mu_check)


def _margin(stats, certs: CertificateSet, kind: str) -> float:
    edge_term = 0.0
    if stats.nu > 0:
        edge_term = stats.nu * sum(_log_gain(certs, e, kind) * r
                                   for e, r in sorted(stats.rho.items()) if r > 0)
    mode_term = sum(_mode_rate(certs, p, kind) * h for p, h in sorted(stats.eta.items()) if h > 0)
    return edge_term + mode_term


def stability_margin(stats: SignalStatistics | AsymptoticStatistics, certs: CertificateSet) -> float:
    return _margin(stats, certs, "hat")


def instability_margin(stats: SignalStatistics | AsymptoticStatistics, certs: CertificateSet) -> float:
    return _margin(stats, certs, "check")


def label(stab: float, instab: float, tol: float = ZERO_TOL) -> Classification:
    if stab < -tol:
        return Classification.STABILIZING
    if instab > tol:
        return Classification.DESTABILIZING
    return Classification.UNDETERMINED


def classify(asym: AsymptoticStatistics, certs: CertificateSet) -> MarginReport:
    """Exact verdict for constant limit statistics (limsup = liminf = the margins)."""
    stab = stability_margin(asym, certs)
    instab = instability_margin(asym, certs)
    return MarginReport(stab, instab, EvaluationMode.ASYMPTOTIC, label(stab, instab))


def envelope_exponents(signal: SwitchingSignal, certs: CertificateSet, t) -> EnvelopeExponents:
    """psi(t) and phi(t) from the counts N_pq(t) and activation times T_p(t)."""
    st = stats_at(signal, t)
    out = {}
    for kind in ("check", "hat"):
        jumps = sum(_log_gain(certs, e, kind) * n for e, n in sorted(st.N_pq.items()))
        flows = sum(_mode_rate(certs, p, kind) * float(T) for p, T in sorted(st.T_p.items()))
        out[kind] = jumps + flows
    return EnvelopeExponents(t=float(st.t), psi=out["check"], phi=out["hat"])


def envelope_series(signal: SwitchingSignal, certs: CertificateSet,
                    times: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized psi and phi at many times (a switch at exactly t is counted).

    Built from cumulative values at the switching instants, in floating point.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros(0), np.zeros(0)
    if np.any(times < 0):
        raise NonpositiveTime("envelope times must be non-negative")
    t_max = as_time(float(times.max()))
    taus = [0.0]
    modes = [signal.initial_mode]
    psi_at = [0.0]
    phi_at = [0.0]
    for tau, m in signal.switches_until(t_max):
        prev = modes[-1]
        dt = float(tau) - taus[-1]
        psi_at.append(psi_at[-1] + _mode_rate(certs, prev, "check") * dt
                      + _log_gain(certs, (prev, m), "check"))
        phi_at.append(phi_at[-1] + _mode_rate(certs, prev, "hat") * dt
                      + _log_gain(certs, (prev, m), "hat"))
        taus.append(float(tau))
        modes.append(m)
    psi_rate = np.array([_mode_rate(certs, m, "check") for m in modes])
    phi_rate = np.array([_mode_rate(certs, m, "hat") for m in modes])
    idx = np.array([bisect_right(taus, t) - 1 for t in times])
    base = np.asarray(taus)[idx]
    psi = np.asarray(psi_at)[idx] + psi_rate[idx] * (times - base)
    phi = np.asarray(phi_at)[idx] + phi_rate[idx] * (times - base)
    return psi, phi


def empirical_margins(signal: SwitchingSignal, certs: CertificateSet, horizon,
                      tail_fraction: float = 0.5) -> MarginReport:
    """Finite-horizon surrogate: sup / inf of the margins over the tail window.

    Samples every switching instant in ``[tail_fraction * horizon, horizon]``
    plus 100 uniform times.
    """
    if not 0 < tail_fraction < 1:
        raise ValueError("tail_fraction must lie in ]0, 1[")
    horizon = as_time(horizon)
    if horizon <= 0:
        raise NonpositiveTime("horizon must be positive")
    switches = signal.switches_until(horizon)
    first = next(signal.iter_switches(), None)
    if first is not None and not switches:
        # the observed window ends before the signal ever switches
        raise EmptyTail(f"horizon {float(horizon)} ends before the first switch at {float(first[0])}")
    lo = tail_fraction * horizon
    samples = {tau for tau, _ in switches if tau >= lo}
    samples.update(as_time(x) for x in np.linspace(float(lo), float(horizon), TAIL_SAMPLES))
    samples.add(horizon)
    times = sorted(t for t in samples if lo <= t <= horizon and t > 0)
    if not times:
        raise EmptyTail("no sample times in the tail window")
    series = stats_series(signal, times)
    stab = max(stability_margin(st, certs) for st in series)
    instab = min(instability_margin(st, certs) for st in series)
    return MarginReport(stab, instab, EvaluationMode.EMPIRICAL_TAIL, label(stab, instab))
