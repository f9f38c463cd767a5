"""certify -> classify -> simulate, driven by a ProblemConfig."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .certkit import CertificateSet, SubsystemFamily, build_certificate_set
from .config import ProblemConfig
from .errors import ConfigError
from .sigkit import AsymptoticStatistics, SwitchingSignal
from .simkit import (
    EnvelopeReport,
    SimConfig,
    Trajectory,
    Verdict,
    check_envelopes,
    divergence_verdict,
    log_norm_slope,
    propagate,
    write_trace_csv,
)
from .verdikt import MarginReport, classify, empirical_margins


@dataclass(frozen=True, eq=False)
class SimulationResult:
    x0: np.ndarray
    trajectory: Trajectory
    verdict: Verdict
    slope: float
    envelope: EnvelopeReport

    def as_dict(self) -> dict:
        return {
            "x0": [float(v) for v in self.x0],
            "verdict": self.verdict.value,
            "log_norm_slope": self.slope,
            "final_norm": float(self.trajectory.norms[-1]),
            "final_time": float(self.trajectory.times[-1]),
            "saturated": self.trajectory.saturated,
            "samples": len(self.trajectory),
            "envelope_slack": self.envelope.as_dict(),
        }


@dataclass(eq=False)
class Session:
    """Lazily built family, certificates and signal for one config."""

    config: ProblemConfig
    _family: SubsystemFamily | None = None
    _certs: CertificateSet | None = None
    _signal: tuple[SwitchingSignal | None, AsymptoticStatistics | None] | None = None

    @property
    def family(self) -> SubsystemFamily:
        if self._family is None:
            self._family = self.config.family.build()
        return self._family

    @property
    def certificates(self) -> CertificateSet:
        if self._certs is None:
            opts = self.config.certificates
            self._certs = build_certificate_set(self.family, opts.q_matrices(), float(opts.eps_offset))
        return self._certs

    def _resolve_signal(self):
        if self.config.signal is None:
            raise ConfigError("config has no signal")
        if self._signal is None:
            self._signal = self.config.signal.build(self.family)
        return self._signal

    @property
    def signal(self) -> SwitchingSignal:
        sig, _ = self._resolve_signal()
        if sig is None:
            raise ConfigError("an asymptotic-statistics signal has no trajectory to simulate")
        return sig

    @property
    def limits(self) -> AsymptoticStatistics | None:
        return self._resolve_signal()[1]

    def margins(self) -> MarginReport:
        spec = self.config.signal
        if spec is None:
            raise ConfigError("classify needs a signal")
        opts = self.config.classify
        mode = opts.mode or ("asymptotic" if spec.has_limits else "empirical")
        if mode == "asymptotic":
            if self.limits is None:
                raise ConfigError(f"a {spec.type!r} signal has no limit statistics; use classify.mode 'empirical'")
            return classify(self.limits, self.certificates)
        horizon = self._empirical_horizon()
        return empirical_margins(self.signal, self.certificates, horizon, float(opts.tail_fraction))

    def _empirical_horizon(self) -> Fraction:
        cfg = self.config
        for h in (cfg.classify.horizon, cfg.signal.horizon,
                  cfg.simulate.horizon if cfg.simulate is not None else None):
            if h is not None:
                return h
        raise ConfigError("empirical classification needs classify.horizon (or a simulate horizon)")

    def initial_states(self) -> list[np.ndarray]:
        if self.config.simulate is None:
            raise ConfigError("config has no simulate section")
        states = self.config.simulate.initial_states(self.family.dim)
        for i, x0 in enumerate(states):
            if x0.shape != (self.family.dim,):
                raise ConfigError(f"x0[{i}] has dimension {x0.size}, family has {self.family.dim}")
            if not np.all(np.isfinite(x0)) or not np.any(x0):
                raise ConfigError(f"x0[{i}] is zero or non-finite; the origin is an equilibrium")
        return states

    def simulate(self, trace_dir: str | Path | None = None) -> list[SimulationResult]:
        opts = self.config.simulate
        states = self.initial_states()
        sim = SimConfig(horizon=opts.horizon, sample_step=opts.sample_step)
        certs = self.certificates
        results = []
        for i, x0 in enumerate(states):
            traj = propagate(self.family, self.signal, x0, sim, certs)
            env = check_envelopes(traj, certs, raise_on_violation=False)
            results.append(SimulationResult(
                x0=x0, trajectory=traj, verdict=divergence_verdict(traj),
                slope=log_norm_slope(traj), envelope=env,
            ))
            if trace_dir is not None:
                write_trace_csv(Path(trace_dir) / f"trace_{i}.csv", traj, certs)
        return results


def certificate_table(certs: CertificateSet) -> dict:
    subsystems = []
    for p, c in sorted(certs.certificates.items()):
        subsystems.append({
            "id": p,
            "stability": c.stability.value,
            "epsilon": c.epsilon,
            "P": c.P.tolist(),
            "lambda_hat": c.lambda_hat,
            "lambda_check": c.lambda_check,
        })
    edges = [{"edge": [p, q], "mu_hat": g.mu_hat, "mu_check": g.mu_check}
             for (p, q), g in sorted(certs.gains.items())]
    return {"subsystems": subsystems, "edges": edges}
