"""Problem description: a single JSON document, parsed exactly.

Matrix entries, times and frequencies may be JSON numbers or decimal /
rational strings ("-0.1857", "1/20"); both are held as Fractions so that a
config round-trips field by field and decimal inputs are rounded to binary
only once.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .certkit import DEFAULT_EPS_OFFSET, SubsystemFamily
from .errors import ConfigError, SwitchVerdictError
from .sigkit import (
    AsymptoticStatistics,
    CycleSpec,
    SwitchingSignal,
    cycle_from_circuit,
    eulerian_transition_cycle,
    random_admissible,
)

SIGNAL_TYPES = ("schedule", "cycle", "asymptotic", "random")


def _num(value, what: str) -> Fraction:
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number, got {value!r}")
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{what}: cannot parse {value!r} as a number") from exc


def fraction_str(x: Fraction) -> str:
    """Exact decimal string when one exists, else ``p/q``."""
    x = Fraction(x)
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(x.numerator)
    scaled = abs(x.numerator) * (10 ** digits // x.denominator)
    sign = "-" if x < 0 else ""
    whole, frac = divmod(scaled, 10 ** digits)
    return f"{sign}{whole}.{str(frac).rjust(digits, '0')}"


def _matrix(rows, what: str) -> tuple[tuple[Fraction, ...], ...]:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{what}: expected a non-empty nested list")
    out = tuple(tuple(_num(v, what) for v in r) for r in rows)
    if len({len(r) for r in out}) != 1:
        raise ConfigError(f"{what}: ragged matrix")
    return out


def _matrix_json(m) -> list:
    return [[fraction_str(v) for v in row] for row in m]


def to_array(m) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in m], dtype=float)


def _require(d: Mapping, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


@dataclass(frozen=True)
class FamilySpec:
    dim: int
    subsystems: tuple[tuple[int, tuple[tuple[Fraction, ...], ...]], ...]
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def from_dict(cls, d: Mapping) -> FamilySpec:
        dim = _require(d, "d", "family")
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise ConfigError("family.d must be a positive integer")
        subs = []
        for s in _require(d, "subsystems", "family"):
            pid = _require(s, "id", "family.subsystems[]")
            subs.append((int(pid), _matrix(_require(s, "A", f"subsystem {pid}"), f"subsystem {pid} A")))
        edges = tuple((int(p), int(q)) for p, q in d.get("edges", []))
        return cls(dim=dim, subsystems=tuple(subs), edges=edges)

    def to_dict(self) -> dict:
        return {
            "d": self.dim,
            "subsystems": [{"id": p, "A": _matrix_json(A)} for p, A in self.subsystems],
            "edges": [[p, q] for p, q in self.edges],
        }

    def build(self) -> SubsystemFamily:
        ids = [p for p, _ in self.subsystems]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate subsystem ids {ids}")
        return SubsystemFamily(self.dim, {p: to_array(A) for p, A in self.subsystems}, frozenset(self.edges))


@dataclass(frozen=True)
class CertificateOptions:
    Q: str | tuple[tuple[int, tuple[tuple[Fraction, ...], ...]], ...] = "identity"
    eps_offset: Fraction = Fraction(str(DEFAULT_EPS_OFFSET))

    @classmethod
    def from_dict(cls, d: Mapping | None) -> CertificateOptions:
        d = d or {}
        q = d.get("Q", "identity")
        if q == "identity":
            Q: Any = "identity"
        elif isinstance(q, dict):
            Q = tuple(sorted((int(k), _matrix(v, f"Q[{k}]")) for k, v in q.items()))
        else:
            raise ConfigError("certificates.Q must be \"identity\" or an {id: matrix} object")
        eps = _num(d.get("eps_offset", str(DEFAULT_EPS_OFFSET)), "certificates.eps_offset")
        if eps <= 0:
            raise ConfigError("certificates.eps_offset must be positive")
        return cls(Q=Q, eps_offset=eps)

    def to_dict(self) -> dict:
        q = "identity" if self.Q == "identity" else {str(k): _matrix_json(m) for k, m in self.Q}
        return {"Q": q, "eps_offset": fraction_str(self.eps_offset)}

    def q_matrices(self) -> dict[int, np.ndarray]:
        if self.Q == "identity":
            return {}
        return {k: to_array(m) for k, m in self.Q}


@dataclass(frozen=True)
class SignalSpec:
    """One of the four signal variants; unused fields stay None."""

    type: str
    initial_mode: int | None = None
    switches: tuple[tuple[Fraction, int], ...] | None = None
    cycle: tuple[tuple[int, Fraction], ...] | None = None
    eulerian_dwell: tuple[tuple[int, Fraction], ...] | None = None
    nu: Fraction | None = None
    rho: tuple[tuple[int, int, Fraction], ...] | None = None
    eta: tuple[tuple[int, Fraction], ...] | None = None
    seed: int | None = None
    mean_dwell: Fraction | None = None
    horizon: Fraction | None = None

    @classmethod
    def from_dict(cls, d: Mapping) -> SignalSpec:
        kind = _require(d, "type", "signal")
        if kind not in SIGNAL_TYPES:
            raise ConfigError(f"signal.type must be one of {SIGNAL_TYPES}, got {kind!r}")
        if kind == "schedule":
            sw = tuple((_num(t, "switch time"), int(m)) for t, m in d.get("switches", []))
            return cls(type=kind, initial_mode=int(_require(d, "initial_mode", "signal")), switches=sw)
        if kind == "cycle":
            if ("cycle" in d) == ("eulerian" in d):
                raise ConfigError("cycle signal needs exactly one of 'cycle' or 'eulerian'")
            if "cycle" in d:
                cyc = tuple((int(m), _num(w, "dwell")) for m, w in d["cycle"])
                return cls(type=kind, cycle=cyc)
            dwell = _require(d["eulerian"], "dwell", "signal.eulerian")
            return cls(type=kind, eulerian_dwell=tuple(sorted((int(k), _num(v, "dwell")) for k, v in dwell.items())))
        if kind == "asymptotic":
            rho = tuple((int(p), int(q), _num(v, "rho")) for p, q, v in d.get("rho", []))
            eta = tuple(sorted((int(k), _num(v, "eta")) for k, v in _require(d, "eta", "signal").items()))
            return cls(type=kind, nu=_num(_require(d, "nu", "signal"), "nu"), rho=rho, eta=eta)
        init = d.get("initial_mode")
        return cls(
            type=kind,
            seed=int(_require(d, "seed", "signal")),
            mean_dwell=_num(_require(d, "mean_dwell", "signal"), "mean_dwell"),
            horizon=_num(_require(d, "horizon", "signal"), "horizon"),
            initial_mode=None if init is None else int(init),
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"type": self.type}
        if self.type == "schedule":
            out["initial_mode"] = self.initial_mode
            out["switches"] = [[fraction_str(t), m] for t, m in self.switches]
        elif self.type == "cycle":
            if self.cycle is not None:
                out["cycle"] = [[m, fraction_str(w)] for m, w in self.cycle]
            else:
                out["eulerian"] = {"dwell": {str(k): fraction_str(v) for k, v in self.eulerian_dwell}}
        elif self.type == "asymptotic":
            out["nu"] = fraction_str(self.nu)
            out["rho"] = [[p, q, fraction_str(v)] for p, q, v in self.rho]
            out["eta"] = {str(k): fraction_str(v) for k, v in self.eta}
        else:
            out["seed"] = self.seed
            out["mean_dwell"] = fraction_str(self.mean_dwell)
            out["horizon"] = fraction_str(self.horizon)
            if self.initial_mode is not None:
                out["initial_mode"] = self.initial_mode
        return out

    @property
    def has_limits(self) -> bool:
        return self.type in ("cycle", "asymptotic")

    def build(self, family: SubsystemFamily) -> tuple[SwitchingSignal | None, AsymptoticStatistics | None]:
        """The concrete signal (None for bare statistics) and its limits (None if unknown)."""
        from .sigkit import periodic_from_cycle, validate

        if self.type == "schedule":
            sig = SwitchingSignal(initial_mode=self.initial_mode, switches=self.switches)
            validate(sig, family)
            return sig, None
        if self.type == "cycle":
            if self.cycle is not None:
                spec = CycleSpec(self.cycle)
            else:
                dwell = dict(self.eulerian_dwell)
                spec = cycle_from_circuit(eulerian_transition_cycle(family.edges), dwell)
            return periodic_from_cycle(spec, family)
        if self.type == "asymptotic":
            asym = AsymptoticStatistics(
                nu=float(self.nu),
                rho={(p, q): float(v) for p, q, v in self.rho},
                eta={k: float(v) for k, v in self.eta},
            )
            return None, asym
        sig = random_admissible(family, self.seed, float(self.mean_dwell), self.horizon, self.initial_mode)
        return sig, None


@dataclass(frozen=True)
class SimulateOptions:
    x0: tuple[tuple[Fraction, ...], ...] | str
    horizon: Fraction
    sample_step: Fraction = Fraction(1, 10)

    @classmethod
    def from_dict(cls, d: Mapping) -> SimulateOptions:
        x0 = _require(d, "x0", "simulate")
        if isinstance(x0, str):
            _parse_random_x0(x0)
            x0v: Any = x0
        else:
            if not isinstance(x0, list) or not x0:
                raise ConfigError("simulate.x0 must be a non-empty list of vectors or 'random:k:lo:hi:seed'")
            x0v = tuple(tuple(_num(v, "x0") for v in row) for row in x0)
        horizon = _num(_require(d, "horizon", "simulate"), "simulate.horizon")
        step = _num(d.get("sample_step", "0.1"), "simulate.sample_step")
        if horizon <= 0 or step <= 0:
            raise ConfigError("simulate.horizon and sample_step must be positive")
        return cls(x0=x0v, horizon=horizon, sample_step=step)

    def to_dict(self) -> dict:
        x0 = self.x0 if isinstance(self.x0, str) else [[fraction_str(v) for v in row] for row in self.x0]
        return {"x0": x0, "horizon": fraction_str(self.horizon), "sample_step": fraction_str(self.sample_step)}

    def initial_states(self, dim: int) -> list[np.ndarray]:
        if isinstance(self.x0, str):
            k, lo, hi, seed = _parse_random_x0(self.x0)
            rng = np.random.default_rng(seed)
            return list(rng.uniform(lo, hi, size=(k, dim)))
        return [np.array([float(v) for v in row]) for row in self.x0]


def _parse_random_x0(spec: str) -> tuple[int, float, float, int]:
    parts = spec.split(":")
    if len(parts) != 5 or parts[0] != "random":
        raise ConfigError(f"x0 spec {spec!r} is not of the form random:k:lo:hi:seed")
    try:
        k, lo, hi, seed = int(parts[1]), float(parts[2]), float(parts[3]), int(parts[4])
    except ValueError as exc:
        raise ConfigError(f"x0 spec {spec!r}: {exc}") from exc
    if k < 1 or not lo < hi:
        raise ConfigError(f"x0 spec {spec!r}: need k >= 1 and lo < hi")
    return k, lo, hi, seed


@dataclass(frozen=True)
class ClassifyOptions:
    mode: str | None = None
    tail_fraction: Fraction = Fraction(1, 2)
    horizon: Fraction | None = None

    @classmethod
    def from_dict(cls, d: Mapping | None) -> ClassifyOptions:
        d = d or {}
        mode = d.get("mode")
        if mode not in (None, "asymptotic", "empirical"):
            raise ConfigError("classify.mode must be 'asymptotic' or 'empirical'")
        tail = _num(d.get("tail_fraction", "0.5"), "classify.tail_fraction")
        if not 0 < tail < 1:
            raise ConfigError("classify.tail_fraction must lie in ]0, 1[")
        horizon = d.get("horizon")
        return cls(mode=mode, tail_fraction=tail,
                   horizon=None if horizon is None else _num(horizon, "classify.horizon"))

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"tail_fraction": fraction_str(self.tail_fraction)}
        if self.mode is not None:
            out["mode"] = self.mode
        if self.horizon is not None:
            out["horizon"] = fraction_str(self.horizon)
        return out


@dataclass(frozen=True)
class ProblemConfig:
    family: FamilySpec
    signal: SignalSpec | None = None
    certificates: CertificateOptions = field(default_factory=CertificateOptions)
    simulate: SimulateOptions | None = None
    classify: ClassifyOptions = field(default_factory=ClassifyOptions)

    @classmethod
    def from_dict(cls, d: Mapping) -> ProblemConfig:
        if not isinstance(d, Mapping):
            raise ConfigError("config must be a JSON object")
        try:
            return cls(
                family=FamilySpec.from_dict(_require(d, "family", "config")),
                signal=SignalSpec.from_dict(d["signal"]) if d.get("signal") is not None else None,
                certificates=CertificateOptions.from_dict(d.get("certificates")),
                simulate=SimulateOptions.from_dict(d["simulate"]) if d.get("simulate") is not None else None,
                classify=ClassifyOptions.from_dict(d.get("classify")),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError, AttributeError, SwitchVerdictError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"family": self.family.to_dict(), "certificates": self.certificates.to_dict()}
        if self.signal is not None:
            out["signal"] = self.signal.to_dict()
        if self.simulate is not None:
            out["simulate"] = self.simulate.to_dict()
        out["classify"] = self.classify.to_dict()
        return out

    @classmethod
    def loads(cls, text: str) -> ProblemConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()
