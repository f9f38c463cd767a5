"""Switching signals and their statistics.

A signal is right-continuous and piecewise constant: ``initial_mode`` is
active on ``[0, tau_1[`` and each switch ``(tau_i, q)`` makes ``q`` active
from ``tau_i`` on. Periodic signals repeat a cycle of ``(mode, dwell)``
entries forever, including the wrap-around switch from the last entry to
the first.

All interval accounting uses :class:`fractions.Fraction`, so that the
activation times always add up to ``t`` exactly. Floats are converted
exactly, decimal strings are parsed exactly.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    DeadEnd,
    InadmissibleTransition,
    InvalidSignal,
    NonpositiveTime,
    NotEulerian,
    UnknownMode,
)

Edge = tuple[int, int]
SUM_TOL = 1e-9


def as_time(value) -> Fraction:
    """Exact rational for a time given as int, float, Fraction or decimal string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float) and not math.isfinite(value):
        raise InvalidSignal(f"time {value!r} is not finite")
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise InvalidSignal(f"cannot read {value!r} as a time") from exc


@dataclass(frozen=True)
class CycleSpec:
    """One period of a periodic signal as ``((mode, dwell), ...)``."""

    entries: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        entries = tuple((int(m), as_time(d)) for m, d in self.entries)
        if not entries:
            raise InvalidSignal("a cycle needs at least one entry")
        for m, d in entries:
            if d <= 0:
                raise InvalidSignal(f"dwell {d} of mode {m} must be positive")
        if len(entries) > 1:
            for i, (m, _) in enumerate(entries):
                nxt = entries[(i + 1) % len(entries)][0]
                if m == nxt:
                    raise InvalidSignal(f"consecutive cycle entries {i} and {(i + 1) % len(entries)} share mode {m}")
        object.__setattr__(self, "entries", entries)

    @property
    def period(self) -> Fraction:
        return sum((d for _, d in self.entries), Fraction(0))

    @property
    def modes(self) -> list[int]:
        return [m for m, _ in self.entries]

    def transitions(self) -> list[Edge]:
        if len(self.entries) == 1:
            return []
        ms = self.modes
        return [(ms[i], ms[(i + 1) % len(ms)]) for i in range(len(ms))]


@dataclass(frozen=True)
class SwitchingSignal:
    initial_mode: int
    switches: tuple[tuple[Fraction, int], ...] = ()
    cycle: CycleSpec | None = None

    def __post_init__(self):
        if self.cycle is not None:
            if self.switches:
                raise InvalidSignal("a periodic signal is described by its cycle only")
            cycle = self.cycle if isinstance(self.cycle, CycleSpec) else CycleSpec(tuple(self.cycle))
            object.__setattr__(self, "cycle", cycle)
            if self.initial_mode != cycle.entries[0][0]:
                raise InvalidSignal("initial_mode must be the first cycle mode")
            return
        switches = tuple((as_time(t), int(m)) for t, m in self.switches)
        prev_t, prev_m = Fraction(0), int(self.initial_mode)
        for i, (t, m) in enumerate(switches):
            if t <= prev_t:
                raise InvalidSignal(f"switch #{i + 1} at {t} is not after {prev_t}")
            if m == prev_m:
                raise InvalidSignal(f"switch #{i + 1} at {t} re-enters the active mode {m}")
            prev_t, prev_m = t, m
        object.__setattr__(self, "switches", switches)

    @classmethod
    def constant(cls, mode: int) -> SwitchingSignal:
        return cls(initial_mode=mode)

    @classmethod
    def periodic(cls, spec: CycleSpec | Sequence[tuple[int, object]]) -> SwitchingSignal:
        spec = spec if isinstance(spec, CycleSpec) else CycleSpec(tuple(spec))
        return cls(initial_mode=spec.entries[0][0], cycle=spec)

    @property
    def is_periodic(self) -> bool:
        return self.cycle is not None and len(self.cycle.entries) > 1

    def iter_switches(self) -> Iterator[tuple[Fraction, int]]:
        """Switch instants in increasing order (infinite for periodic signals)."""
        if self.cycle is None:
            yield from self.switches
            return
        if len(self.cycle.entries) == 1:
            return
        entries = self.cycle.entries
        n = len(entries)
        t = Fraction(0)
        i = 0
        while True:
            t += entries[i % n][1]
            i += 1
            yield t, entries[i % n][0]

    def switches_until(self, t) -> list[tuple[Fraction, int]]:
        """All switches with ``0 < tau <= t``."""
        t = as_time(t)
        out = []
        for tau, m in self.iter_switches():
            if tau > t:
                break
            out.append((tau, m))
        return out

    def mode_at(self, t) -> int:
        t = as_time(t)
        mode = self.initial_mode
        for tau, m in self.iter_switches():
            if tau > t:
                break
            mode = m
        return mode

    def segments(self, t_end) -> list[tuple[Fraction, Fraction, int]]:
        """Dwell intervals ``(start, end, mode)`` partitioning ``[0, t_end]``."""
        t_end = as_time(t_end)
        segs = []
        start, mode = Fraction(0), self.initial_mode
        for tau, m in self.iter_switches():
            if tau >= t_end:
                break
            segs.append((start, tau, mode))
            start, mode = tau, m
        if t_end > start:
            segs.append((start, t_end, mode))
        return segs

    def transitions(self) -> list[Edge]:
        if self.cycle is not None:
            return self.cycle.transitions()
        modes = [self.initial_mode] + [m for _, m in self.switches]
        return list(zip(modes, modes[1:]))

    def modes_used(self) -> set[int]:
        if self.cycle is not None:
            return set(self.cycle.modes)
        return {self.initial_mode, *(m for _, m in self.switches)}


@dataclass(frozen=True)
class SignalStatistics:
    """Counts and frequencies of a signal on ``]0, t]``.

    When no switch occurred ``rho`` is empty (zero for every edge) and
    ``rho_defined`` is False.
    """

    t: Fraction
    N: int
    N_pq: Mapping[Edge, int]
    T_p: Mapping[int, Fraction]
    nu: float
    rho: Mapping[Edge, float]
    eta: Mapping[int, float]
    rho_defined: bool = True


@dataclass(frozen=True)
class AsymptoticStatistics:
    nu: float
    rho: Mapping[Edge, float] = field(default_factory=dict)
    eta: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        rho = {(int(p), int(q)): float(v) for (p, q), v in dict(self.rho).items()}
        eta = {int(p): float(v) for p, v in dict(self.eta).items()}
        nu = float(self.nu)
        if not nu >= 0 or any(not v >= 0 for v in rho.values()) or any(not v >= 0 for v in eta.values()):
            raise InvalidSignal("asymptotic statistics must be non-negative")
        if abs(sum(eta.values()) - 1.0) > SUM_TOL:
            raise InvalidSignal(f"activation fractions sum to {sum(eta.values())}, not 1")
        if nu > 0 and abs(sum(rho.values()) - 1.0) > SUM_TOL:
            raise InvalidSignal(f"transition frequencies sum to {sum(rho.values())}, not 1")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "eta", eta)


def validate(signal: SwitchingSignal, family) -> bool:
    """Check that every mode exists and every transition is an edge of E(P)."""
    known = set(family.modes)
    for m in sorted(signal.modes_used()):
        if m not in known:
            raise UnknownMode(f"mode {m} is not a subsystem of the family")
    for i, (p, q) in enumerate(signal.transitions(), start=1):
        if (p, q) not in family.edges:
            raise InadmissibleTransition(i, p, q)
    return True


def _accumulate(signal: SwitchingSignal, t: Fraction):
    N = 0
    N_pq: Counter = Counter()
    T_p: defaultdict = defaultdict(Fraction)
    start = Fraction(0)
    mode = signal.initial_mode
    remaining_from = Fraction(0)

    if signal.is_periodic:
        cycle = signal.cycle
        k = t // cycle.period
        if k > 0:
            for edge in cycle.transitions():
                N_pq[edge] += k
            for m, d in cycle.entries:
                T_p[m] += k * d
            N = k * len(cycle.entries)
            start = remaining_from = k * cycle.period
        # the remainder lies inside one period starting at mode entries[0]
        for tau, m in signal.iter_switches():
            tau = remaining_from + tau
            if tau > t:
                break
            T_p[mode] += tau - start
            N_pq[(mode, m)] += 1
            N += 1
            start, mode = tau, m
    else:
        for tau, m in signal.iter_switches():
            if tau > t:
                break
            T_p[mode] += tau - start
            N_pq[(mode, m)] += 1
            N += 1
            start, mode = tau, m
    if t > start:
        T_p[mode] += t - start
    return int(N), dict(N_pq), dict(T_p)


def stats_at(signal: SwitchingSignal, t) -> SignalStatistics:
    """N, N_pq, T_p and the derived frequencies on ``]0, t]`` (a switch at ``t`` counts)."""
    t = as_time(t)
    if t <= 0:
        raise NonpositiveTime(f"statistics need t > 0, got {t}")
    N, N_pq, T_p = _accumulate(signal, t)
    return _make_stats(t, N, N_pq, T_p)


def stats_series(signal: SwitchingSignal, times: Iterable) -> list[SignalStatistics]:
    """``stats_at`` for many increasing times in a single pass over the switches."""
    ts = [as_time(t) for t in times]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("times must be non-decreasing")
    if ts and ts[0] <= 0:
        raise NonpositiveTime(f"statistics need t > 0, got {ts[0]}")
    out = []
    N = 0
    N_pq: Counter = Counter()
    T_p: defaultdict = defaultdict(Fraction)
    start, mode = Fraction(0), signal.initial_mode
    switches = signal.iter_switches()
    pending = next(switches, None)
    for t in ts:
        while pending is not None and pending[0] <= t:
            tau, m = pending
            T_p[mode] += tau - start
            N_pq[(mode, m)] += 1
            N += 1
            start, mode = tau, m
            pending = next(switches, None)
        T_now = dict(T_p)
        if t > start:
            T_now[mode] = T_now.get(mode, Fraction(0)) + (t - start)
        out.append(_make_stats(t, N, dict(N_pq), T_now))
    return out


def _make_stats(t: Fraction, N: int, N_pq: dict, T_p: dict) -> SignalStatistics:
    nu = float(Fraction(N) / t)
    rho = {e: float(Fraction(c, N)) for e, c in N_pq.items()} if N > 0 else {}
    eta = {p: float(v / t) for p, v in T_p.items()}
    return SignalStatistics(t=t, N=N, N_pq=N_pq, T_p=T_p, nu=nu, rho=rho, eta=eta, rho_defined=N > 0)


def periodic_from_cycle(spec: CycleSpec | Sequence[tuple[int, object]],
                        family=None) -> tuple[SwitchingSignal, AsymptoticStatistics]:
    """The infinite periodic signal of ``spec`` and its exact limit statistics."""
    signal = SwitchingSignal.periodic(spec)
    if family is not None:
        validate(signal, family)
    cycle = signal.cycle
    period = cycle.period
    transitions = cycle.transitions()
    n = len(transitions)
    rho = {e: float(Fraction(c, n)) for e, c in Counter(transitions).items()} if n else {}
    dwell: defaultdict = defaultdict(Fraction)
    for m, d in cycle.entries:
        dwell[m] += d
    eta = {m: float(v / period) for m, v in dwell.items()}
    return signal, AsymptoticStatistics(nu=float(Fraction(n) / period), rho=rho, eta=eta)


def eulerian_transition_cycle(edges: Iterable[Edge]) -> list[Edge]:
    """A closed walk using every directed edge exactly once (Hierholzer).

    Successors are visited in ascending order, so the result is deterministic.
    """
    edges = sorted({(int(p), int(q)) for p, q in edges})
    if not edges:
        return []
    adj: defaultdict = defaultdict(list)
    indeg: Counter = Counter()
    for p, q in edges:
        adj[p].append(q)
        indeg[q] += 1
    vertices = sorted(set(adj) | set(indeg))
    bad = {v: (indeg[v], len(adj[v])) for v in vertices if indeg[v] != len(adj[v])}
    if bad:
        detail = ", ".join(f"vertex {v}: in={i}, out={o}" for v, (i, o) in bad.items())
        raise NotEulerian(f"in-degree differs from out-degree ({detail})", bad)

    ptr = {v: 0 for v in vertices}
    stack = [edges[0][0]]
    walk: list[int] = []
    while stack:
        v = stack[-1]
        if ptr[v] < len(adj[v]):
            stack.append(adj[v][ptr[v]])
            ptr[v] += 1
        else:
            walk.append(stack.pop())
    walk.reverse()
    circuit = list(zip(walk, walk[1:]))
    if len(circuit) != len(edges):
        raise NotEulerian("edge set is not connected")
    return circuit


def cycle_from_circuit(circuit: Sequence[Edge], dwell: Mapping[int, object]) -> CycleSpec:
    """Cycle visiting the circuit's vertices with a per-mode dwell."""
    if not circuit:
        raise InvalidSignal("empty circuit")
    return CycleSpec(tuple((p, as_time(dwell[p])) for p, _ in circuit))


class SplitMix64:
    """SplitMix64 generator (Steele, Lea, Flood 2014); 64-bit state, 64-bit output."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = int(seed) & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform on the open interval ]0, 1[."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0 ** -53

    def below(self, n: int) -> int:
        return self.next_u64() % n


def random_admissible(family, seed: int, mean_dwell: float, horizon,
                      initial_mode: int | None = None) -> SwitchingSignal:
    """Random admissible signal on ``[0, horizon]`` with exponential dwells.

    The next mode is drawn uniformly among the successors of the active one.
    """
    if not mean_dwell > 0:
        raise ValueError("mean_dwell must be positive")
    horizon = as_time(horizon)
    rng = SplitMix64(seed)
    modes = family.modes
    mode = modes[rng.below(len(modes))] if initial_mode is None else int(initial_mode)
    if mode not in modes:
        raise UnknownMode(f"mode {mode} is not a subsystem of the family")
    first = mode
    t = Fraction(0)
    switches = []
    while True:
        succ = family.successors(mode)
        if not succ:
            raise DeadEnd(f"mode {mode} has no admissible successor")
        t = t + Fraction(-mean_dwell * math.log(rng.uniform()))
        if t > horizon:
            break
        mode = succ[rng.below(len(succ))]
        switches.append((t, mode))
    return SwitchingSignal(initial_mode=first, switches=tuple(switches))
