"""Embedded reference cases and their published numbers.

Each case runs the full pipeline on a built-in config and compares every
reference number with the computed one. Informational rows are printed but
never fail the case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .config import ProblemConfig
from .pipeline import Session
from .simkit import log_value_slope

A_ROT = {
    1: [["-0.2", "-0.4"], ["3", "-0.2"]],
    2: [["-0.2", "-3"], ["0.4", "-0.2"]],
}
A_MIXED = {
    1: [["-0.1857", "-0.7565"], ["-0.0707", "-0.6500"]],
    2: [["-0.3509", "-0.2683"], ["-0.3523", "-0.5491"]],
    3: [["0.1734", "-0.6091"], ["0.8314", "-0.1966"]],
    4: [["0.6294", "0.8116"], ["-0.7460", "0.8268"]],
}
MIXED_EDGES = [[1, 2], [1, 3], [2, 1], [2, 4], [3, 1], [3, 4], [4, 2], [4, 3]]
MIXED_CYCLE = [[1, "10"], [2, "10"], [4, "30"], [3, "30"], [1, "10"], [3, "30"], [4, "30"], [2, "10"]]


def _two_mode(mats: dict, x0, horizon: str) -> dict:
    return {
        "family": {"d": 2, "subsystems": [{"id": p, "A": A} for p, A in sorted(mats.items())],
                   "edges": [[1, 2], [2, 1]]},
        "certificates": {"Q": "identity", "eps_offset": "0.0001"},
        "signal": {"type": "cycle", "cycle": [[1, "10"], [2, "10"]]},
        "simulate": {"x0": [x0], "horizon": horizon, "sample_step": "0.1"},
        "classify": {"mode": "asymptotic"},
    }


CONFIGS: dict[str, dict] = {
    "example1": _two_mode(A_ROT, ["-1.0883", "2.9263"], "120"),
    "gap-proof": _two_mode(A_ROT, ["-1.0883", "2.9263"], "120"),
    "example3": {
        "family": {"d": 2, "subsystems": [{"id": p, "A": A} for p, A in sorted(A_MIXED.items())],
                   "edges": MIXED_EDGES},
        "certificates": {"Q": "identity", "eps_offset": "0.0001"},
        "signal": {"type": "cycle", "cycle": MIXED_CYCLE},
        "simulate": {"x0": "random:10:-10:10:2024", "horizon": "200", "sample_step": "0.1"},
        "classify": {"mode": "asymptotic"},
    },
    "example-sigma-prime": _two_mode({1: A_MIXED[2], 2: A_MIXED[4]}, ["9.0044", "-9.3111"], "100"),
}


@dataclass(frozen=True)
class Check:
    """One compared quantity. ``kind`` is abs, rel, equal, ge or le."""

    name: str
    computed: object
    expected: object
    tol: float = 0.0
    kind: str = "abs"
    informational: bool = False

    @property
    def error(self) -> float | None:
        if self.kind == "abs":
            return abs(self.computed - self.expected)
        if self.kind == "rel":
            return abs(self.computed - self.expected) / abs(self.expected)
        return None

    @property
    def passed(self) -> bool:
        if self.kind in ("abs", "rel"):
            return math.isfinite(self.computed) and self.error <= self.tol
        if self.kind == "ge":
            return self.computed >= self.expected
        if self.kind == "le":
            return self.computed <= self.expected
        return self.computed == self.expected

    def describe(self) -> str:
        if self.kind == "abs":
            return f"|diff| {self.error:.2e} <= {self.tol:g}"
        if self.kind == "rel":
            return f"rel {self.error:.2e} <= {self.tol:g}"
        if self.kind == "ge":
            return ">= expected"
        if self.kind == "le":
            return "<= expected"
        return "equal"

    def as_dict(self) -> dict:
        return {"name": self.name, "computed": self.computed, "expected": self.expected,
                "tolerance": self.tol, "kind": self.kind, "error": self.error,
                "informational": self.informational, "passed": self.passed}


@dataclass(frozen=True)
class CaseResult:
    case: str
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def table(self) -> str:
        lines = [f"case {self.case}"]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            if c.informational:
                status = f"info ({status.lower()})"
            comp = f"{c.computed:.6g}" if isinstance(c.computed, float) else str(c.computed)
            exp = f"{c.expected:.6g}" if isinstance(c.expected, float) else str(c.expected)
            lines.append(f"  {status:<12} {c.name:<34} computed {comp:<14} expected {exp:<14} {c.describe()}")
        n_fail = sum(1 for c in self.checks if not c.informational and not c.passed)
        lines.append(f"  {'all checks passed' if self.passed else f'{n_fail} check(s) failed'}")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {"case": self.case, "passed": self.passed, "checks": [c.as_dict() for c in self.checks]}


def _matrix_checks(name: str, P, ref, tol=1e-3, scale=1.0) -> list[Check]:
    return [Check(f"{name}[{i}{j}]", float(P[i][j]), ref[i][j] * scale, tol * scale)
            for i in range(len(ref)) for j in range(len(ref))]


def _rotation_cases(s: Session, gap_only: bool) -> list[Check]:
    certs = s.certificates
    margins = s.margins()
    checks = []
    if not gap_only:
        checks += _matrix_checks("P1", certs[1].P, [[10.3629, 0.5242], [0.5242, 1.4516]])
        checks += _matrix_checks("P2", certs[2].P, [[1.4516, -0.5242], [-0.5242, 10.3629]])
        for p in (1, 2):
            checks.append(Check(f"lambda_hat_{p}", certs[p].lambda_hat, 0.0962, 1e-3))
        for e in ((1, 2), (2, 1)):
            checks.append(Check(f"mu_hat_{e[0]}{e[1]}", certs.gains[e].mu_hat, 7.3149, 1e-2))
    for p in (1, 2):
        checks.append(Check(f"lambda_check_{p}", certs[p].lambda_check, 0.7038, 1e-3))
    for e in ((1, 2), (2, 1)):
        checks.append(Check(f"mu_check_{e[0]}{e[1]}", certs.gains[e].mu_check, 0.1367, 1e-3))
    if gap_only:
        checks.append(Check("stability_margin (not < 0)", margins.phi_hat_margin, 0.0, kind="ge"))
        checks.append(Check("instability_margin (not > 0)", margins.phi_check_margin, 0.0, kind="le"))
    else:
        checks.append(Check("stability_margin", margins.phi_hat_margin, 0.1028, 2e-3))
    checks.append(Check("instability_margin", margins.phi_check_margin, -0.9028, 2e-3))
    checks.append(Check("classification", margins.classification.value, "Undetermined", kind="equal"))
    if not gap_only:
        for i, r in enumerate(s.simulate()):
            checks.append(Check(f"simulation x0[{i}] verdict", r.verdict.value, "Converging", kind="equal"))
            checks.append(Check(f"simulation x0[{i}] envelopes hold", r.envelope.ok, True, kind="equal"))
    return checks


def _example1(s: Session) -> list[Check]:
    return _rotation_cases(s, gap_only=False)


def _gap_proof(s: Session) -> list[Check]:
    return _rotation_cases(s, gap_only=True)


def _example3(s: Session) -> list[Check]:
    certs = s.certificates
    checks = []
    for p, ref in zip((1, 2, 3, 4), (1.5691, 1.5486, 0.0302, -1.4562)):
        checks.append(Check(f"lambda_check_{p}", certs[p].lambda_check, ref, 1e-3))
    mu_ref = [0.2661, 5.6395, 0.6446, 1.3875e3, 0.0173, 87.0252, 1.4133e-4, 0.0070]
    for (p, q), ref in zip(MIXED_EDGES, mu_ref):
        checks.append(Check(f"mu_check_{p}{q}", certs.gains[(p, q)].mu_check, ref, 1e-3, "rel"))
    checks.append(Check("epsilon_4", certs[4].epsilon, 0.7282, 1e-4))
    # printed P matrices; the 4-decimal A matrices do not reproduce P3 and P4 to 1e-3
    checks += [
        Check(c.name, c.computed, c.expected, c.tol, c.kind, informational=True)
        for c in _matrix_checks("P1", certs[1].P, [[4.4041, -4.4942], [-4.4942, 5.9995]])
        + _matrix_checks("P2", certs[2].P, [[2.9643, -1.5333], [-1.5333, 1.6598]])
        + _matrix_checks("P3", certs[3].P, [[54.7476, -12.0193], [-12.0193, 39.7715]])
        + _matrix_checks("P4", certs[4].P, [[4.8542, -0.6419], [-0.6419, 5.2809]], scale=1e3)
    ]
    margins = s.margins()
    checks.append(Check("instability_margin", margins.phi_check_margin, 0.1064, 2e-3))
    checks.append(Check("classification", margins.classification.value, "Destabilizing", kind="equal"))
    for i, r in enumerate(s.simulate()):
        checks.append(Check(f"simulation x0[{i}] verdict", r.verdict.value, "Diverging", kind="equal"))
        checks.append(Check(f"simulation x0[{i}] envelopes hold", r.envelope.ok, True, kind="equal"))
        checks.append(Check(f"simulation x0[{i}] ln V slope on [100,200]",
                            log_value_slope(r.trajectory, 100.0, 200.0), 0.1064 - 0.02, kind="ge"))
    return checks


def _sigma_prime(s: Session) -> list[Check]:
    certs = s.certificates
    g12, g21 = certs.gains[(1, 2)], certs.gains[(2, 1)]
    margins = s.margins()
    checks = [
        Check("lambda_hat_1", certs[1].lambda_hat, 0.2514, 1e-3),
        Check("lambda_check_1", certs[1].lambda_check, 1.5486, 1e-3),
        Check("lambda_hat_2", certs[2].lambda_hat, -1.4562, 1e-3),
        Check("lambda_check_2", certs[2].lambda_check, -1.4562, 1e-3),
        Check("mu_check_12", g12.mu_check, 1.3875e3, 1e-3, "rel"),
        Check("mu_hat_12", g12.mu_hat, 7.0755e3, 1e-3, "rel"),
        Check("mu_check_21", g21.mu_check, 1.4133e-4, 1e-3, "rel"),
        Check("mu_hat_21", g21.mu_hat, 7.2070e-4, 1e-3, "rel"),
        Check("epsilon_2", certs[2].epsilon, 0.7278, 1e-4, informational=True),
        Check("stability_margin", margins.phi_hat_margin, 0.6839, 2e-3),
        Check("instability_margin", margins.phi_check_margin, -0.1277, 2e-3),
        Check("classification", margins.classification.value, "Undetermined", kind="equal"),
    ]
    for i, r in enumerate(s.simulate()):
        checks.append(Check(f"simulation x0[{i}] verdict", r.verdict.value, "Diverging", kind="equal"))
        checks.append(Check(f"simulation x0[{i}] envelopes hold", r.envelope.ok, True, kind="equal"))
    return checks


CASES: dict[str, Callable[[Session], list[Check]]] = {
    "example1": _example1,
    "example3": _example3,
    "example-sigma-prime": _sigma_prime,
    "gap-proof": _gap_proof,
}


def case_config(case: str) -> ProblemConfig:
    try:
        return ProblemConfig.from_dict(CONFIGS[case])
    except KeyError:
        raise KeyError(f"unknown case {case!r}; choose from {sorted(CASES)}") from None


def run_case(case: str) -> tuple[CaseResult, Session]:
    session = Session(case_config(case))
    return CaseResult(case, tuple(CASES[case](session))), session
