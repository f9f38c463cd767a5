"""Multiple Lyapunov-like certificates for a family of linear subsystems.

Each subsystem p gets a quadratic ``V_p(x) = x' P_p x`` together with two
rate scalars bounding ``V_p`` along the p-th flow::

    exp(-lambda_check t) V_p(x0) <= V_p(x(t)) <= exp(-lambda_hat t) V_p(x0)

and each admissible transition (p, q) gets the tight jump gains
``mu_check <= V_q / V_p <= mu_hat``, the extreme eigenvalues of
``P_q inv(P_p)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import numkit
from .errors import (
    Boundary,
    CertificateError,
    EpsilonSearchFailed,
    InvalidFamily,
    SwitchVerdictError,
)

BOUNDARY_TOL = 1e-9
DEFAULT_EPS_OFFSET = 1e-4
MAX_EPS_DOUBLINGS = 60
CANCELLATION_RTOL = 1e-8

Edge = tuple[int, int]


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True, eq=False)
class SubsystemFamily:
    """Subsystem matrices ``A_p`` (ids 1..N) and the admissible transitions E(P)."""

    dim: int
    matrices: Mapping[int, np.ndarray]
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidFamily("dimension must be positive")
        ids = sorted(self.matrices)
        if ids != list(range(1, len(ids) + 1)):
            raise InvalidFamily(f"subsystem ids must be 1..N without gaps, got {ids}")
        mats = {}
        for p in ids:
            try:
                A = numkit.as_matrix(self.matrices[p])
            except ValueError as exc:
                raise InvalidFamily(f"subsystem {p}: {exc}") from exc
            if A.shape != (self.dim, self.dim):
                raise InvalidFamily(f"subsystem {p}: A is {A.shape}, expected {(self.dim, self.dim)}")
            if abs(np.linalg.det(A)) <= 1e-12:
                raise InvalidFamily(f"subsystem {p}: A is (numerically) rank deficient")
            A.setflags(write=False)
            mats[p] = A
        edges = frozenset((int(p), int(q)) for p, q in self.edges)
        for p, q in edges:
            if p == q:
                raise InvalidFamily(f"self-transition ({p},{q}) is not a switch")
            if p not in mats or q not in mats:
                raise InvalidFamily(f"edge ({p},{q}) references an unknown subsystem")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "edges", edges)

    @property
    def modes(self) -> list[int]:
        return sorted(self.matrices)

    def successors(self, p: int) -> list[int]:
        return sorted(q for (a, q) in self.edges if a == p)


@dataclass(frozen=True, eq=False)
class SubsystemCertificate:
    mode: int
    stability: Stability
    Q: np.ndarray
    epsilon: float
    P: np.ndarray
    lambda_hat: float
    lambda_check: float

    def value(self, x: np.ndarray) -> float:
        """``V_p(x) = x' P x``."""
        x = np.asarray(x, dtype=float)
        return float(x @ self.P @ x)


@dataclass(frozen=True)
class EdgeGains:
    edge: Edge
    mu_hat: float
    mu_check: float


@dataclass(frozen=True, eq=False)
class CertificateSet:
    family: SubsystemFamily
    certificates: Mapping[int, SubsystemCertificate]
    gains: Mapping[Edge, EdgeGains]

    def __getitem__(self, p: int) -> SubsystemCertificate:
        return self.certificates[p]

    def stable_modes(self) -> list[int]:
        return [p for p, c in sorted(self.certificates.items()) if c.stability is Stability.STABLE]

    def unstable_modes(self) -> list[int]:
        return [p for p, c in sorted(self.certificates.items()) if c.stability is Stability.UNSTABLE]

    def value(self, p: int, x: np.ndarray) -> float:
        return self.certificates[p].value(x)

    def alpha_bounds(self) -> tuple[float, float]:
        """Constants (c_lo, c_hi) with ``c_lo |x|^2 <= V_p(x) <= c_hi |x|^2`` for every p."""
        ext = [numkit.sym_eig_extrema(c.P) for c in self.certificates.values()]
        return min(e.lambda_min for e in ext), max(e.lambda_max for e in ext)


def classify_subsystem(A: np.ndarray, tol: float = BOUNDARY_TOL) -> Stability:
    """STABLE iff ``A`` is Hurwitz; marginal matrices raise Boundary."""
    abscissa = numkit.spectral_abscissa(A)
    if abs(abscissa) < tol:
        raise Boundary(f"spectral abscissa {abscissa:.3e} is within {tol:g} of zero")
    return Stability.STABLE if abscissa < 0 else Stability.UNSTABLE


def build_certificate(A: np.ndarray, Q: np.ndarray | None = None,
                      eps_offset: float = DEFAULT_EPS_OFFSET, mode: int = 0) -> SubsystemCertificate:
    """Solve for ``P`` and the rate pair (lambda_hat, lambda_check).

    Unstable matrices are shifted by ``eps = abscissa + offset`` so that
    ``A - eps I`` is Hurwitz. The offset is doubled until
    ``2 eps - max eig(Q) / min eig(P) >= 0``, which makes lambda_check <= 0.
    """
    A = numkit.as_matrix(A)
    d = A.shape[0]
    Q = np.eye(d) if Q is None else numkit.as_matrix(Q)
    numkit.cholesky(Q)
    if Q.shape != A.shape:
        raise ValueError(f"Q is {Q.shape} but A is {A.shape}")
    if not eps_offset > 0:
        raise ValueError("eps_offset must be positive")
    stability = classify_subsystem(A)
    q_ext = numkit.sym_eig_extrema(Q)

    if stability is Stability.STABLE:
        P = numkit.solve_lyapunov(A, Q)
        p_ext = numkit.sym_eig_extrema(P)
        return SubsystemCertificate(
            mode=mode, stability=stability, Q=Q, epsilon=0.0, P=P,
            lambda_hat=q_ext.lambda_min / p_ext.lambda_max,
            lambda_check=q_ext.lambda_max / p_ext.lambda_min,
        )

    abscissa = numkit.spectral_abscissa(A)
    offset = eps_offset
    for _ in range(MAX_EPS_DOUBLINGS):
        eps = abscissa + offset
        P = numkit.solve_lyapunov(A - eps * np.eye(d), Q)
        p_ext = numkit.sym_eig_extrema(P)
        growth_lo = 2 * eps - q_ext.lambda_max / p_ext.lambda_min
        # for large eps both terms are ~2 eps; a difference below this is rounding noise
        if growth_lo >= CANCELLATION_RTOL * 2 * eps:
            growth_hi = 2 * eps - q_ext.lambda_min / p_ext.lambda_max
            return SubsystemCertificate(
                mode=mode, stability=stability, Q=Q, epsilon=float(eps), P=P,
                lambda_hat=-growth_hi, lambda_check=-growth_lo,
            )
        offset *= 2
    raise EpsilonSearchFailed(
        f"no epsilon with 2*eps >= max eig(Q)/min eig(P) after {MAX_EPS_DOUBLINGS} doublings"
    )


def edge_gains(cert_p: SubsystemCertificate, cert_q: SubsystemCertificate) -> EdgeGains:
    ext = numkit.pencil_extrema(cert_p.P, cert_q.P)
    return EdgeGains(edge=(cert_p.mode, cert_q.mode), mu_hat=ext.lambda_max, mu_check=ext.lambda_min)


def build_certificate_set(family: SubsystemFamily,
                          Q: Mapping[int, np.ndarray] | None = None,
                          eps_offset: float = DEFAULT_EPS_OFFSET) -> CertificateSet:
    """One certificate per subsystem (Q defaults to identity) and gains per edge."""
    Q = Q or {}
    certs = {}
    for p in family.modes:
        try:
            certs[p] = build_certificate(family.matrices[p], Q.get(p), eps_offset, mode=p)
        except (SwitchVerdictError, ValueError) as exc:
            raise CertificateError(f"subsystem {p}: {exc}", subsystem=p) from exc
    gains = {}
    for edge in sorted(family.edges):
        try:
            gains[edge] = edge_gains(certs[edge[0]], certs[edge[1]])
        except (SwitchVerdictError, ValueError) as exc:
            raise CertificateError(f"edge {edge}: {exc}", edge=edge) from exc
    return CertificateSet(family=family, certificates=certs, gains=gains)
