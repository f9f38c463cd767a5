"""Dense real linear algebra for small matrices.

Everything here targets d <= ~20: Lyapunov solves by Kronecker
vectorization, cyclic Jacobi for symmetric spectra, Hessenberg + Francis
double-shift QR for general eigenvalues, and Pade(13) scaling-and-squaring
for the matrix exponential. Functions are pure and never mutate inputs.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ExpmOverflow, NoConvergence, NotSpd, NotSymmetric, SingularLyapunov

SYMMETRY_RTOL = 1e-10
LYAPUNOV_RTOL = 1e-8
KRONECKER_COND_MAX = 1e12


class EigExtrema(NamedTuple):
    lambda_min: float
    lambda_max: float


def as_matrix(obj, square: bool = True) -> np.ndarray:
    """Return ``obj`` as a finite float64 2-D array (a fresh copy)."""
    m = np.array(obj, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def check_symmetric(S: np.ndarray, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    S = as_matrix(S)
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > rtol * scale:
        raise NotSymmetric(f"matrix asymmetry {np.max(np.abs(S - S.T)):.3e} exceeds {rtol:g} relative")
    return S


def cholesky(S: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises NotSpd if ``S`` is not symmetric positive definite."""
    S = check_symmetric(S)
    try:
        return np.linalg.cholesky((S + S.T) / 2)
    except np.linalg.LinAlgError as exc:
        raise NotSpd("matrix is not positive definite (Cholesky failed)") from exc


def is_spd(S: np.ndarray) -> bool:
    try:
        cholesky(S)
    except (NotSpd, NotSymmetric):
        return False
    return True


def solve_lyapunov(A: np.ndarray, Q: np.ndarray, definite: bool = True) -> np.ndarray:
    """Solve ``A.T @ P + P @ A = -Q`` for symmetric ``P``.

    The d^2 x d^2 system ``(I kron A^T + A^T kron I) vec(P) = -vec(Q)`` is
    solved by dense LU and the result symmetrized. With ``definite=True`` the
    solution must pass Cholesky.
    """
    A = as_matrix(A)
    Q = check_symmetric(Q)
    d = A.shape[0]
    if Q.shape != A.shape:
        raise ValueError(f"A is {A.shape} but Q is {Q.shape}")
    eye = np.eye(d)
    K = np.kron(eye, A.T) + np.kron(A.T, eye)
    cond = np.linalg.cond(K)
    if not np.isfinite(cond) or cond > KRONECKER_COND_MAX:
        raise SingularLyapunov(
            f"Kronecker system is singular (cond={cond:.3e}); an eigenvalue pair of A sums to ~0"
        )
    vec_p = np.linalg.solve(K, -Q.reshape(-1, order="F"))
    P = vec_p.reshape(d, d, order="F")
    P = (P + P.T) / 2
    resid = np.linalg.norm(A.T @ P + P @ A + Q)
    if resid > LYAPUNOV_RTOL * np.linalg.norm(Q):
        raise SingularLyapunov(f"Lyapunov residual {resid:.3e} too large")
    if definite:
        cholesky(P)
    return P


def lyapunov_residual(A: np.ndarray, P: np.ndarray, Q: np.ndarray) -> float:
    """Relative Frobenius residual of ``A^T P + P A + Q``."""
    return float(np.linalg.norm(A.T @ P + P @ A + Q) / np.linalg.norm(Q))


def _pow2_scale(a: np.ndarray) -> float:
    """Power of two bringing the largest entry of ``a`` near 1 (exact rescaling)."""
    peak = float(np.max(np.abs(a)))
    if peak == 0.0 or not math.isfinite(peak):
        return 1.0
    return math.ldexp(1.0, min(max(-math.frexp(peak)[1], -1000), 1000))


def jacobi_eigh(S: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ascending eigenvalues ``w`` and orthonormal
    eigenvectors in the columns of ``V``.
    """
    a = check_symmetric(S)
    a = (a + a.T) / 2
    n = a.shape[0]
    v = np.eye(n)
    scale = _pow2_scale(a)
    a = a * scale
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= 1e-15 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                if abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = a[q, p] = 0.0
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) + g == abs(diff):
                    # theta^2 would overflow
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a) / scale
    order = np.argsort(w)
    return w[order], v[:, order]


def sym_eig_extrema(S: np.ndarray) -> EigExtrema:
    w, _ = jacobi_eigh(S)
    return EigExtrema(float(w[0]), float(w[-1]))


def pencil_eigh(Pp: np.ndarray, Pq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of ``Pq @ inv(Pp)`` through the symmetric form ``L^-1 Pq L^-T``.

    ``Pp = L L^T``. The returned vectors ``xi`` (columns) realize the
    Rayleigh ratio ``xi' Pq xi / xi' Pp xi = w`` exactly, so they attain
    the extreme ratios.
    """
    L = cholesky(Pp)
    Pq = check_symmetric(Pq)
    cholesky(Pq)
    if Pq.shape != L.shape:
        raise ValueError("pencil matrices must share a dimension")
    X = np.linalg.solve(L, Pq)
    M = np.linalg.solve(L, X.T)
    M = (M + M.T) / 2
    w, Y = jacobi_eigh(M)
    xi = np.linalg.solve(L.T, Y)
    return w, xi


def pencil_extrema(Pp: np.ndarray, Pq: np.ndarray) -> EigExtrema:
    """Extreme eigenvalues of ``Pq @ inv(Pp)``, i.e. the extreme ratios V_q/V_p."""
    w, _ = pencil_eigh(Pp, Pq)
    # the smallest eigenvalue carries only absolute accuracy; take it as the
    # reciprocal of the largest eigenvalue of the reversed pencil instead
    w_rev, _ = pencil_eigh(Pq, Pp)
    return EigExtrema(float(1.0 / w_rev[-1]), float(w[-1]))


def hessenberg(A: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form by Householder similarity."""
    H = as_matrix(A)
    n = H.shape[0]
    for k in range(n - 2):
        # the reflector only depends on the direction of x; rescale before squaring
        x = H[k + 1:, k] * _pow2_scale(H[k + 1:, k])
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        alpha = -math.copysign(nx, x[0])
        v = x
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        H[k + 1:, :] -= 2.0 * np.outer(v, v @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v)
        H[k + 2:, k] = 0.0
    return H


def _francis_split(a: np.ndarray, max_its: int = 60) -> int:
    """Double-shift QR sweeps on an unreduced Hessenberg block until it splits.

    Works in place on ``a`` (a similarity, so the eigenvalues are kept) and
    returns the row ``k`` whose subdiagonal entry ``a[k, k-1]`` became negligible.
    """
    n = a.shape[0]
    nn = n - 1
    anorm = float(np.sum(np.abs(np.triu(a, -1))))
    # subdiagonals this small are negligible whatever their neighbours (as in LAPACK)
    smlnum = np.finfo(float).tiny * (n / np.finfo(float).eps)
    t = 0.0
    for its in range(max_its + 1):
        for k in range(nn, 0, -1):
            s = abs(a[k - 1, k - 1]) + abs(a[k, k])
            if s == 0.0:
                s = anorm
            if abs(a[k, k - 1]) + s == s or abs(a[k, k - 1]) <= smlnum:
                a[k, k - 1] = 0.0
                a[np.diag_indices(n)] += t
                return k
        if its == max_its:
            raise NoConvergence(f"QR iteration exceeded {max_its} iterations")
        x = a[nn, nn]
        y = a[nn - 1, nn - 1]
        w = a[nn, nn - 1] * a[nn - 1, nn]
        if its in (10, 20, 40):
            # exceptional shift
            t += x
            a[np.diag_indices(n)] -= x
            s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
            y = x = 0.75 * s
            w = -0.4375 * s * s
        m = nn - 2
        while True:
            z = a[m, m]
            r = x - z
            s = y - z
            p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
            q = a[m + 1, m + 1] - z - r - s
            r = a[m + 2, m + 1]
            s = abs(p) + abs(q) + abs(r)
            p /= s
            q /= s
            r /= s
            if m == 0:
                break
            u = abs(a[m, m - 1]) * (abs(q) + abs(r))
            v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
            if u + v == v:
                break
            m -= 1
        for i in range(m + 2, n):
            a[i, i - 2] = 0.0
            if i != m + 2:
                a[i, i - 3] = 0.0
        for k in range(m, nn):
            if k != m:
                p = a[k, k - 1]
                q = a[k + 1, k - 1]
                r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                x = abs(p) + abs(q) + abs(r)
                if x != 0.0:
                    p /= x
                    q /= x
                    r /= x
            s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
            if s == 0.0:
                continue
            if k == m:
                if m != 0:
                    a[k, k - 1] = -a[k, k - 1]
            else:
                a[k, k - 1] = -s * x
            p += s
            x = p / s
            y = q / s
            z = r / s
            q /= p
            r /= p
            for j in range(k, n):
                p = a[k, j] + q * a[k + 1, j]
                if k != nn - 1:
                    p += r * a[k + 2, j]
                    a[k + 2, j] -= p * z
                a[k + 1, j] -= p * y
                a[k, j] -= p * x
            for i in range(0, min(nn, k + 3) + 1):
                p = x * a[i, k] + y * a[i, k + 1]
                if k != nn - 1:
                    p += z * a[i, k + 2]
                    a[i, k + 2] -= p * r
                a[i, k + 1] -= p * q
                a[i, k] -= p
    raise AssertionError("unreachable")


def _hqr(H: np.ndarray, max_its: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of an upper Hessenberg matrix as (real parts, imaginary parts).

    The matrix is cut into unreduced blocks; each block is rescaled by a power
    of two (tracked as an exponent) before iterating, so blocks living at very
    different magnitudes do not underflow each other's shifts.
    """
    wr: list[float] = []
    wi: list[float] = []
    stack = [(np.array(H, dtype=float), 0)]
    while stack:
        B, exp = stack.pop()
        for lo, hi in _hessenberg_blocks(B):
            blk = B[lo:hi, lo:hi]
            scale = _pow2_scale(blk)
            blk = blk * scale
            e = exp + math.frexp(scale)[1] - 1
            if hi - lo == 1:
                re, im = blk[0], np.zeros(1)
            elif hi - lo == 2:
                re, im = _eig2x2(blk)
            else:
                k = _francis_split(blk, max_its)
                stack.append((blk[:k, :k], e))
                stack.append((blk[k:, k:], e))
                continue
            wr.extend(math.ldexp(float(v), -e) for v in re)
            wi.extend(math.ldexp(float(v), -e) for v in im)
    return np.array(wr), np.array(wi)


def _eig2x2(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Roots of ``s^2 - tr s + det`` as (real parts, imaginary parts)."""
    tr = A[0, 0] + A[1, 1]
    half = 0.5 * (A[0, 0] - A[1, 1])
    disc = half * half + A[0, 1] * A[1, 0]
    mid = 0.5 * tr
    if disc >= 0.0:
        root = math.sqrt(disc)
        return np.array([mid - root, mid + root]), np.zeros(2)
    root = math.sqrt(-disc)
    return np.array([mid, mid]), np.array([-root, root])


def _isolate(a: np.ndarray) -> tuple[np.ndarray, list[float]]:
    """Permute out rows/columns that expose an eigenvalue on the diagonal.

    Returns the remaining core block and the isolated eigenvalues.
    """
    idx = list(range(a.shape[0]))
    isolated = []
    changed = True
    while changed and len(idx) > 1:
        changed = False
        sub = a[np.ix_(idx, idx)]
        off = np.abs(sub) * (1 - np.eye(len(idx)))
        for k in range(len(idx)):
            if not off[k].any() or not off[:, k].any():
                isolated.append(float(sub[k, k]))
                del idx[k]
                changed = True
                break
    return a[np.ix_(idx, idx)], isolated


def _hessenberg_blocks(H: np.ndarray) -> list[tuple[int, int]]:
    """Ranges of the unreduced diagonal blocks of a Hessenberg matrix."""
    n = H.shape[0]
    smlnum = np.finfo(float).tiny * (n / np.finfo(float).eps)
    cuts = [0]
    for k in range(1, n):
        s = abs(H[k - 1, k - 1]) + abs(H[k, k])
        if abs(H[k, k - 1]) <= smlnum or (s != 0.0 and abs(H[k, k - 1]) + s == s):
            cuts.append(k)
    cuts.append(n)
    return list(zip(cuts[:-1], cuts[1:]))


def eigvals(A: np.ndarray) -> np.ndarray:
    """All eigenvalues of a real square matrix (complex array).

    Isolated eigenvalues are split off by permutation; the rest is reduced
    to Hessenberg form and solved block by block (closed form up to 2x2,
    shifted QR beyond).
    """
    A = as_matrix(A)
    core, isolated = _isolate(A)
    parts = [np.array(isolated, dtype=complex)]
    if core.shape[0]:
        # Householder norms square the entries; keep them away from under/overflow
        scale = _pow2_scale(core)
        wr, wi = _hqr(hessenberg(core * scale))
        parts.append((wr + 1j * wi) / scale)
    return np.concatenate(parts)


def spectral_abscissa(A: np.ndarray) -> float:
    """Largest real part among the eigenvalues of ``A``."""
    return float(np.max(eigvals(A).real))


# Pade coefficients and theta thresholds for scaling-and-squaring (Higham 2005).
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_uv(A: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[m]
    n = A.shape[0]
    ident = np.eye(n)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
        return U, V
    powers = [ident, A2]
    while len(powers) < (m + 1) // 2:
        powers.append(powers[-1] @ A2)
    U = A @ sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
    V = sum(b[2 * k] * powers[k] for k in range(len(powers)))
    return U, V


def expm(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(A t)`` by Pade scaling-and-squaring.

    Raises ExpmOverflow when the result leaves the floating-point range.
    """
    A = as_matrix(A)
    if not math.isfinite(t):
        raise ValueError("duration must be finite")
    n = A.shape[0]
    if t == 0.0:
        return np.eye(n)
    X = A * t
    norm1 = float(np.max(np.sum(np.abs(X), axis=0)))
    if norm1 == 0.0:
        return np.eye(n)
    with np.errstate(over="raise", invalid="raise"):
        try:
            for m in (3, 5, 7, 9):
                if norm1 <= _THETA[m]:
                    U, V = _pade_uv(X, m)
                    return np.linalg.solve(V - U, V + U)
            s = max(0, int(math.ceil(math.log2(norm1 / _THETA[13]))))
            U, V = _pade_uv(X / 2.0 ** s, 13)
            R = np.linalg.solve(V - U, V + U)
            for _ in range(s):
                R = R @ R
        except FloatingPointError as exc:
            raise ExpmOverflow(f"exp(A t) overflows for ||A t||_1 = {norm1:.3e}") from exc
    if not np.all(np.isfinite(R)):
        raise ExpmOverflow(f"exp(A t) overflows for ||A t||_1 = {norm1:.3e}")
    return R
