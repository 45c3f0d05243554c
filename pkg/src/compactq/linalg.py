"""Dense complex linear algebra and Bessel functions.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` (or ``float64``
where the caller has real data); nothing here mutates its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DimensionError, IterationError, RangeError, SymmetryError

__all__ = [
    "SymTridiag",
    "as_matrix",
    "adjoint",
    "frob_norm_normalized",
    "operator_norm",
    "expm",
    "expm_action",
    "hermitian_eigen",
    "tridiag_eigenvalues",
    "bessel_j",
    "bessel_j_orders",
]

EXPM_TAYLOR_ORDER = 18
EXPM_SCALED_NORM = 0.5
BESSEL_MAX_ORDER = 10_000
BESSEL_MAX_ARG = 10_000.0
BESSEL_SERIES_ARG = 1e-3


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got shape {A.shape}")
    return A


def _square(A) -> np.ndarray:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {A.shape}")
    return A


def adjoint(A) -> np.ndarray:
    return as_matrix(A).conj().T


def frob_norm_normalized(A) -> float:
    """Return ``sqrt(Tr(A^H A) / N)`` for a square ``N x N`` matrix."""
    A = _square(A)
    return float(np.sqrt(np.sum(np.abs(A) ** 2) / A.shape[0]))


def operator_norm(A, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest singular value by power iteration on ``A^H A``.

    The start vector is the normalized all-ones vector, so results are
    reproducible. Convergence is declared when successive Rayleigh quotients
    agree to relative precision ``tol``.
    """
    A = _square(A)
    if tol <= 0:
        raise RangeError("tol must be positive")
    n = A.shape[0]
    if not np.any(A):
        return 0.0
    AH = A.conj().T
    v = np.full(n, 1.0 / math.sqrt(n), dtype=complex)
    lam_old = -1.0
    lam = 0.0
    for _ in range(max_iter):
        w = AH @ (A @ v)
        lam = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the kernel of A; restart from a fixed non-uniform vector
            v = np.arange(1, n + 1, dtype=complex)
            v /= np.linalg.norm(v)
            continue
        if abs(lam - lam_old) <= tol * abs(lam):
            return math.sqrt(max(lam, 0.0))
        lam_old = lam
        v = w / nw
    raise IterationError("operator_norm: power iteration did not converge", math.sqrt(max(lam, 0.0)))


def _scaling_exponent(A: np.ndarray) -> int:
    # max(1-norm, inf-norm) bounds the spectral norm from above
    norm = max(np.abs(A).sum(axis=0).max(), np.abs(A).sum(axis=1).max())
    if norm <= EXPM_SCALED_NORM:
        return 0
    return int(math.ceil(math.log2(norm / EXPM_SCALED_NORM)))


def expm(A, tol: float = 1e-15) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor kernel.

    ``A`` is scaled by ``2**-s`` so that its norm is at most 0.5, the Taylor
    series is summed to order 18 (or until terms drop below ``tol``), and the
    result is squared ``s`` times.
    """
    A = _square(A).astype(complex)
    s = _scaling_exponent(A)
    B = A / (2.0 ** s)
    n = A.shape[0]
    result = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, EXPM_TAYLOR_ORDER + 1):
        term = term @ B / k
        result = result + term
        if np.abs(term).max() <= tol * np.abs(result).max():
            break
    for _ in range(s):
        result = result @ result
    return result


def expm_action(A, v, tol: float = 1e-15) -> np.ndarray:
    """Compute ``expm(A) @ v`` without forming the exponential.

    Same scaling rule and Taylor kernel as :func:`expm`, applied ``2**s``
    times to the vector. ``A`` may be dense or a scipy sparse matrix.
    """
    if hasattr(A, "tocsr"):
        shape = A.shape
        abs_a = abs(A)
        norm = max(abs_a.sum(axis=0).max(), abs_a.sum(axis=1).max())
    else:
        A = _square(A)
        shape = A.shape
        norm = max(np.abs(A).sum(axis=0).max(), np.abs(A).sum(axis=1).max())
    v = np.asarray(v, dtype=complex)
    if v.shape != (shape[1],):
        raise DimensionError(f"vector of length {v.shape} does not match matrix {shape}")
    s = 0 if norm <= EXPM_SCALED_NORM else int(math.ceil(math.log2(norm / EXPM_SCALED_NORM)))
    scale = 2.0 ** -s
    if not hasattr(A, "tocsr"):
        A = A.astype(complex, copy=False)
    out = v.copy()
    for _ in range(2 ** s):
        acc = out.copy()
        term = out
        for k in range(1, EXPM_TAYLOR_ORDER + 1):
            term = (A @ term) * (scale / k)
            acc = acc + term
            if np.linalg.norm(term) <= tol * np.linalg.norm(acc):
                break
        out = acc
    return out


def _off_diagonal_mass(A: np.ndarray) -> float:
    return float(np.sum(np.abs(A - np.diag(np.diag(A))) ** 2))


def hermitian_eigen(A, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and the
    eigenvectors in the columns of ``V``.
    """
    A = _square(A).astype(complex)
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > max(tol, 1e-13) * max(scale, 1.0):
        raise SymmetryError("hermitian_eigen: matrix is not Hermitian")
    n = A.shape[0]
    A = 0.5 * (A + A.conj().T)
    V = np.eye(n, dtype=complex)
    target = (tol * scale) ** 2
    for _ in range(max_sweeps):
        off = _off_diagonal_mass(A)
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                a = abs(apq)
                if a <= 1e-20 * scale:
                    # negligible entry; rotating by a subnormal phase would break unitarity
                    A[p, q] = A[q, p] = 0.0
                    continue
                phase = apq / a
                phase /= abs(phase)
                tau = (A[q, q].real - A[p, p].real) / (2.0 * a)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # unitary U on (p, q): columns (c, -s e^{-i phi}) and (s, c e^{-i phi})
                ph = np.conj(phase)
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * ph * colq
                A[:, q] = s * colp + c * ph * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * phase * rowq
                A[q, :] = s * rowp + c * phase * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * ph * vq
                V[:, q] = s * vp + c * ph * vq
    else:
        off = _off_diagonal_mass(A)
        if off > target:
            raise IterationError("hermitian_eigen: Jacobi sweeps did not converge", float(math.sqrt(off)))
    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass(frozen=True)
class SymTridiag:
    """Real symmetric tridiagonal matrix stored by its two diagonals."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).copy()
        e = np.asarray(self.offdiag, dtype=float).copy()
        if d.ndim != 1 or d.size < 1 or e.shape != (d.size - 1,):
            raise DimensionError("SymTridiag needs diag of length n >= 1 and offdiag of length n-1")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@numba.njit(cache=True)
def _bisect_all(d, e2, lo0, hi0, tol, pivmin):
    # Bisect every eigenvalue in lockstep. For each midpoint x[k] the Sturm
    # count (number of negative LDL^T pivots of T - x) decides the half.
    n = d.size
    lo = np.full(n, lo0)
    hi = np.full(n, hi0)
    x = np.empty(n)
    q = np.empty(n)
    cnt = np.empty(n, dtype=np.int64)
    while True:
        width = 0.0
        for k in range(n):
            width = max(width, hi[k] - lo[k])
            x[k] = 0.5 * (lo[k] + hi[k])
        if width <= tol:
            break
        for k in range(n):
            q[k] = d[0] - x[k]
            if abs(q[k]) < pivmin:
                q[k] = -pivmin
            cnt[k] = 1 if q[k] < 0.0 else 0
        for i in range(1, n):
            di = d[i]
            ei = e2[i - 1]
            for k in range(n):
                v = di - x[k] - ei / q[k]
                if abs(v) < pivmin:
                    v = -pivmin
                q[k] = v
                cnt[k] += 1 if v < 0.0 else 0
        stalled = True
        for k in range(n):
            if x[k] > lo[k] and x[k] < hi[k]:
                stalled = False
            if cnt[k] > k:
                hi[k] = x[k]
            else:
                lo[k] = x[k]
        if stalled:
            break
    return 0.5 * (lo + hi)


def tridiag_eigenvalues(T: SymTridiag, tol: float = 1e-13) -> np.ndarray:
    """All eigenvalues of ``T`` (ascending) by Sturm-sequence bisection."""
    d, e = T.diag, T.offdiag
    n = d.size
    if n == 1:
        return d.copy()
    radius = np.zeros(n)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    lo0 = float(np.min(d - radius))
    hi0 = float(np.max(d + radius))
    width = max(hi0 - lo0, 1e-300)
    lo0 -= 1e-12 * width
    hi0 += 1e-12 * width
    e2 = e * e
    pivmin = max(np.finfo(float).tiny, np.finfo(float).eps ** 2 * max(1.0, float(np.max(e2))))
    return _bisect_all(d, e2, lo0, hi0, float(tol), pivmin)


def _bessel_series(nmax: int, x: float) -> np.ndarray:
    n = np.arange(nmax + 1)
    with np.errstate(under="ignore"):
        lead = np.exp(n * (math.log(x) - math.log(2.0)) - np.array([math.lgamma(k + 1) for k in n]))
        q = (x / 2) ** 2
        # three terms of the ascending series suffice for x < 1e-3
        corr = 1 - q / (n + 1) + q * q / (2 * (n + 1) * (n + 2))
    return lead * corr


def bessel_j_orders(nmax: int, w: float) -> np.ndarray:
    """``J_0(w) .. J_nmax(w)`` by Miller's backward recurrence.

    The recurrence is normalized with ``J_0 + 2 * sum_k J_2k = 1``.
    """
    if nmax < 0 or nmax > BESSEL_MAX_ORDER:
        raise RangeError(f"Bessel order must lie in [0, {BESSEL_MAX_ORDER}], got {nmax}")
    if not math.isfinite(w) or abs(w) > BESSEL_MAX_ARG:
        raise RangeError(f"Bessel argument must satisfy |w| <= {BESSEL_MAX_ARG}, got {w}")
    out = np.zeros(nmax + 1)
    x = abs(float(w))
    if x == 0.0:
        out[0] = 1.0
        return out
    if x < BESSEL_SERIES_ARG:
        # the backward recurrence overflows in a single step for tiny x
        out = _bessel_series(nmax, x)
        if w < 0:
            out[1::2] *= -1.0
        return out
    big = max(nmax, math.ceil(x))
    # extra sqrt term covers the turning-point region of width ~ x**(1/3) for large x
    start = nmax + 20 + math.ceil(x) + math.ceil(math.sqrt(40.0 * big))
    start += start % 2
    j_next = 0.0
    j_cur = 1e-300
    norm = 0.0
    two_over_x = 2.0 / x
    for k in range(start, 0, -1):
        j_prev = k * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds the unnormalized J_{k-1}
        m = k - 1
        if m <= nmax:
            out[m] = j_cur
        if m % 2 == 0 and m > 0:
            norm += 2.0 * j_cur
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            out *= 1e-250
    norm += j_cur
    out /= norm
    if w < 0:
        out[1::2] *= -1.0
    return out


def bessel_j(n: int, w: float) -> float:
    """Bessel function of the first kind ``J_n(w)`` for integer ``n >= 0``."""
    if n < 0:
        raise RangeError("bessel_j expects a nonnegative order")
    return float(bessel_j_orders(int(n), w)[n])
