"""Quantization of the cylinder ``S^1 x I`` with a compact momentum circle.

The state space is spanned by momentum harmonics ``psi_k``, which are
eigenvectors of the position operator with eigenvalue ``k * dx``,
``dx = 2 pi hbar / M``. Matrices act on column vectors. Internal row/column
``i`` holds ``psi_{first_index + i}``; with the default ``first_index = 1``
this is the basis ``psi_1 .. psi_N``.

The shift ``z^m`` sends ``psi_k`` to ``psi_{k+m}`` (zero when that leaves
the basis), so its matrix has ones at ``[k+m, k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import polynomial as npoly

from .errors import ArgumentError, RangeError
from .report import ConvergenceReport

__all__ = [
    "FIRST_STATE",
    "CylinderPhaseSpace",
    "CylinderObservable",
    "ConvergenceReport",
    "position_operator",
    "shift_operator",
    "quantize",
    "quantize_sparse",
    "shift_polynomial",
    "classical_l2_norm",
    "r_norm",
    "poisson_bracket",
    "check_separability",
    "check_von_neumann",
    "check_dirac",
    "check_prop2",
    "interval_phase_space",
    "edge_bulk_split",
    "prop2_terms",
    "parse_n_list",
]

# internal index i = 0 corresponds to psi_1
FIRST_STATE = 1

_FLOOR_SLACK = 1e-9


def _floor(x: float) -> int:
    # exact-fit hbar values land a few ulps below an integer
    return math.floor(x + _FLOOR_SLACK * max(1.0, abs(x)))


@dataclass(frozen=True)
class CylinderPhaseSpace:
    """Position extent ``L``, momentum circumference ``M``, ``hbar`` and ``N`` states."""

    L: float
    M: float
    hbar: float
    N: int
    first_index: int = FIRST_STATE

    def __post_init__(self):
        if not (self.L > 0 and self.M > 0 and self.hbar > 0):
            raise RangeError("L, M and hbar must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise RangeError(f"need at least one state, got N={self.N}")
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def from_hbar(cls, L: float, M: float, hbar: float) -> CylinderPhaseSpace:
        """Bohr-Sommerfeld count ``N = floor(L M / 2 pi hbar)``."""
        if not (L > 0 and M > 0 and hbar > 0):
            raise RangeError("L, M and hbar must be positive")
        return cls(L, M, hbar, _floor(L * M / (2 * math.pi * hbar)))

    @classmethod
    def from_n(cls, L: float, M: float, N: int) -> CylinderPhaseSpace:
        """Exact fit ``hbar = L M / (2 pi N)``, so that ``x_k = k L / N``."""
        if N < 1:
            raise RangeError(f"need at least one state, got N={N}")
        return cls(L, M, L * M / (2 * math.pi * N), N)

    @property
    def dx(self) -> float:
        return 2 * math.pi * self.hbar / self.M

    def positions(self) -> np.ndarray:
        return (self.first_index + np.arange(self.N)) * self.dx


def _clean(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
    nz = np.flatnonzero(c)
    c = c[: nz[-1] + 1] if nz.size else c[:0]
    c.setflags(write=False)
    return c


class CylinderObservable:
    """Finite Laurent sum ``sum_n z^n a_n(x)`` with polynomial ``a_n``.

    ``terms`` maps the Laurent index ``n`` to the ascending coefficient array
    of ``a_n``. Zero terms are dropped on construction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean = {}
        for n, c in (terms or {}).items():
            c = _clean(c)
            if c.size:
                clean[int(n)] = c
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def constant(cls, c: complex) -> CylinderObservable:
        return cls({0: [c]})

    @classmethod
    def x(cls) -> CylinderObservable:
        return cls({0: [0.0, 1.0]})

    @classmethod
    def z(cls, n: int = 1) -> CylinderObservable:
        return cls({n: [1.0]})

    @classmethod
    def monomial(cls, n: int, k: int, c: complex = 1.0) -> CylinderObservable:
        """``c * z^n * x^k``."""
        coeffs = np.zeros(k + 1, dtype=complex)
        coeffs[k] = c
        return cls({n: coeffs})

    def __repr__(self) -> str:
        body = ", ".join(f"{n}: {[complex(v) for v in c]}" for n, c in self.terms.items())
        return f"CylinderObservable({{{body}}})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, CylinderObservable):
            return NotImplemented
        return self.terms.keys() == other.terms.keys() and all(
            np.array_equal(c, other.terms[n]) for n, c in self.terms.items()
        )

    __hash__ = None

    def allclose(self, other: CylinderObservable, atol: float = 1e-12) -> bool:
        diff = self - other
        return all(np.all(np.abs(c) <= atol) for c in diff.terms.values())

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def max_index(self) -> int:
        """Largest ``|n|`` among the nonzero Laurent terms (0 for the zero observable)."""
        return max((abs(n) for n in self.terms), default=0)

    @property
    def degree(self) -> int:
        return max((c.size - 1 for c in self.terms.values()), default=0)

    def _coerce(self, other) -> CylinderObservable:
        if isinstance(other, CylinderObservable):
            return other
        if np.isscalar(other):
            return CylinderObservable.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for n, c in other.terms.items():
            out[n] = npoly.polyadd(out[n], c) if n in out else c
        return CylinderObservable(out)

    __radd__ = __add__

    def __neg__(self):
        return CylinderObservable({n: -c for n, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[int, np.ndarray] = {}
        for n, a in self.terms.items():
            for m, b in other.terms.items():
                prod = npoly.polymul(a, b)
                out[n + m] = npoly.polyadd(out[n + m], prod) if n + m in out else prod
        return CylinderObservable(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ArgumentError("only nonnegative integer powers are defined")
        out = CylinderObservable.constant(1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    def conj(self) -> CylinderObservable:
        """Complex conjugate: ``z^n a_n`` becomes ``z^{-n} conj(a_n)``."""
        return CylinderObservable({-n: np.conj(c) for n, c in self.terms.items()})

    def derivative_x(self) -> CylinderObservable:
        return CylinderObservable({n: npoly.polyder(c) for n, c in self.terms.items() if c.size > 1})


def shift_polynomial(coeffs, c: float) -> np.ndarray:
    """Coefficients of ``p(x + c)`` by binomial expansion."""
    coeffs = np.asarray(coeffs, dtype=complex)
    deg = coeffs.size - 1
    out = np.zeros(max(deg + 1, 0), dtype=complex)
    for k in range(deg + 1):
        if coeffs[k] == 0:
            continue
        for j in range(k + 1):
            out[j] += coeffs[k] * math.comb(k, j) * c ** (k - j)
    return out


def position_operator(ps: CylinderPhaseSpace) -> np.ndarray:
    return np.diag(ps.positions()).astype(complex)


def shift_operator(ps: CylinderPhaseSpace, m: int) -> np.ndarray:
    """Matrix of ``z^m``: ``psi_k -> psi_{k+m}`` inside the basis, else 0."""
    return np.eye(ps.N, k=-int(m), dtype=complex)


def _zx_diagonals(ps: CylinderPhaseSpace, a: CylinderObservable) -> dict[int, np.ndarray]:
    # Q(z^n a_n) = z^n a_n^hbar(x), a_n^hbar(x) = (a_n(x) + a_n(x + n dx)) / 2
    x = ps.positions()
    out = {}
    for n, c in a.terms.items():
        if abs(n) >= ps.N:
            continue
        ah = 0.5 * (npoly.polyval(x, c) + npoly.polyval(x, shift_polynomial(c, n * ps.dx)))
        out[n] = ah
    return out


def quantize_sparse(ps: CylinderPhaseSpace, a: CylinderObservable) -> sp.csr_matrix:
    """Sparse banded form of :func:`quantize` (zx-ordered construction)."""
    N = ps.N
    diags, offsets = [], []
    for n, ah in _zx_diagonals(ps, a).items():
        # entry [k+n, k] carries a_n^hbar(x_k)
        diags.append(ah[: N - n] if n >= 0 else ah[-n:])
        offsets.append(-n)
    if not diags:
        return sp.csr_matrix((N, N), dtype=complex)
    return sp.diags(diags, offsets, shape=(N, N), format="csr", dtype=complex)


def _quantize_symmetric(ps: CylinderPhaseSpace, a: CylinderObservable) -> np.ndarray:
    x = ps.positions()
    out = np.zeros((ps.N, ps.N), dtype=complex)
    for n, c in a.terms.items():
        z = shift_operator(ps, n)
        for k, ck in enumerate(c):
            if ck == 0:
                continue
            xk = x**k
            # (x^k z^n + z^n x^k) / 2 with x diagonal
            out += ck * 0.5 * (xk[:, None] * z + z * xk[None, :])
    return out


def quantize(ps: CylinderPhaseSpace, a: CylinderObservable, method: str = "zx") -> np.ndarray:
    """Dense matrix of ``Q(a) = sum_n (a_n(x) z^n + z^n a_n(x)) / 2``.

    ``method="symmetric"`` builds the symmetrized products literally;
    ``method="zx"`` uses the equivalent ordering ``z^n a_n^hbar(x)``.
    """
    if method == "zx":
        return quantize_sparse(ps, a).toarray()
    if method == "symmetric":
        return _quantize_symmetric(ps, a)
    raise ArgumentError(f"unknown quantization method {method!r}")


def classical_l2_norm(ps: CylinderPhaseSpace, a: CylinderObservable) -> float:
    """``sqrt((1/L) sum_n int_0^L |a_n(x)|^2 dx)``, integrated exactly."""
    total = 0.0
    for c in a.terms.values():
        sq = npoly.polymul(c, np.conj(c))
        anti = npoly.polyint(sq)
        total += float(np.real(npoly.polyval(ps.L, anti) - npoly.polyval(0.0, anti)))
    return math.sqrt(max(total, 0.0) / ps.L)


def r_norm(a: CylinderObservable, R: float) -> float:
    """Coefficient-sum bound ``sum_{n,k} |c_{n,k}| R^k``."""
    if not R > 0:
        raise RangeError("R must be positive")
    return float(sum(np.sum(np.abs(c) * R ** np.arange(c.size)) for c in a.terms.values()))


def poisson_bracket(a: CylinderObservable, b: CylinderObservable, M: float) -> CylinderObservable:
    """``{a, b} = d_p a d_x b - d_x a d_p b`` with ``z = exp(2 pi i p / M)``."""
    out = CylinderObservable()
    k = 2j * math.pi / M
    for n, an in a.terms.items():
        for m, bm in b.terms.items():
            val = npoly.polysub(n * npoly.polymul(an, npoly.polyder(bm)),
                                m * npoly.polymul(npoly.polyder(an), bm))
            out = out + CylinderObservable({n + m: k * np.atleast_1d(val)})
    return out


def parse_n_list(spec) -> list[int]:
    """Parse ``"4,8,16"``, ``"4,8,...,1024"`` or ``"4,..,1024"`` (doubling) into a list.

    Lists and arrays of integers pass through unchanged.
    """
    if not isinstance(spec, str):
        return [int(v) for v in np.atleast_1d(spec)]
    parts = [p.strip() for p in spec.split(",") if p.strip()]
    out: list[int] = []
    i = 0
    while i < len(parts):
        p = parts[i]
        if p in ("...", ".."):
            if not out or i + 1 >= len(parts):
                raise ArgumentError(f"ellipsis needs values on both sides in {spec!r}")
            stop = int(parts[i + 1])
            ratio = out[-1] // out[-2] if len(out) >= 2 and out[-2] > 0 and out[-1] % out[-2] == 0 else 2
            if ratio < 2:
                raise ArgumentError(f"cannot infer a geometric step in {spec!r}")
            v = out[-1] * ratio
            while v < stop:
                out.append(v)
                v *= ratio
            out.append(stop)
            i += 2
            continue
        out.append(int(p))
        i += 1
    if any(v < 1 for v in out):
        raise ArgumentError("N values must be positive")
    return out


def _n_values(N_list) -> list[int]:
    values = parse_n_list(N_list)
    if not values:
        raise ArgumentError("N_list must not be empty")
    return values


def _frob_sparse(A) -> float:
    data = A.data if sp.issparse(A) else np.asarray(A).ravel()
    return math.sqrt(float(np.sum(np.abs(data) ** 2)) / A.shape[0])


def _meta(**kw) -> dict:
    return {k: (v if isinstance(v, str) else repr(v)) for k, v in kw.items()}


def check_separability(a: CylinderObservable, N_list, L: float, M: float) -> ConvergenceReport:
    """Rows ``(N, ||Q(a)||_N, ||a||_classical, residual)`` with ``hbar = L M / 2 pi N``."""
    Ns = _n_values(N_list)
    measured, reference = [], []
    for N in Ns:
        ps = CylinderPhaseSpace.from_n(L, M, N)
        measured.append(_frob_sparse(quantize_sparse(ps, a)))
        reference.append(classical_l2_norm(ps, a))
    return ConvergenceReport.from_measurements(
        Ns, measured, reference, _meta(study="separability", L=L, M=M, observable=repr(a)))


def check_von_neumann(a: CylinderObservable, b: CylinderObservable, N_list, L: float,
                      M: float) -> ConvergenceReport:
    """Rows ``(N, ||Q(a)Q(b) - Q(ab)||_N, 0, residual)``."""
    Ns = _n_values(N_list)
    ab = a * b
    measured = []
    for N in Ns:
        ps = CylinderPhaseSpace.from_n(L, M, N)
        A = quantize_sparse(ps, a) @ quantize_sparse(ps, b) - quantize_sparse(ps, ab)
        measured.append(_frob_sparse(A.tocsr()))
    return ConvergenceReport.from_measurements(
        Ns, measured, 0.0, _meta(study="von_neumann", L=L, M=M, a=repr(a), b=repr(b)))


def _dirac_defect(ps: CylinderPhaseSpace, a, b, bracket):
    Qa, Qb = quantize_sparse(ps, a), quantize_sparse(ps, b)
    return ((Qa @ Qb - Qb @ Qa) / (1j * ps.hbar) - quantize_sparse(ps, bracket)).tocsc()


def check_dirac(a: CylinderObservable, b: CylinderObservable, l: int, N_list, L: float,
                M: float) -> ConvergenceReport:
    """Largest Dirac defect over the bulk basis states ``psi_{l+1} .. psi_{N-l}``."""
    if l < 0:
        raise ArgumentError("l must be nonnegative")
    if max(a.max_index, b.max_index) > l:
        raise ArgumentError("Laurent indices of a and b must not exceed l")
    Ns = _n_values(N_list)
    if min(Ns) - 2 * l < 1:
        raise ArgumentError(f"l={l} leaves no bulk states at N={min(Ns)}")
    bracket = poisson_bracket(a, b, M)
    measured = []
    for N in Ns:
        ps = CylinderPhaseSpace.from_n(L, M, N)
        D = _dirac_defect(ps, a, b, bracket)
        cols = np.sqrt(np.asarray(abs(D).power(2).sum(axis=0)).ravel())
        measured.append(float(cols[l: N - l].max()))
    return ConvergenceReport.from_measurements(
        Ns, measured, 0.0, _meta(study="dirac", L=L, M=M, l=l, a=repr(a), b=repr(b)))


def interval_phase_space(u: float, v: float, M: float, N: int) -> CylinderPhaseSpace:
    """Harmonics ``psi_k``, ``N_1 <= k <= N_2``, for position space ``[u, v]``.

    ``hbar = M (v - u) / (2 pi N)``, ``N_1 = floor(u M / 2 pi hbar)`` and
    ``N_2 = floor(v M / 2 pi hbar)``; the basis has ``N_2 - N_1 + 1`` states.
    """
    if not u < v:
        raise ArgumentError("need u < v")
    if u == 0 or v == 0:
        raise ArgumentError("interval end points must be nonzero")
    hbar = M * (v - u) / (2 * math.pi * N)
    n1 = _floor(u * M / (2 * math.pi * hbar))
    n2 = _floor(v * M / (2 * math.pi * hbar))
    return CylinderPhaseSpace(v - u, M, hbar, n2 - n1 + 1, first_index=n1)


def edge_bulk_split(ps: CylinderPhaseSpace, coeffs: np.ndarray, width: int):
    """Split ``P_N psi`` into edge and bulk parts.

    Edge states are the first and last ``width + 1`` harmonics of the basis;
    everything in between is bulk. Returns ``(edge, bulk)`` coefficient vectors.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    edge = np.zeros_like(coeffs)
    w = min(width + 1, coeffs.size)
    edge[:w] = coeffs[:w]
    edge[coeffs.size - w:] = coeffs[coeffs.size - w:]
    return edge, coeffs - edge


def prop2_terms(a: CylinderObservable, b: CylinderObservable, psi: Callable, ps: CylinderPhaseSpace):
    """Product and commutator defects on ``P_N psi`` with their edge/bulk parts.

    Returns a dict with keys ``product``, ``commutator`` (norms of the
    defects applied to ``P_N psi``), and for each of them the edge and bulk
    contributions and the edge coefficient mass.
    """
    k = ps.first_index + np.arange(ps.N)
    c = np.asarray(psi(k), dtype=complex)
    width = max(a.max_index, b.max_index)
    edge, bulk = edge_bulk_split(ps, c, width)
    Qa, Qb = quantize_sparse(ps, a), quantize_sparse(ps, b)
    prod = (Qa @ Qb - quantize_sparse(ps, a * b)).tocsr()
    comm = ((Qa @ Qb - Qb @ Qa) / (1j * ps.hbar) - quantize_sparse(ps, poisson_bracket(a, b, ps.M))).tocsr()
    out = {"edge_mass": float(np.sum(np.abs(edge)))}
    for name, A in (("product", prod), ("commutator", comm)):
        out[name] = float(np.linalg.norm(A @ c))
        out[name + "_edge"] = float(np.linalg.norm(A @ edge))
        out[name + "_bulk"] = float(np.linalg.norm(A @ bulk))
    return out


def check_prop2(a: CylinderObservable, b: CylinderObservable, psi: Callable, u: float, v: float,
                M: float, N_list) -> ConvergenceReport:
    """Product and commutator defects on ``P_N psi`` for position space ``[u, v]``.

    ``psi`` maps an integer array ``k`` to the Fourier coefficients ``c_k``.
    Two rows per ``N`` (parameter ``N = N_2 - N_1``): the product defect,
    then the commutator defect; see ``metadata["row_order"]``.
    """
    Ns = _n_values(N_list)
    params, measured = [], []
    for N in Ns:
        ps = interval_phase_space(u, v, M, N)
        t = prop2_terms(a, b, psi, ps)
        params += [N, N]
        measured += [t["product"], t["commutator"]]
    return ConvergenceReport.from_measurements(
        params, measured, 0.0,
        _meta(study="prop2", u=u, v=v, M=M, a=repr(a), b=repr(b), row_order="product,commutator"))
