"""Quantization over the compact group SU(2).

The state space is the span of the matrix elements of the irreducible
representations, truncated at some spin. A state is labeled by ``(j, m, n)``:
spin ``j``, a weight ``m`` of the row index and a multiplicity label ``n`` for
the column index, all stored doubled as integers (``two_j``, ``two_m``,
``two_n``). Within a spin-``j`` block, states are ordered row-label major
with both labels ascending.

The position operators ``X_a = -hbar J_a`` act on the row index only. The
weight label ``m`` is the eigenvalue of ``X_3 / hbar``, the negative of the
usual magnetic quantum number, so ``[X_a, X_b] = -i hbar eps_abc X_c``.

Everything built from ``X_a`` and from polynomials in ``C = x1^2 + x2^2 +
x3^2`` and ``x3`` is block diagonal in ``j`` and acts as the identity on the
column index. Such operators are stored as :class:`BlockOperator`, one
``(2j+1) x (2j+1)`` block per spin, each carrying multiplicity ``2j+1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import (ArgumentError, PreconditionError, QuantizabilityError, RangeError,
                     TruncationError)
from .report import ConvergenceReport

__all__ = [
    "WeightState",
    "TruncatedRegularRep",
    "BlockOperator",
    "DomainPolynomial",
    "SemialgebraicDomain",
    "DomainEigenspace",
    "FundamentalMultiplication",
    "angular_momentum",
    "position_operators",
    "casimir_spectrum",
    "domain_eigenspace",
    "cap_state_count",
    "cap_count_formula",
    "quantize_observable",
    "quantize_polynomial",
    "bulk_filtration",
    "thickness_ratio",
    "weyl_dimension",
    "multiply_fundamental",
    "check_separability_ball",
    "check_vn_dirac_su2",
    "positivity_check",
    "prequant_bound_check",
    "poisson_bracket",
    "star_product_residual",
]

REL_TOL = 1e-9
SHRINK_DIRECTIONS = 72
SHRINK_RADII = (0.25, 0.5, 0.75, 1.0)
CLOSURE_SAMPLES = 10_000


# ---------------------------------------------------------------- states


@dataclass(frozen=True)
class WeightState:
    """Basis state ``(j, m, n)`` in doubled units."""

    two_j: int
    two_m: int
    two_n: int

    def __post_init__(self):
        j, m, n = self.two_j, self.two_m, self.two_n
        if j < 0 or abs(m) > j or abs(n) > j or (j - m) % 2 or (j - n) % 2:
            raise ArgumentError(f"invalid weight state (2j, 2m, 2n) = ({j}, {m}, {n})")


def _block_offset(two_j):
    # sum_{k < two_j} (k + 1)^2
    return two_j * (two_j + 1) * (2 * two_j + 1) // 6


def _two_j_for_casimir(l2: float, strict: bool = False) -> int:
    """Largest ``2j`` with ``j(j+1) <= l2`` (``< l2`` if strict), or -1."""
    if l2 < 0 or (strict and l2 <= 0):
        return -1
    # j(j+1) = (two_j (two_j + 2)) / 4
    t = int(math.floor(math.sqrt(4 * l2 + 1) - 1)) + 2
    tol = 1e-12 * max(1.0, l2)
    while t >= 0:
        c = t * (t + 2) / 4
        if (c < l2 - tol) if strict else (c <= l2 + tol):
            return t
        t -= 1
    return -1


class TruncatedRegularRep:
    """All spin blocks with ``2j <= two_j_max``, each with ``2j+1`` columns."""

    def __init__(self, two_j_max: int):
        if int(two_j_max) != two_j_max or two_j_max < 0:
            raise RangeError("two_j_max must be a nonnegative integer")
        self.two_j_max = int(two_j_max)
        self._states = None

    @classmethod
    def for_casimir(cls, l: float) -> TruncatedRegularRep:
        """Blocks with Casimir length at most ``l``: ``j(j+1) <= l^2``."""
        return cls(max(_two_j_for_casimir(l * l), 0))

    def __repr__(self) -> str:
        return f"TruncatedRegularRep(two_j_max={self.two_j_max})"

    def __len__(self) -> int:
        return self.dim

    @property
    def dim(self) -> int:
        return _block_offset(self.two_j_max + 1)

    @property
    def two_js(self) -> np.ndarray:
        return np.arange(self.two_j_max + 1)

    def block_slice(self, two_j: int) -> slice:
        start = _block_offset(two_j)
        return slice(start, start + (two_j + 1) ** 2)

    @property
    def states(self) -> np.ndarray:
        """Integer array of shape ``(dim, 3)`` with columns ``two_j, two_m, two_n``."""
        if self._states is None:
            parts = []
            for tj in range(self.two_j_max + 1):
                labels = np.arange(-tj, tj + 1, 2)
                m, n = np.meshgrid(labels, labels, indexing="ij")
                parts.append(np.column_stack([np.full(m.size, tj), m.ravel(), n.ravel()]))
            s = np.concatenate(parts).astype(np.int64)
            s.setflags(write=False)
            self._states = s
        return self._states

    def state(self, i: int) -> WeightState:
        tj, tm, tn = self.states[i]
        return WeightState(int(tj), int(tm), int(tn))

    def index(self, ws: WeightState) -> int:
        if ws.two_j > self.two_j_max:
            raise TruncationError(f"{ws} lies above the truncation two_j_max={self.two_j_max}")
        size = ws.two_j + 1
        return _block_offset(ws.two_j) + ((ws.two_m + ws.two_j) // 2) * size + (ws.two_n + ws.two_j) // 2

    def weights(self):
        """Row weights ``(two_j, two_m)`` without column multiplicity."""
        tj = np.concatenate([np.full(k + 1, k) for k in range(self.two_j_max + 1)])
        tm = np.concatenate([np.arange(-k, k + 1, 2) for k in range(self.two_j_max + 1)])
        return tj, tm


# ---------------------------------------------------------------- block operators


@lru_cache(maxsize=512)
def angular_momentum(two_j: int):
    """Standard ``(J1, J2, J3)`` for spin ``j`` in the basis ``m_std = j, j-1, .., -j``.

    That basis order is the ascending order of the weight label ``-m_std``.
    """
    j = two_j / 2
    m = j - np.arange(two_j + 1)
    jp = np.zeros((two_j + 1, two_j + 1))
    # <m+1| J+ |m> sits one row above the column of m
    jp[np.arange(two_j), np.arange(1, two_j + 1)] = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jm = jp.T
    J1 = 0.5 * (jp + jm)
    J2 = -0.5j * (jp - jm)
    J3 = np.diag(m)
    out = (J1.astype(complex), J2.astype(complex), J3.astype(complex))
    for a in out:
        a.setflags(write=False)
    return out


def _mask_tuple(mask):
    if mask is None:
        return None
    return tuple(np.asarray(b, dtype=bool) for b in mask)


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """Block-diagonal operator ``sum_j B_j (x) 1_{2j+1}``.

    ``blocks[k]`` is the ``(k+1) x (k+1)`` action on the row labels of spin
    ``j = k/2``. With a ``mask`` the operator lives on the subspace of the
    selected row labels (all columns), and norms use that dimension.
    """

    blocks: tuple
    mask: tuple | None = None

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        for k, b in enumerate(blocks):
            if b.shape != (k + 1, k + 1):
                raise ArgumentError(f"block {k} has shape {b.shape}, expected {(k + 1, k + 1)}")
        object.__setattr__(self, "blocks", blocks)
        mask = _mask_tuple(self.mask)
        if mask is not None and len(mask) != len(blocks):
            raise ArgumentError("mask and blocks disagree on the truncation")
        object.__setattr__(self, "mask", mask)

    @property
    def two_j_max(self) -> int:
        return len(self.blocks) - 1

    @property
    def dimension(self) -> int:
        if self.mask is None:
            return _block_offset(len(self.blocks))
        return int(sum((k + 1) * int(m.sum()) for k, m in enumerate(self.mask)))

    @classmethod
    def identity(cls, two_j_max: int, mask=None) -> BlockOperator:
        return cls(tuple(np.eye(k + 1) for k in range(two_j_max + 1)), mask).compress(mask)

    @classmethod
    def scalar(cls, c: complex, two_j_max: int) -> BlockOperator:
        return cls(tuple(c * np.eye(k + 1) for k in range(two_j_max + 1)))

    def _check(self, other: BlockOperator):
        if not isinstance(other, BlockOperator):
            raise ArgumentError("expected a BlockOperator")
        if len(other.blocks) != len(self.blocks):
            raise ArgumentError("operators live on different truncations")
        if (self.mask is None) != (other.mask is None) or (
            self.mask is not None and any(not np.array_equal(a, b) for a, b in zip(self.mask, other.mask))
        ):
            raise ArgumentError("operators live on different subspaces")

    def __add__(self, other):
        self._check(other)
        return BlockOperator(tuple(a + b for a, b in zip(self.blocks, other.blocks)), self.mask)

    def __sub__(self, other):
        self._check(other)
        return BlockOperator(tuple(a - b for a, b in zip(self.blocks, other.blocks)), self.mask)

    def __neg__(self):
        return BlockOperator(tuple(-a for a in self.blocks), self.mask)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return BlockOperator(tuple(c * a for a in self.blocks), self.mask)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        self._check(other)
        return BlockOperator(tuple(a @ b for a, b in zip(self.blocks, other.blocks)), self.mask)

    def adjoint(self) -> BlockOperator:
        return BlockOperator(tuple(a.conj().T for a in self.blocks), self.mask)

    def compress(self, mask) -> BlockOperator:
        """``P B P`` for the row-label projector ``P`` given by ``mask``."""
        if mask is None:
            return self
        mask = _mask_tuple(mask)
        out = []
        for b, m in zip(self.blocks, mask):
            f = m.astype(float)
            out.append(f[:, None] * b * f[None, :])
        return BlockOperator(tuple(out), mask)

    def frob_norm_normalized(self) -> float:
        """``sqrt(Tr(A^H A) / N)`` over the (sub)space, multiplicities included."""
        dim = self.dimension
        if dim == 0:
            raise ArgumentError("operator on an empty subspace")
        total = sum((k + 1) * float(np.sum(np.abs(b) ** 2)) for k, b in enumerate(self.blocks))
        return math.sqrt(total / dim)

    def operator_norm(self) -> float:
        return max((float(np.linalg.norm(b, 2)) for b in self.blocks if b.size), default=0.0)

    def column_norms(self) -> tuple:
        """Per block, ``||A psi||`` for each row-label basis state ``psi``."""
        return tuple(np.sqrt(np.sum(np.abs(b) ** 2, axis=0)) for b in self.blocks)

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue on the (sub)space of a Hermitian operator."""
        best = math.inf
        for k, b in enumerate(self.blocks):
            sel = np.ones(k + 1, bool) if self.mask is None else self.mask[k]
            if not sel.any():
                continue
            sub = b[np.ix_(sel, sel)]
            best = min(best, float(np.linalg.eigvalsh(0.5 * (sub + sub.conj().T))[0]))
        return best

    def to_dense(self) -> np.ndarray:
        """Full matrix on the selected states in representation order."""
        mats = []
        for k, b in enumerate(self.blocks):
            sel = np.ones(k + 1, bool) if self.mask is None else self.mask[k]
            if sel.any():
                mats.append(np.kron(b[np.ix_(sel, sel)], np.eye(k + 1)))
        if not mats:
            return np.zeros((0, 0), dtype=complex)
        return sp.block_diag(mats, format="csr").toarray() if len(mats) > 1 else mats[0]


def _position_blocks(two_j_max: int, hbar: float):
    return [tuple(-hbar * J for J in angular_momentum(k)) for k in range(two_j_max + 1)]


def position_operators(rep: TruncatedRegularRep, hbar: float, dense: bool = True):
    """``(X1, X2, X3)`` with ``X_a = -hbar J_a`` on the row index.

    ``dense=False`` returns :class:`BlockOperator` values instead of matrices.
    """
    if not hbar > 0:
        raise RangeError("hbar must be positive")
    blocks = _position_blocks(rep.two_j_max, hbar)
    ops = tuple(BlockOperator(tuple(b[a] for b in blocks)) for a in range(3))
    return tuple(o.to_dense() for o in ops) if dense else ops


def casimir_spectrum(rep: TruncatedRegularRep, hbar: float) -> np.ndarray:
    """Eigenvalue ``hbar^2 j(j+1)`` of ``X1^2 + X2^2 + X3^2`` for every state."""
    tj = rep.states[:, 0]
    return hbar**2 * tj * (tj + 2) / 4.0


# ---------------------------------------------------------------- polynomials

_LEVI = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}


def _gen_add(a: Mapping, b: Mapping, sign: float = 1.0) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + sign * v
    return {k: v for k, v in out.items() if v != 0}


def _gen_mul(a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = (ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2])
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def _gen_diff(a: Mapping, axis: int) -> dict:
    out = {}
    for k, v in a.items():
        if k[axis]:
            kk = list(k)
            kk[axis] -= 1
            out[tuple(kk)] = out.get(tuple(kk), 0) + v * k[axis]
    return out


def _pad_grid(grid, dtype) -> np.ndarray:
    # ragged rows (C powers) are padded with zeros (x3 powers)
    if isinstance(grid, np.ndarray):
        return np.array(grid, dtype=dtype, ndmin=2)
    seq = (list, tuple, np.ndarray)
    rows = [list(r) for r in grid] if any(isinstance(r, seq) for r in grid) else [list(grid)]
    width = max((len(r) for r in rows), default=0)
    return np.array([r + [0] * (width - len(r)) for r in rows], dtype=dtype, ndmin=2)


class DomainPolynomial:
    """A real or complex polynomial on ``su(2)* = R^3``.

    ``kind == "diagonal"``: a polynomial in ``C = x1^2 + x2^2 + x3^2`` and
    ``x3`` with ``grid[p, q]`` the coefficient of ``C^p x3^q``. It quantizes by
    evaluating at ``(hbar^2 j(j+1), hbar m)``. With ``hbar_units=True`` the
    variables are ``C / hbar^2`` and ``x3 / hbar`` and the grid may hold exact
    fractions.

    ``kind == "general"``: ``terms`` maps exponents ``(k1, k2, k3)`` to
    coefficients of ``x1^k1 x2^k2 x3^k3``; it quantizes by symmetric ordering.
    """

    __slots__ = ("kind", "grid", "terms", "hbar_units")

    def __init__(self, kind: str, grid=None, terms=None, hbar_units: bool = False):
        if kind == "diagonal":
            g = _pad_grid(grid, object if hbar_units else complex)
            if g.ndim != 2:
                raise ArgumentError("diagonal grid must be two-dimensional")
            self.grid = g
            self.terms = None
        elif kind == "general":
            if hbar_units:
                raise ArgumentError("hbar units are only defined for diagonal polynomials")
            self.terms = {tuple(int(e) for e in k): complex(v) for k, v in (terms or {}).items() if v != 0}
            for k in self.terms:
                if len(k) != 3 or min(k) < 0:
                    raise ArgumentError(f"bad exponent {k}")
            self.grid = None
        else:
            raise ArgumentError(f"unknown polynomial kind {kind!r}")
        self.kind = kind
        self.hbar_units = bool(hbar_units)

    # constructors
    @classmethod
    def diagonal(cls, grid, hbar_units: bool = False) -> DomainPolynomial:
        return cls("diagonal", grid=grid, hbar_units=hbar_units)

    @classmethod
    def general(cls, terms: Mapping) -> DomainPolynomial:
        return cls("general", terms=terms)

    @classmethod
    def constant(cls, c: complex) -> DomainPolynomial:
        return cls.diagonal([[c]])

    @classmethod
    def x(cls, a: int) -> DomainPolynomial:
        """Coordinate ``x_a``, ``a`` in ``{1, 2, 3}``; ``x3`` is diagonal kind."""
        if a == 3:
            return cls.diagonal([[0, 1]])
        if a not in (1, 2):
            raise ArgumentError("coordinate index must be 1, 2 or 3")
        e = [0, 0, 0]
        e[a - 1] = 1
        return cls.general({tuple(e): 1.0})

    @classmethod
    def casimir(cls) -> DomainPolynomial:
        return cls.diagonal([[0], [1]])

    def __repr__(self) -> str:
        if self.kind == "diagonal":
            return f"DomainPolynomial.diagonal({self.grid.tolist()}, hbar_units={self.hbar_units})"
        return f"DomainPolynomial.general({self.terms})"

    @property
    def degree(self) -> int:
        if self.kind == "diagonal":
            nz = [(p, q) for p in range(self.grid.shape[0]) for q in range(self.grid.shape[1]) if self.grid[p, q] != 0]
            return max((2 * p + q for p, q in nz), default=0)
        return max((sum(k) for k in self.terms), default=0)

    # conversions
    def physical(self, hbar: float) -> DomainPolynomial:
        """Same polynomial with physical variables ``C`` and ``x3``."""
        if not self.hbar_units:
            return self
        g = np.zeros(self.grid.shape, dtype=complex)
        for p in range(g.shape[0]):
            for q in range(g.shape[1]):
                g[p, q] = complex(self.grid[p, q]) / hbar ** (2 * p + q)
        return DomainPolynomial.diagonal(g)

    def to_general(self, hbar: float | None = None) -> DomainPolynomial:
        """Expand ``C`` into ``x1^2 + x2^2 + x3^2``."""
        if self.kind == "general":
            return self
        if self.hbar_units:
            if hbar is None:
                raise ArgumentError("hbar is needed to expand a polynomial given in hbar units")
            return self.physical(hbar).to_general()
        c_terms = {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0}
        out: dict = {}
        cp = {(0, 0, 0): 1.0}
        for p in range(self.grid.shape[0]):
            for q in range(self.grid.shape[1]):
                c = complex(self.grid[p, q])
                if c != 0:
                    out = _gen_add(out, {(k[0], k[1], k[2] + q): c * v for k, v in cp.items()})
            cp = _gen_mul(cp, c_terms)
        return DomainPolynomial.general(out)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, DomainPolynomial):
            return other
        if np.isscalar(other):
            return DomainPolynomial.constant(other)
        return NotImplemented

    def _pair(self, other):
        if self.hbar_units or other.hbar_units:
            raise ArgumentError("convert hbar-unit polynomials with .physical(hbar) before arithmetic")

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        self._pair(other)
        if self.kind == other.kind == "diagonal":
            shape = tuple(max(a, b) for a, b in zip(self.grid.shape, other.grid.shape))
            g = np.zeros(shape, dtype=complex)
            g[: self.grid.shape[0], : self.grid.shape[1]] += self.grid
            g[: other.grid.shape[0], : other.grid.shape[1]] += other.grid
            return DomainPolynomial.diagonal(g)
        return DomainPolynomial.general(_gen_add(self.to_general().terms, other.to_general().terms))

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            if self.kind == "diagonal":
                return DomainPolynomial.diagonal(self.grid * other, self.hbar_units)
            return DomainPolynomial.general({k: v * other for k, v in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        self._pair(other)
        if self.kind == other.kind == "diagonal":
            a, b = self.grid, other.grid
            g = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=complex)
            for p in range(a.shape[0]):
                for q in range(a.shape[1]):
                    if a[p, q] != 0:
                        g[p: p + b.shape[0], q: q + b.shape[1]] += a[p, q] * b
            return DomainPolynomial.diagonal(g)
        return DomainPolynomial.general(_gen_mul(self.to_general().terms, other.to_general().terms))

    __rmul__ = __mul__

    def conj(self) -> DomainPolynomial:
        if self.kind == "diagonal":
            return DomainPolynomial.diagonal(np.conj(self.grid) if not self.hbar_units else self.grid, self.hbar_units)
        return DomainPolynomial.general({k: np.conj(v) for k, v in self.terms.items()})

    # evaluation
    def values(self, C, x3, hbar: float = 1.0):
        """Evaluate a diagonal polynomial at physical ``(C, x3)``.

        Returns ``(values, scale)`` where ``scale`` sums the absolute values
        of the individual terms, for relative tolerances.
        """
        if self.kind != "diagonal":
            raise QuantizabilityError("only diagonal polynomials are functions of (C, x3)")
        C = np.asarray(C, dtype=float)
        x3 = np.asarray(x3, dtype=float)
        if self.hbar_units:
            C, x3 = C / hbar**2, x3 / hbar
        val = np.zeros(np.broadcast(C, x3).shape, dtype=complex)
        scale = np.zeros(val.shape)
        for p in range(self.grid.shape[0]):
            for q in range(self.grid.shape[1]):
                c = complex(self.grid[p, q])
                if c != 0:
                    term = c * C**p * x3**q
                    val = val + term
                    scale = scale + np.abs(term)
        return val, scale

    def evaluate_xyz(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "diagonal":
            v, _ = self.values(np.sum(pts**2, axis=1), pts[:, 2])
            return v
        out = np.zeros(pts.shape[0], dtype=complex)
        for (a, b, c), v in self.terms.items():
            out += v * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c
        return out

    def exact_value(self, two_j: int, two_m: int) -> Fraction:
        """Exact value at ``C = j(j+1)``, ``x3 = m`` for an hbar-unit polynomial."""
        if not self.hbar_units:
            raise ArgumentError("exact evaluation needs a polynomial in hbar units")
        C = Fraction(two_j * (two_j + 2), 4)
        m = Fraction(two_m, 2)
        total = Fraction(0)
        for p in range(self.grid.shape[0]):
            for q in range(self.grid.shape[1]):
                c = self.grid[p, q]
                if c != 0:
                    total += Fraction(c) * C**p * m**q
        return total

    def r_norm(self, R: float) -> float:
        """``sum |coefficient| R^degree`` over the monomials in ``x1, x2, x3``."""
        g = self.to_general(1.0) if self.hbar_units else self.to_general()
        return float(sum(abs(v) * R ** sum(k) for k, v in g.terms.items()))


def poisson_bracket(a: DomainPolynomial, b: DomainPolynomial, hbar: float | None = None) -> DomainPolynomial:
    """``{a, b} = -eps_abc x_c d_a a d_b b`` from ``{x_a, x_b} = -eps_abc x_c``."""
    ga, gb = a.to_general(hbar).terms, b.to_general(hbar).terms
    out: dict = {}
    for (i, k, c), eps in _LEVI.items():
        da, db = _gen_diff(ga, i), _gen_diff(gb, k)
        if not da or not db:
            continue
        xc = [0, 0, 0]
        xc[c] = 1
        out = _gen_add(out, _gen_mul(_gen_mul(da, db), {tuple(xc): -eps}))
    return DomainPolynomial.general(out)


def _distinct_words(k: tuple) -> list:
    word = [0] * k[0] + [1] * k[1] + [2] * k[2]
    return sorted(set(itertools.permutations(word)))


def _quantize_block(a: DomainPolynomial, two_j: int, hbar: float, X) -> np.ndarray:
    size = two_j + 1
    if a.kind == "diagonal":
        labels = np.arange(-two_j, two_j + 1, 2) / 2
        v, _ = a.values(np.full(size, hbar**2 * two_j * (two_j + 2) / 4), hbar * labels, hbar)
        return np.diag(v)
    out = np.zeros((size, size), dtype=complex)
    eye = np.eye(size, dtype=complex)
    for k, c in a.terms.items():
        words = _distinct_words(k)
        acc = np.zeros((size, size), dtype=complex)
        for w in words:
            prod = eye
            for axis in w:
                prod = prod @ X[axis]
            acc += prod
        out += c * acc / len(words)
    return out


def quantize_polynomial(a: DomainPolynomial, two_j_max: int, hbar: float) -> BlockOperator:
    """``Q(a)`` on the truncated space, before any domain projection."""
    blocks = _position_blocks(two_j_max, hbar)
    return BlockOperator(tuple(_quantize_block(a, k, hbar, blocks[k]) for k in range(two_j_max + 1)))


def star_product_residual(a: DomainPolynomial, b: DomainPolynomial, two_j_max: int, hbar: float) -> float:
    """``||Q(a)Q(b) - Q(ab) - (i hbar / 2) Q({a, b})||_N`` over the truncated space."""
    ga, gb = a.to_general(hbar), b.to_general(hbar)
    Qa = quantize_polynomial(ga, two_j_max, hbar)
    Qb = quantize_polynomial(gb, two_j_max, hbar)
    R = Qa @ Qb - quantize_polynomial(ga * gb, two_j_max, hbar) \
        - (0.5j * hbar) * quantize_polynomial(poisson_bracket(ga, gb), two_j_max, hbar)
    return R.frob_norm_normalized()


# ---------------------------------------------------------------- domains


def _positive(poly: DomainPolynomial, C, x3, hbar: float, two_j=None, two_m=None) -> np.ndarray:
    vals, scale = poly.values(C, x3, hbar)
    v = vals.real
    tol = REL_TOL * scale
    pos = v > tol
    near = np.abs(v) <= tol
    if poly.hbar_units and two_j is not None and near.any():
        tj = np.broadcast_to(two_j, v.shape)
        tm = np.broadcast_to(two_m, v.shape)
        for idx in zip(*np.nonzero(near)):
            pos[idx] = poly.exact_value(int(tj[idx]), int(tm[idx])) > 0
    return pos


@dataclass(frozen=True, eq=False)
class SemialgebraicDomain:
    """Union of basic open sets ``{d_A > 0 for all A}`` in ``su(2)*``.

    ``radius`` bounds ``|x|`` over the domain; it fixes how many spin blocks
    are needed. Constructors of balls and caps fill it in.
    """

    components: tuple
    radius: float | None = None
    radius_hbar_units: bool = False

    def __post_init__(self):
        comps = tuple(tuple(c) for c in self.components)
        if not comps or any(not c for c in comps):
            raise ArgumentError("a domain needs at least one component with at least one polynomial")
        for comp in comps:
            for d in comp:
                if not isinstance(d, DomainPolynomial):
                    raise ArgumentError("defining polynomials must be DomainPolynomial values")
                if d.kind != "diagonal":
                    raise QuantizabilityError("defining polynomials must be diagonal in the weight basis")
        object.__setattr__(self, "components", comps)

    @classmethod
    def ball(cls, R2: float) -> SemialgebraicDomain:
        """``R^2 - C > 0``."""
        return cls(((DomainPolynomial.diagonal([[R2], [-1]]),),), math.sqrt(R2))

    @classmethod
    def cap(cls, R2: float, h: float) -> SemialgebraicDomain:
        """``R^2 - C > 0`` and ``x3 - h > 0``."""
        return cls(((DomainPolynomial.diagonal([[R2], [-1]]), DomainPolynomial.diagonal([[-h, 1]])),),
                   math.sqrt(R2))

    @classmethod
    def exact_ball(cls, s2: int) -> SemialgebraicDomain:
        """Ball holding exactly the spins ``j <= s``: ``(s + 1/2)^2 - C / hbar^2 > 0``."""
        r2 = Fraction((s2 + 1) ** 2, 4)
        return cls(((DomainPolynomial.diagonal([[r2], [-1]], hbar_units=True),),), (s2 + 1) / 2, True)

    @classmethod
    def exact_cap(cls, s2: int, m2: int) -> SemialgebraicDomain:
        """Spins ``j <= s`` and weights ``m > m2 / 2``, in hbar units."""
        r2 = Fraction((s2 + 1) ** 2, 4)
        polys = (DomainPolynomial.diagonal([[r2], [-1]], hbar_units=True),
                 DomainPolynomial.diagonal([[Fraction(-m2, 2), 1]], hbar_units=True))
        return cls((polys,), (s2 + 1) / 2, True)

    @classmethod
    def from_json(cls, doc: Mapping) -> SemialgebraicDomain:
        """Build from ``{"components": [{"polys": [{"vars": "C,x3", "coeffs": [[..]]}]}]}``.

        ``{"exact_units": true, "s2": int, "m2": int}`` gives an exact cap
        (an exact ball when ``m2`` is absent). An optional ``"radius"`` key
        bounds the domain.
        """
        if doc.get("exact_units"):
            if "m2" in doc:
                return cls.exact_cap(int(doc["s2"]), int(doc["m2"]))
            return cls.exact_ball(int(doc["s2"]))
        comps = []
        for comp in doc.get("components", []):
            polys = []
            for p in comp.get("polys", []):
                if p.get("vars", "C,x3").replace(" ", "") != "C,x3":
                    raise QuantizabilityError("domain polynomials must be given in the variables C,x3")
                polys.append(DomainPolynomial.diagonal(p["coeffs"]))
            comps.append(tuple(polys))
        return cls(tuple(comps), doc.get("radius"))

    def union(self, other: SemialgebraicDomain) -> SemialgebraicDomain:
        r = None if self.radius is None or other.radius is None else max(self.radius, other.radius)
        if self.radius_hbar_units != other.radius_hbar_units:
            r = None
        return SemialgebraicDomain(self.components + other.components, r, self.radius_hbar_units)

    def intersection(self, other: SemialgebraicDomain) -> SemialgebraicDomain:
        comps = tuple(a + b for a in self.components for b in other.components)
        radii = [r for r in (self.radius, other.radius) if r is not None]
        same = self.radius_hbar_units == other.radius_hbar_units
        return SemialgebraicDomain(comps, min(radii) if radii and same else None, self.radius_hbar_units)

    def radius_at(self, hbar: float) -> float:
        if self.radius is None:
            raise ArgumentError("this domain has no radius bound; pass radius= when building it")
        return self.radius * hbar if self.radius_hbar_units else self.radius

    def max_two_j(self, hbar: float) -> int:
        """Largest spin that can carry a state of the domain."""
        R = self.radius_at(hbar)
        return max(_two_j_for_casimir((R / hbar) ** 2 * (1 + 1e-12)), 0)

    def weight_mask(self, two_j, two_m, hbar: float, shrink: float = 0.0) -> np.ndarray:
        """Which weights ``(j, m)`` lie in the domain (shrunk inward by ``shrink``)."""
        two_j = np.asarray(two_j)
        two_m = np.asarray(two_m)
        C = hbar**2 * two_j * (two_j + 2) / 4.0
        x3 = hbar * two_m / 2.0
        out = np.zeros(two_j.shape, bool)
        for comp in self.components:
            ok = np.ones(two_j.shape, bool)
            for d in comp:
                if shrink == 0:
                    ok &= _positive(d, C, x3, hbar, two_j, two_m)
                else:
                    ok &= _eroded(d, C, x3, hbar, shrink)
            out |= ok
        return out

    def closure_contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        C = np.sum(pts**2, axis=1)
        out = np.zeros(pts.shape[0], bool)
        for comp in self.components:
            ok = np.ones(pts.shape[0], bool)
            for d in comp:
                # hbar-unit polynomials are sampled at hbar = 1
                v, scale = d.values(C, pts[:, 2], 1.0)
                ok &= v.real >= -REL_TOL * scale
            out |= ok
        return out


def _shrink_offsets():
    ang = 2 * np.pi * np.arange(SHRINK_DIRECTIONS) / SHRINK_DIRECTIONS
    c, s = np.cos(ang), np.sin(ang)
    # make the axis directions exact
    c[np.abs(c) < 1e-12] = 0.0
    s[np.abs(s) < 1e-12] = 0.0
    c[np.abs(np.abs(c) - 1) < 1e-12] = np.sign(c[np.abs(np.abs(c) - 1) < 1e-12])
    s[np.abs(np.abs(s) - 1) < 1e-12] = np.sign(s[np.abs(np.abs(s) - 1) < 1e-12])
    offs = [(0.0, 0.0)] + [(r * ci, r * si) for r in SHRINK_RADII for ci, si in zip(c, s)]
    return np.array(offs)


_OFFSETS = _shrink_offsets()


def _eroded(d: DomainPolynomial, C, x3, hbar: float, shrink: float) -> np.ndarray:
    # positive on the whole disk of radius `shrink` around (sqrt(C), x3)
    r = np.sqrt(C)
    ok = np.ones(np.shape(C), bool)
    for dr, dz in _OFFSETS:
        rr = r + shrink * dr
        ok &= _positive(d, rr * rr, x3 + shrink * dz, hbar)
    return ok


@dataclass(frozen=True, eq=False)
class DomainEigenspace:
    """Joint positive eigenspace of the quantized defining polynomials."""

    rep: TruncatedRegularRep
    hbar: float
    label_mask: tuple
    domain: SemialgebraicDomain | None = None

    @property
    def selected(self) -> np.ndarray:
        """Boolean mask over ``rep.states``."""
        return np.concatenate([np.repeat(m, k + 1) for k, m in enumerate(self.label_mask)])

    @property
    def dimension(self) -> int:
        return int(sum((k + 1) * int(m.sum()) for k, m in enumerate(self.label_mask)))

    def projector(self) -> BlockOperator:
        return BlockOperator(tuple(np.diag(m.astype(float)) for m in self.label_mask), self.label_mask)


def _label_blocks(rep_two_j_max: int, flat: np.ndarray) -> tuple:
    out, pos = [], 0
    for k in range(rep_two_j_max + 1):
        out.append(flat[pos: pos + k + 1].copy())
        pos += k + 1
    return tuple(out)


def domain_eigenspace(dom: SemialgebraicDomain, rep: TruncatedRegularRep, hbar: float) -> DomainEigenspace:
    """Select the weights where every defining polynomial is strictly positive."""
    if not hbar > 0:
        raise RangeError("hbar must be positive")
    for comp in dom.components:
        for d in comp:
            if d.kind != "diagonal":
                raise QuantizabilityError("defining polynomials must be diagonal")
    tj, tm = rep.weights()
    flat = dom.weight_mask(tj, tm, hbar)
    # the domain must not continue above the truncation
    above = rep.two_j_max + 1
    if dom.weight_mask(np.full(above + 1, above), np.arange(-above, above + 1, 2), hbar).any():
        raise TruncationError(f"domain extends above two_j_max={rep.two_j_max}")
    return DomainEigenspace(rep, hbar, _label_blocks(rep.two_j_max, flat), dom)


def eigenspace_for(dom: SemialgebraicDomain, hbar: float) -> DomainEigenspace:
    """Domain eigenspace on the smallest truncation that contains it."""
    return domain_eigenspace(dom, TruncatedRegularRep(dom.max_two_j(hbar)), hbar)


def cap_state_count(s2: int, m2: int) -> int:
    """Number of states with ``j <= s`` and weight ``m > m0`` (multiplicity included).

    ``s2 = 2s`` and ``m2 = 2 m0`` are integers; the count is done exactly
    block by block.
    """
    if s2 < 0:
        raise RangeError("s2 must be nonnegative")
    total = 0
    for tj in range(s2 + 1):
        low = m2 + 1
        if (low - tj) % 2:
            low += 1
        low = max(low, -tj)
        if low <= tj:
            total += (tj + 1) * ((tj - low) // 2 + 1)
    return total


def cap_count_formula(s2: int, m2: int) -> Fraction:
    """Closed form ``(2/3)(s-m)(2s-2m+1)(2s+m+2)`` in exact arithmetic.

    It sums ``(2j+1)(2j-2m)`` over ``j = m+1/2 .. s``, which steps the weight
    in half units and so counts about twice the states of
    :func:`cap_state_count`.
    """
    s, m = Fraction(s2, 2), Fraction(m2, 2)
    return Fraction(2, 3) * (s - m) * (2 * s - 2 * m + 1) * (2 * s + m + 2)


def quantize_observable(E: DomainEigenspace, a: DomainPolynomial) -> BlockOperator:
    """``Q^D(a) = P_D Q(a) P_D`` as a block operator on the domain eigenspace."""
    if a.hbar_units:
        a = a.physical(E.hbar)
    return quantize_polynomial(a, E.rep.two_j_max, E.hbar).compress(E.label_mask)


def bulk_filtration(E: DomainEigenspace, t: float) -> tuple:
    """Label masks of the bulk states of degree ``t``.

    Each defining polynomial must stay positive on the disk of radius
    ``hbar t`` around the state's point ``(hbar sqrt(j(j+1)), hbar m)``;
    for a cap this is the cap with ``R - hbar t`` and ``h + hbar t``.
    """
    if t < 0:
        raise ArgumentError("t must be nonnegative")
    if t == 0:
        return tuple(m.copy() for m in E.label_mask)
    if E.domain is None:
        raise ArgumentError("the eigenspace does not record its domain")
    tj, tm = E.rep.weights()
    flat = E.domain.weight_mask(tj, tm, E.hbar, shrink=E.hbar * t)
    blocks = _label_blocks(E.rep.two_j_max, flat)
    return tuple(b & m for b, m in zip(blocks, E.label_mask))


def _masked_dim(masks) -> int:
    return int(sum((k + 1) * int(m.sum()) for k, m in enumerate(masks)))


def _meta(**kw) -> dict:
    return {k: (v if isinstance(v, str) else repr(v)) for k, v in kw.items()}


def thickness_ratio(dom: SemialgebraicDomain | None, t: float, hbar_list, R_fixed: float | None = None,
                    h_fixed: float | None = None) -> ConvergenceReport:
    """Rows ``(hbar, dim bulk / dim total, 1, residual)`` at fixed classical domain.

    With ``dom=None`` the domain is the cap of radius ``R_fixed`` above
    ``x3 = h_fixed``.
    """
    if dom is None:
        if R_fixed is None or h_fixed is None:
            raise ArgumentError("give a domain or both R_fixed and h_fixed")
        dom = SemialgebraicDomain.cap(R_fixed**2, h_fixed)
    hs = [float(h) for h in np.atleast_1d(hbar_list)]
    if not hs:
        raise ArgumentError("hbar_list must not be empty")
    ratios = []
    for h in hs:
        E = eigenspace_for(dom, h)
        total = E.dimension
        if total == 0:
            raise ArgumentError(f"the domain has no states at hbar={h}")
        ratios.append(_masked_dim(bulk_filtration(E, t)) / total)
    return ConvergenceReport.from_measurements(hs, ratios, 1.0, _meta(study="thickness", t=t))


def weyl_dimension(l: float) -> int:
    """``sum (2j+1)^2`` over spins with ``j(j+1) <= l^2``."""
    if l < 0:
        raise RangeError("l must be nonnegative")
    top = _two_j_for_casimir(l * l)
    return _block_offset(top + 1)


# ---------------------------------------------------------------- spin-1/2 multiplication


def _cg_half(two_j, two_mu, two_alpha, up):
    """``<j mu; 1/2 alpha | j' mu+alpha>`` for ``j' = j + 1/2`` (up) or ``j - 1/2``."""
    j = two_j / 2
    mu = two_mu / 2
    d = 2 * j + 1
    if up:
        return np.where(two_alpha > 0, np.sqrt((j + mu + 1) / d), np.sqrt((j - mu + 1) / d))
    return np.where(two_alpha > 0, -np.sqrt(np.maximum(j - mu, 0) / d), np.sqrt(np.maximum(j + mu, 0) / d))


@dataclass(frozen=True, eq=False)
class FundamentalMultiplication:
    """Sparse matrix of multiplication by a spin-1/2 matrix element.

    ``leaked`` is true when some image had components above the truncation;
    those components are dropped.
    """

    matrix: sp.csr_matrix
    leaked: bool
    a2: int
    b2: int


def multiply_fundamental(rep: TruncatedRegularRep, a2: int, b2: int) -> FundamentalMultiplication:
    """Multiplication by the spin-1/2 representative function with labels ``(a, b)``.

    ``a2, b2 = +-1`` are the doubled shifts of the row weight and the column
    label. The basis is orthonormal in ``L^2(SU(2))`` (spin-``j`` elements
    scaled by ``sqrt(2j+1)``), so a state ``(j, m, n)`` goes to
    ``sum_{j'} sqrt((2j+1)/(2j'+1)) c(j', m) c(j', n) (j', m + a/2, n + b/2)``
    with spin-1/2 Clebsch-Gordan coefficients ``c``.
    """
    if a2 not in (-1, 1) or b2 not in (-1, 1):
        raise ArgumentError("a2 and b2 must be +1 or -1")
    s = rep.states
    tj, tm, tn = s[:, 0], s[:, 1], s[:, 2]
    src = np.arange(s.shape[0])
    rows, cols, vals = [], [], []
    leaked = False
    for up in (True, False):
        tj2 = tj + (1 if up else -1)
        tm2, tn2 = tm + a2, tn + b2
        ok = (tj2 >= 0) & (np.abs(tm2) <= tj2) & (np.abs(tn2) <= tj2)
        if up:
            out_of_range = ok & (tj2 > rep.two_j_max)
            leaked = leaked or bool(out_of_range.any())
            ok &= tj2 <= rep.two_j_max
        # labels are minus the standard magnetic numbers
        c = (np.sqrt((tj + 1) / np.maximum(tj2 + 1.0, 1.0))
             * _cg_half(tj, -tm, -a2, up) * _cg_half(tj, -tn, -b2, up))
        ok &= c != 0
        t_j, t_m, t_n = tj2[ok], tm2[ok], tn2[ok]
        size = t_j + 1
        dest = _block_offset(t_j) + ((t_m + t_j) // 2) * size + (t_n + t_j) // 2
        rows.append(dest)
        cols.append(src[ok])
        vals.append(c[ok])
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(rep.dim, rep.dim))
    return FundamentalMultiplication(M, leaked, a2, b2)


def check_separability_ball(a2: int, b2: int, l_list, hbar_rule: str = "R_over_l") -> ConvergenceReport:
    """``||Q^D(f)||_N^2`` on the ball of Casimir length ``l`` against ``int |f|^2 = 1/2``.

    ``f`` is the spin-1/2 matrix element ``(a2, b2)``; ``a2 = b2 = 0``
    stands for the constant function 1 (reference 1). The ball holds the
    spins with ``j(j+1) < l^2``; ``hbar = R / l`` drops out of the norm.
    """
    if hbar_rule != "R_over_l":
        raise ArgumentError("only hbar_rule='R_over_l' is supported")
    ls = [float(v) for v in np.atleast_1d(l_list)]
    if not ls:
        raise ArgumentError("l_list must not be empty")
    constant = a2 == 0 and b2 == 0
    measured = []
    for l in ls:
        top = _two_j_for_casimir(l * l, strict=True)
        if top < 0:
            raise ArgumentError(f"no states with j(j+1) < {l * l}")
        if constant:
            measured.append(1.0)
            continue
        rep = TruncatedRegularRep(top + 1)
        M = multiply_fundamental(rep, a2, b2).matrix
        n_ball = _block_offset(top + 1)
        sub = M[:n_ball, :n_ball]
        measured.append(float(np.sum(np.abs(sub.data) ** 2)) / n_ball)
    ref = 1.0 if constant else 0.5
    return ConvergenceReport.from_measurements(ls, measured, ref, _meta(study="separability_ball", a2=a2, b2=b2))


# ---------------------------------------------------------------- correspondence checks


def check_vn_dirac_su2(a: DomainPolynomial, b: DomainPolynomial, dom: SemialgebraicDomain, t: float,
                       hbar_list) -> ConvergenceReport:
    """Von Neumann and Dirac defects on the domain eigenspace, per ``hbar``.

    Two rows per ``hbar``: ``||Q^D(a)Q^D(b) - Q^D(ab)||_N``, then the largest
    ``||((i hbar)^-1 [Q^D(a), Q^D(b)] - Q^D({a,b})) psi||`` over bulk states
    ``psi`` of degree ``2t``. ``metadata["thick_warning"]`` is ``"True"``
    when fewer than half the states are bulk at the smallest ``hbar``.
    """
    hs = [float(h) for h in np.atleast_1d(hbar_list)]
    if not hs:
        raise ArgumentError("hbar_list must not be empty")
    params, measured = [], []
    ratio_at_smallest = None
    for h in hs:
        E = eigenspace_for(dom, h)
        if E.dimension == 0:
            raise ArgumentError(f"the domain has no states at hbar={h}")
        pa, pb = (p.physical(h) if p.hbar_units else p for p in (a, b))
        Qa, Qb = quantize_observable(E, pa), quantize_observable(E, pb)
        vn = (Qa @ Qb - quantize_observable(E, pa * pb)).frob_norm_normalized()
        bracket = poisson_bracket(pa, pb)
        D = (Qa @ Qb - Qb @ Qa) / (1j * h) - quantize_observable(E, bracket)
        bulk = bulk_filtration(E, 2 * t)
        dirac = 0.0
        for cn, m in zip(D.column_norms(), bulk):
            if m.any():
                dirac = max(dirac, float(cn[m].max()))
        if h == min(hs):
            ratio_at_smallest = _masked_dim(bulk) / E.dimension
        params += [h, h]
        measured += [vn, dirac]
    meta = _meta(study="vn_dirac", t=t, row_order="von_neumann,dirac",
                 thick_warning=str(ratio_at_smallest < 0.5), bulk_ratio=ratio_at_smallest)
    return ConvergenceReport.from_measurements(params, measured, 0.0, meta)


def _sample_closure(dom: SemialgebraicDomain, hbar: float, n: int, seed: int) -> np.ndarray:
    R = dom.radius_at(hbar)
    rng = np.random.default_rng(seed)
    pts = []
    count = 0
    for _ in range(1000):
        cand = rng.uniform(-R, R, size=(4 * n, 3))
        cand = cand[np.sum(cand**2, axis=1) <= R * R]
        if dom.radius_hbar_units:
            keep = dom.closure_contains(cand / hbar)
        else:
            keep = dom.closure_contains(cand)
        pts.append(cand[keep])
        count += int(keep.sum())
        if count >= n:
            break
    if count == 0:
        raise PreconditionError("could not sample any point of the domain closure")
    return np.concatenate(pts)[:n]


def positivity_check(dom: SemialgebraicDomain, f: DomainPolynomial, hbar_list,
                     samples: int = CLOSURE_SAMPLES, seed: int = 0) -> ConvergenceReport:
    """Smallest eigenvalue of ``Q^D(f)`` for ``f`` positive on the closure of the domain.

    Rows ``(hbar, min eigenvalue, 0, max(0, -min eigenvalue))``; the
    ``measured`` column holds the clipped violation so that ``residual`` is
    the violation, and ``metadata["min_eigenvalues"]`` lists the raw values.
    """
    hs = [float(h) for h in np.atleast_1d(hbar_list)]
    if not hs:
        raise ArgumentError("hbar_list must not be empty")
    pts = _sample_closure(dom, min(hs), samples, seed)
    fv = f.evaluate_xyz(pts) if not f.hbar_units else f.physical(min(hs)).evaluate_xyz(pts)
    if np.any(fv.real <= 0):
        raise PreconditionError("f is not strictly positive on the sampled closure of the domain")
    mins, viol = [], []
    for h in hs:
        E = eigenspace_for(dom, h)
        lam = quantize_observable(E, f).min_eigenvalue()
        mins.append(lam)
        viol.append(max(0.0, -lam))
    meta = _meta(study="positivity", min_eigenvalues=",".join(repr(v) for v in mins))
    return ConvergenceReport.from_measurements(hs, viol, 0.0, meta)


def prequant_bound_check(a: DomainPolynomial, l: float, hbar: float) -> bool:
    """``||Q(a) psi|| <= |a|_{hbar l} ||psi||`` for every basis state of ``F_l``."""
    top = _two_j_for_casimir(l * l)
    if top < 0:
        return True
    if a.hbar_units:
        a = a.physical(hbar)
    bound = a.r_norm(hbar * l)
    Q = quantize_polynomial(a, top, hbar)
    worst = max(float(c.max()) for c in Q.column_norms())
    return worst <= bound * (1 + 1e-12) + 1e-300
