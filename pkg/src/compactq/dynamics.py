"""Supertunneling: transitions across a forbidden gap when momentum is compact.

A free particle with kinetic energy ``H(p) = sum_k H_k z^k`` hops between
position eigenstates ``psi_j -> psi_{j+k}`` with amplitude ``H_k``. Two
models are covered: the two-state system where only ``psi_0`` and ``psi_n``
are allowed, and the full line, modeled by a chain long enough that the
wavefront never reaches its ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError, DimensionError, RangeError, SymmetryError
from .linalg import bessel_j, expm_action
from .report import ConvergenceReport

__all__ = [
    "ChainHamiltonianSpec",
    "TwoStateModel",
    "two_state_probability",
    "two_state_evolution",
    "build_chain_hamiltonian",
    "line_transition_probability",
    "line_probabilities",
    "propagate",
    "default_t_grid",
    "decompactification_study",
]

DEFAULT_T_POINTS = 256


@dataclass(frozen=True)
class ChainHamiltonianSpec:
    """Fourier coefficients ``H_k`` of the kinetic energy, with ``H_{-k} = conj(H_k)``.

    Coefficients given only for ``k >= 0`` are completed by conjugation.
    """

    E: float
    coefficients: Mapping[int, complex] = field(default_factory=dict)
    M: float = 2 * math.pi

    def __post_init__(self):
        if not self.E > 0 or not self.M > 0:
            raise RangeError("E and M must be positive")
        full: dict[int, complex] = {}
        for k, h in self.coefficients.items():
            k, h = int(k), complex(h)
            if h == 0:
                continue
            full[k] = h
        for k, h in list(full.items()):
            partner = full.setdefault(-k, h.conjugate())
            if abs(partner - h.conjugate()) > 1e-14 * max(1.0, abs(h)):
                raise SymmetryError(f"H_{-k} must equal conj(H_{k})")
        if 0 in full and abs(full[0].imag) > 1e-14 * max(1.0, abs(full[0])):
            raise SymmetryError("H_0 must be real")
        object.__setattr__(self, "coefficients", dict(sorted(full.items())))

    @classmethod
    def cosine(cls, E: float, M: float = 2 * math.pi) -> ChainHamiltonianSpec:
        """``H = E (1 - (z + zbar) / 2)``."""
        return cls(E, {0: E, 1: -E / 2}, M)

    @classmethod
    def geometric(cls, E: float, q: float, kmax: int, M: float = 2 * math.pi) -> ChainHamiltonianSpec:
        """``H_k = E q^|k|`` for ``|k| <= kmax``."""
        return cls(E, {k: E * q**k for k in range(kmax + 1)}, M)

    def coefficient(self, k: int) -> complex:
        return self.coefficients.get(int(k), 0j)

    def omega(self, n: int, hbar: float) -> float:
        return abs(self.coefficient(n)) / hbar


@dataclass(frozen=True)
class TwoStateModel:
    """``H = H0 + Hn z^n + conj(Hn) z^-n`` restricted to ``span(psi_0, psi_n)``."""

    H0: float
    Hn: complex
    hbar: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not self.hbar > 0:
            raise RangeError("hbar must be positive")
        if self.n < 1:
            raise RangeError("n must be a positive integer")

    @property
    def omega(self) -> float:
        return abs(self.Hn) / self.hbar

    def matrix(self) -> np.ndarray:
        """Hamiltonian in the ordered basis ``(psi_0, psi_n)``; ``z^n psi_0 = psi_n``."""
        return np.array([[self.H0, np.conj(self.Hn)], [self.Hn, self.H0]], dtype=complex)


def two_state_probability(m: TwoStateModel, t):
    """``P(t) = sin^2(omega_n t)``."""
    p = np.sin(m.omega * np.asarray(t, dtype=float)) ** 2
    return float(p) if p.ndim == 0 else p


def two_state_evolution(m: TwoStateModel, t: float) -> np.ndarray:
    """Closed-form ``exp(-i t H / hbar)`` of the two-state model."""
    H = m.matrix()
    phase = np.exp(-1j * m.H0 * t / m.hbar)
    if m.Hn == 0:
        return phase * np.eye(2, dtype=complex)
    wt = m.omega * t
    return phase * (math.cos(wt) * np.eye(2) - 1j * math.sin(wt) / abs(m.Hn) * (H - m.H0 * np.eye(2)))


def build_chain_hamiltonian(spec: ChainHamiltonianSpec, sites: int, sparse: bool = False):
    """Matrix ``sum_k H_k z^k`` on an open chain; entry ``[i + k, i] = H_k``."""
    if sites < 3:
        raise RangeError("a chain needs at least 3 sites")
    diags, offsets = [], []
    for k, h in spec.coefficients.items():
        if abs(k) >= sites:
            continue
        diags.append(np.full(sites - abs(k), h, dtype=complex))
        offsets.append(-k)
    H = sp.diags(diags, offsets, shape=(sites, sites), format="csr", dtype=complex)
    return H if sparse else H.toarray()


def _is_hermitian(H, tol: float = 1e-12) -> bool:
    D = H - H.conj().T
    if sp.issparse(D):
        d = abs(D).max() if D.nnz else 0.0
        s = abs(H).max() if H.nnz else 0.0
    else:
        d, s = np.abs(D).max(), np.abs(H).max()
    return d <= tol * max(s, 1.0)


def propagate(H, psi0, t: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(-i t H / hbar) psi0`` for Hermitian ``H`` (dense or scipy sparse)."""
    if not hbar > 0:
        raise RangeError("hbar must be positive")
    psi0 = np.asarray(psi0, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or psi0.shape != (H.shape[0],):
        raise DimensionError(f"state of shape {psi0.shape} does not fit H of shape {H.shape}")
    if not _is_hermitian(H):
        raise SymmetryError("propagate: H must be Hermitian")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ArgumentError("psi0 must be normalized")
    if t == 0:
        return psi0.copy()
    return expm_action((-1j * t / hbar) * H, psi0)


def line_transition_probability(n: int, t: float, omega: float) -> float:
    """``J_n(t omega)^2``: probability of hopping ``n`` sites on the infinite line."""
    return bessel_j(abs(int(n)), t * omega) ** 2


def line_probabilities(E: float, t: float, sites: int, hbar: float = 1.0) -> np.ndarray:
    """Site occupation after time ``t`` on a cosine chain started at its center.

    Index ``k`` of the result is the displacement from the center,
    ``k = 0 .. sites // 2``.
    """
    if sites % 2 == 0:
        raise ArgumentError("use an odd number of sites so the center is a site")
    H = build_chain_hamiltonian(ChainHamiltonianSpec.cosine(E), sites, sparse=True)
    psi0 = np.zeros(sites, dtype=complex)
    c = sites // 2
    psi0[c] = 1.0
    psi = propagate(H, psi0, t, hbar)
    return np.abs(psi[c:]) ** 2


def default_t_grid(omega_1: float, points: int = DEFAULT_T_POINTS) -> np.ndarray:
    """Uniform grid on ``[0, 4 pi / omega_1]``: two periods of the slowest mode."""
    if not omega_1 > 0:
        raise RangeError("omega_1 must be positive to build the default time grid")
    return np.linspace(0.0, 4 * math.pi / omega_1, points)


def _cosine_for(mass: float) -> Callable[[float], ChainHamiltonianSpec]:
    return lambda M: ChainHamiltonianSpec.cosine(M**2 / (4 * math.pi**2 * mass), M)


def decompactification_study(distance_gap: float, M_list, t_grid=None,
                             spec_for: Callable[[float], ChainHamiltonianSpec] | None = None,
                             hbar: float = 1.0, mass: float = 1.0) -> ConvergenceReport:
    """Peak two-state transition probability as the momentum circle grows.

    For each ``M`` the target state index is ``n = max(1, ceil(|I| M / 2 pi hbar))``
    and the jump frequency is ``omega_n = |H_n| / hbar``. ``spec_for(M)``
    returns the kinetic energy at that ``M``; by default the cosine
    dispersion with ``E = M^2 / (4 pi^2 mass)``. Rows are
    ``(M, max_t sin^2(omega_n t), 0, residual)``; ``metadata["n_values"]``
    lists the ``n`` used. Without ``t_grid`` all rows share
    :func:`default_t_grid` of ``omega_1`` at the smallest ``M``.
    """
    Ms = [float(v) for v in np.atleast_1d(M_list)]
    if not Ms:
        raise ArgumentError("M_list must not be empty")
    if t_grid is not None:
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.size == 0:
            raise ArgumentError("t_grid must not be empty")
    if distance_gap < 0:
        raise RangeError("distance_gap must be nonnegative")
    spec_for = spec_for or _cosine_for(mass)
    if t_grid is None:
        t_grid = default_t_grid(spec_for(min(Ms)).omega(1, hbar))
    peaks, ns = [], []
    for M in Ms:
        spec = spec_for(M)
        n = max(1, math.ceil(distance_gap * M / (2 * math.pi * hbar) - 1e-12))
        model = TwoStateModel(spec.coefficient(0).real, spec.coefficient(n), hbar, n)
        peaks.append(float(np.max(two_state_probability(model, t_grid))))
        ns.append(n)
    meta = {"study": "decompactification", "distance_gap": repr(distance_gap), "hbar": repr(hbar),
            "n_values": ",".join(str(n) for n in ns)}
    return ConvergenceReport.from_measurements(Ms, peaks, 0.0, meta)
