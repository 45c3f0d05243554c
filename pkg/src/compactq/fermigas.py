"""Zero-temperature Fermi gas on ``(0, L]`` with the compact-momentum dispersion.

One fermion has Hamiltonian ``E (1 - T / 2)`` on ``N`` states, where ``T``
is the nearest-neighbor hopping matrix and ``E = M^2 / (4 pi^2 m)``. The
levels are ``E_k = E (1 - cos(k theta))`` with ``theta = pi / (N + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ExclusionError, RangeError
from .linalg import SymTridiag

__all__ = [
    "FermiGasParams",
    "PressureResult",
    "chebyshev_u",
    "fermi_hamiltonian",
    "spectrum_closed_form",
    "total_energy",
    "level_sum",
    "total_energy_semiclassical",
    "dilute_energy",
    "max_density",
    "pressure_semiclassical",
    "pressure_exact",
    "dilute_pressure",
    "energy_table",
]


def _floor(x: float) -> int:
    return math.floor(x + 1e-9 * max(1.0, abs(x)))


@dataclass(frozen=True)
class FermiGasParams:
    """``N`` single-particle states filled by ``Ncal`` fermions of mass ``mass``."""

    L: float
    M: float
    hbar: float
    mass: float
    N: int
    Ncal: int

    def __post_init__(self):
        if not all(v > 0 for v in (self.L, self.M, self.hbar, self.mass)):
            raise RangeError("L, M, hbar and mass must be positive")
        if self.N < 1 or self.Ncal < 0:
            raise RangeError("need N >= 1 states and a nonnegative fermion count")
        if self.Ncal > self.N:
            raise ExclusionError(f"{self.Ncal} fermions do not fit into {self.N} states")

    @classmethod
    def from_size(cls, L: float, M: float, hbar: float, mass: float, Ncal: int) -> FermiGasParams:
        """``N = floor(L M / 2 pi hbar)`` from the system size."""
        return cls(L, M, hbar, mass, _floor(L * M / (2 * math.pi * hbar)), Ncal)

    @classmethod
    def from_states(cls, N: int, Ncal: int, L: float = 1.0, mass: float = 1.0,
                    hbar: float = 1.0) -> FermiGasParams:
        """Choose ``M = 2 pi hbar N / L`` so the box holds exactly ``N`` states."""
        return cls(L, 2 * math.pi * hbar * N / L, hbar, mass, N, Ncal)

    @property
    def E(self) -> float:
        return self.M**2 / (4 * math.pi**2 * self.mass)

    @property
    def theta(self) -> float:
        return math.pi / (self.N + 1)

    @property
    def density(self) -> float:
        return self.Ncal / self.L


def chebyshev_u(n: int, lam: float) -> float:
    """``P_n(lam)`` from ``P_{n+1} = lam P_n - P_{n-1}``, ``P_0 = 1``, ``P_1 = lam``."""
    if n < 0:
        raise RangeError("n must be nonnegative")
    prev, cur = 1.0, lam
    if n == 0:
        return prev
    for _ in range(n - 1):
        prev, cur = cur, lam * cur - prev
    return cur


def fermi_hamiltonian(p: FermiGasParams) -> SymTridiag:
    """``E (1 - T / 2)``: diagonal ``E``, off-diagonal ``-E / 2``."""
    return SymTridiag(np.full(p.N, p.E), np.full(p.N - 1, -0.5 * p.E))


def spectrum_closed_form(p: FermiGasParams) -> np.ndarray:
    k = np.arange(1, p.N + 1)
    return p.E * (1.0 - np.cos(k * p.theta))


def _energy_closed(E: float, Ncal: int, theta: float) -> float:
    a = Ncal * theta
    return E * (Ncal + 0.5) - 0.5 * E * (math.cos(a) + math.sin(a) / math.tan(theta / 2))


def total_energy(p: FermiGasParams) -> float:
    """Closed-form ground-state energy of ``Ncal`` fermions."""
    return _energy_closed(p.E, p.Ncal, p.theta)


def _level_sum(E: float, Ncal: int, theta: float) -> float:
    # 1 - cos(a) = 2 sin^2(a / 2) avoids cancellation for low levels
    k = np.arange(1, Ncal + 1)
    return float(2.0 * E * np.sum(np.sin(0.5 * k * theta) ** 2))


def level_sum(p: FermiGasParams) -> float:
    """Ground-state energy as the direct sum of the lowest ``Ncal`` levels."""
    return _level_sum(p.E, p.Ncal, p.theta)


def total_energy_semiclassical(p: FermiGasParams) -> float:
    """Phase-space integral up to the Fermi momentum."""
    return (p.M**2 * p.Ncal / (4 * math.pi**2 * p.mass)
            - p.L * p.M**3 / (8 * math.pi**4 * p.hbar * p.mass) * math.sin(math.pi * p.Ncal / p.N))


def dilute_energy(p: FermiGasParams) -> float:
    """``pi^2 hbar^2 Ncal^3 / (6 m L^2)``, valid for ``1 << Ncal << N``."""
    return math.pi**2 * p.hbar**2 * p.Ncal**3 / (6 * p.mass * p.L**2)


def max_density(p: FermiGasParams) -> float:
    """``n_max = M / (2 pi hbar)``: at most one fermion per state."""
    return p.M / (2 * math.pi * p.hbar)


def pressure_semiclassical(p: FermiGasParams) -> float:
    x = math.pi * p.Ncal / p.N
    return p.M**3 / (8 * math.pi**4 * p.hbar * p.mass) * (math.sin(x) - x * math.cos(x))


def dilute_pressure(p: FermiGasParams) -> float:
    """Cubic law ``pi^2 hbar^2 n^3 / (3 m)``."""
    return math.pi**2 * p.hbar**2 * p.density**3 / (3 * p.mass)


@dataclass(frozen=True)
class PressureResult:
    """Central-difference pressure ``-dU/dL``.

    ``value`` differentiates the level sum with the state count taken as the
    real number ``nu(L) = L M / 2 pi hbar``, which makes ``U`` smooth in
    ``L``. ``value_integer`` uses the integer counts ``N_minus`` and
    ``N_plus`` at ``L - dL`` and ``L + dL``; it is zero when no step lies
    inside the stencil and meaningless when one does, which sets
    ``step_warning``.
    """

    value: float
    value_integer: float
    N_minus: int
    N_plus: int
    step_warning: bool

    def __float__(self) -> float:
        return self.value


def pressure_exact(p: FermiGasParams, dL: float) -> PressureResult:
    """Finite-difference ``-dU/dL`` at fixed ``Ncal``, ``M``, ``hbar`` and mass."""
    if not 0 < dL < p.L:
        raise ArgumentError("need 0 < dL < L")
    scale = p.M / (2 * math.pi * p.hbar)
    nu_m, nu_p = (p.L - dL) * scale, (p.L + dL) * scale
    n_m, n_p = _floor(nu_m), _floor(nu_p)
    if p.Ncal > n_m:
        raise ExclusionError(f"{p.Ncal} fermions do not fit into {n_m} states at L - dL")
    E = p.E
    smooth = -(_level_sum(E, p.Ncal, math.pi / (nu_p + 1)) - _level_sum(E, p.Ncal, math.pi / (nu_m + 1))) / (2 * dL)
    integer = -(_level_sum(E, p.Ncal, math.pi / (n_p + 1)) - _level_sum(E, p.Ncal, math.pi / (n_m + 1))) / (2 * dL)
    return PressureResult(smooth, integer + 0.0, n_m, n_p, n_p != n_m)


def energy_table(N: int, fermions, L: float = 1.0, mass: float = 1.0, hbar: float = 1.0,
                 dL: float | None = None) -> np.ndarray:
    """Rows ``(Ncal, U, P_semiclassical, P_exact)`` for a box holding ``N`` states.

    The box sits half a state above ``N`` (``L M / 2 pi hbar = N + 1/2``) so
    the finite-difference stencil of width ``dL`` (default a quarter of the
    level spacing ``dx``) does not straddle an integer step.
    """
    M = 2 * math.pi * hbar * (N + 0.5) / L
    dx = 2 * math.pi * hbar / M
    dL = 0.25 * dx if dL is None else dL
    rows = []
    for n in np.atleast_1d(fermions):
        p = FermiGasParams(L, M, hbar, mass, N, int(n))
        rows.append((int(n), total_energy(p), pressure_semiclassical(p), pressure_exact(p, dL).value))
    return np.array(rows, dtype=float).reshape(-1, 4)
