from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg
import scipy.special
from hypothesis import given
from hypothesis import strategies as st

from compactq.dynamics import (ChainHamiltonianSpec, TwoStateModel, build_chain_hamiltonian,
                               decompactification_study, default_t_grid, line_probabilities,
                               line_transition_probability, propagate, two_state_evolution,
                               two_state_probability)
from compactq.errors import ArgumentError, DimensionError, RangeError, SymmetryError


def test_spec_completion_and_validation():
    spec = ChainHamiltonianSpec(2.0, {0: 2.0, 1: 0.5 + 0.5j})
    assert spec.coefficient(-1) == 0.5 - 0.5j
    with pytest.raises(SymmetryError):
        ChainHamiltonianSpec(1.0, {1: 1.0, -1: 2.0})
    with pytest.raises(SymmetryError):
        ChainHamiltonianSpec(1.0, {0: 1j})
    with pytest.raises(RangeError):
        ChainHamiltonianSpec(-1.0)


def test_two_state_examples():
    m = TwoStateModel(1.0, 0.4 + 0.3j, hbar=0.5, n=3)
    assert two_state_probability(m, 0.0) == 0.0
    assert two_state_probability(m, math.pi / (2 * m.omega)) == pytest.approx(1.0, abs=1e-15)
    t = 1.7 / m.omega
    psi = scipy.linalg.expm(-1j * t * m.matrix() / m.hbar) @ np.array([1.0, 0.0])
    assert abs(abs(psi[1]) ** 2 - two_state_probability(m, t)) <= 1e-8


@given(st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 3), st.floats(0, 20))
def test_two_state_closed_form_evolution(H0, re, im, hbar, t):
    m = TwoStateModel(H0, complex(re, im), hbar)
    U = two_state_evolution(m, t)
    ref = scipy.linalg.expm(-1j * t * m.matrix() / hbar)
    assert np.abs(U - ref).max() <= 1e-9


def test_chain_examples():
    H = build_chain_hamiltonian(ChainHamiltonianSpec.cosine(2.0), 3)
    assert np.allclose(H, [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
    H0 = build_chain_hamiltonian(ChainHamiltonianSpec(1.0, {0: 0.7}), 5)
    assert np.allclose(H0, 0.7 * np.eye(5))
    Hg = build_chain_hamiltonian(ChainHamiltonianSpec(1.0, {0: 1.0, 1: 0.3j, 2: 0.1}), 6)
    assert np.allclose(Hg, Hg.conj().T)
    assert Hg[2, 1] == 0.3j
    with pytest.raises(RangeError):
        build_chain_hamiltonian(ChainHamiltonianSpec.cosine(1.0), 2)


def test_propagate_examples():
    H = np.diag([1.0, -2.0, 0.5])
    psi0 = np.ones(3) / math.sqrt(3)
    assert np.allclose(propagate(H, psi0, 0.0), psi0)
    assert np.allclose(propagate(H, psi0, 1.3), np.exp(-1.3j * np.diag(H)) * psi0, atol=1e-13)
    E = 1.5
    H2 = np.array([[E, -E / 2], [-E / 2, E]])
    t = 2.1
    psi = propagate(H2, np.array([1.0, 0.0]), t)
    w = E * t / 2
    expect = np.exp(-1j * E * t) * np.array([math.cos(w), 1j * math.sin(w)])
    assert np.allclose(psi, expect, atol=1e-10)


def test_propagate_errors():
    with pytest.raises(DimensionError):
        propagate(np.eye(3), np.ones(2) / math.sqrt(2), 1.0)
    with pytest.raises(SymmetryError):
        propagate(np.array([[0, 1], [0, 0]]), np.array([1.0, 0.0]), 1.0)
    with pytest.raises(ArgumentError):
        propagate(np.eye(2), np.array([1.0, 1.0]), 1.0)


@given(st.integers(0, 2**31 - 1), st.integers(3, 40), st.floats(0, 30))
def test_unitarity_and_conservation(seed, sites, t):
    rng = np.random.default_rng(seed)
    spec = ChainHamiltonianSpec(1.0, {0: rng.normal(), 1: complex(rng.normal(), rng.normal()),
                                      2: complex(rng.normal(), rng.normal())})
    H = build_chain_hamiltonian(spec, sites)
    psi0 = rng.normal(size=sites) + 1j * rng.normal(size=sites)
    psi0 /= np.linalg.norm(psi0)
    psi = propagate(H, psi0, t)
    assert abs(np.linalg.norm(psi) - 1) <= 1e-10


@given(st.integers(2, 30), st.floats(0, 15))
def test_reflection_symmetry(half, t):
    sites = 2 * half + 1
    H = build_chain_hamiltonian(ChainHamiltonianSpec.cosine(1.0), sites, sparse=True)
    psi0 = np.zeros(sites, complex)
    psi0[half] = 1
    p = np.abs(propagate(H, psi0, t))
    assert np.abs(p - p[::-1]).max() <= 1e-10


def test_line_probability_examples():
    assert line_transition_probability(0, 0.0, 3.0) == 1.0
    probs = line_probabilities(1.0, 10.0, 401)
    assert abs(probs[3] - line_transition_probability(3, 10.0, 1.0)) <= 1e-6
    assert abs(line_transition_probability(3, 10.0, 1.0) - scipy.special.jv(3, 10.0) ** 2) <= 1e-12
    assert line_transition_probability(2, 200.0, 1.0) <= 3 * 2 / (math.pi * 200)


@given(st.floats(0.5, 20.0), st.floats(0.3, 3.0))
def test_bessel_vs_chain(tw, E):
    hbar = 1.0
    t = tw * hbar / E
    sites = 40 * math.ceil(tw) + 1
    sites += 1 - sites % 2
    probs = line_probabilities(E, t, sites, hbar)
    ref = scipy.special.jv(np.arange(11), tw) ** 2
    assert np.abs(probs[:11] - ref).max() <= 1e-6


def test_default_grid():
    g = default_t_grid(2.0)
    assert g.size == 256 and g[0] == 0 and g[-1] == pytest.approx(2 * math.pi)
    with pytest.raises(RangeError):
        default_t_grid(0.0)


def test_decompactification_examples():
    r = decompactification_study(1.0, [1.0, 2 * math.pi, 8 * math.pi])
    n = [int(v) for v in r.metadata["n_values"].split(",")]
    assert n == [1, 1, 4]
    assert r.measured[0] == pytest.approx(1.0, abs=1e-3)
    assert r.measured[2] == 0.0
    geo = lambda M: ChainHamiltonianSpec.geometric(1.0, 0.5, 40, M)
    r = decompactification_study(1.0, [2 * math.pi * k for k in (1, 2, 4, 8)], spec_for=geo)
    assert r.is_monotone(slack=0.01)
    assert r.measured[-1] < r.measured[0]
    with pytest.raises(ArgumentError):
        decompactification_study(1.0, [])
    with pytest.raises(ArgumentError):
        decompactification_study(1.0, [1.0], t_grid=[])
