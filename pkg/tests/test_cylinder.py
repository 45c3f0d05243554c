from __future__ import annotations

import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from compactq.cylinder import (FIRST_STATE, CylinderObservable, CylinderPhaseSpace, check_dirac,
                               check_prop2, check_separability, check_von_neumann,
                               classical_l2_norm, edge_bulk_split, interval_phase_space,
                               parse_n_list, poisson_bracket, position_operator, prop2_terms,
                               quantize, quantize_sparse, r_norm, shift_operator, shift_polynomial)
from compactq.errors import ArgumentError, RangeError

TWO_PI = 2 * math.pi
Obs = CylinderObservable


def coeff_lists(max_deg=3):
    return st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=max_deg + 1)


@st.composite
def observables(draw, max_index=3, max_deg=2):
    keys = draw(st.lists(st.integers(-max_index, max_index), min_size=1, max_size=3, unique=True))
    terms = {}
    for k in keys:
        re = draw(coeff_lists(max_deg))
        im = draw(st.lists(st.floats(-3, 3, allow_nan=False), min_size=len(re), max_size=len(re)))
        terms[k] = np.array(re) + 1j * np.array(im)
    return Obs(terms)


def ps_n(N, L=1.0, M=TWO_PI):
    return CylinderPhaseSpace.from_n(L, M, N)


def test_phase_space_from_hbar_floor():
    ps = CylinderPhaseSpace.from_hbar(1.0, TWO_PI, 1.0 / 7.5)
    assert ps.N == 7
    assert ps.N * ps.dx <= ps.L


def test_phase_space_validation():
    with pytest.raises(RangeError):
        CylinderPhaseSpace.from_n(-1.0, 1.0, 3)


def test_position_operator_examples():
    ps = ps_n(2, L=1.0, M=3.0)
    assert np.allclose(position_operator(ps), TWO_PI * ps.hbar / 3.0 * np.diag([1, 2]), atol=0, rtol=1e-15)
    assert np.allclose(position_operator(ps_n(1)), [[ps_n(1).dx]])
    assert np.allclose(np.diag(position_operator(ps_n(4))), [0.25, 0.5, 0.75, 1.0], atol=1e-15)
    assert FIRST_STATE == 1


@given(st.integers(1, 64), st.floats(0.1, 10), st.floats(0.1, 10))
def test_position_eigenvalues_confined(N, L, M):
    x = np.diag(position_operator(ps_n(N, L, M)))
    assert np.all(x > 0) and np.all(x <= L * (1 + 1e-12))


def test_shift_operator_examples():
    ps = ps_n(2)
    z = shift_operator(ps, 1)
    assert np.array_equal(z, [[0, 0], [1, 0]])
    assert np.array_equal(shift_operator(ps, 0), np.eye(2))
    assert not shift_operator(ps, 2).any() and not shift_operator(ps, -5).any()
    zb = shift_operator(ps, -1)
    assert np.array_equal(z @ zb - zb @ z, np.diag([-1, 1]))


def test_quantize_examples():
    ps = ps_n(5)
    assert np.allclose(quantize(ps, Obs.constant(1.0)), np.eye(5))
    assert np.allclose(quantize(ps, Obs.x()), position_operator(ps))
    ps2 = ps_n(2)
    xz = quantize(ps2, Obs.x() * Obs.z())
    expect = np.zeros((2, 2))
    expect[1, 0] = 1.5 * ps2.dx
    assert np.allclose(xz, expect, atol=1e-15)


@given(observables(), st.integers(1, 24))
def test_zx_and_symmetric_paths_agree(a, N):
    ps = ps_n(N)
    A = quantize(ps, a, "zx")
    B = quantize(ps, a, "symmetric")
    assert np.abs(A - B).max() <= 1e-12 * max(1.0, np.abs(B).max())


@given(observables(), st.integers(1, 24))
def test_reality(a, N):
    ps = ps_n(N)
    assert np.abs(quantize(ps, a.conj()) - quantize(ps, a).conj().T).max() <= 1e-14 * max(1.0, np.abs(quantize(ps, a)).max())


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=4), st.integers(1, 64),
       st.integers(-8, 8))
def test_zx_reordering_identity(coeffs, N, n):
    ps = ps_n(N)
    x = np.diag(position_operator(ps))
    f = np.polynomial.polynomial.polyval(x, coeffs)
    f_shift = np.polynomial.polynomial.polyval(x + n * ps.dx, coeffs)
    z = shift_operator(ps, n)
    assert np.allclose(np.diag(f) @ z, z @ np.diag(f_shift), atol=1e-12 * max(1.0, np.abs(f).max()))


def test_shift_polynomial_against_sympy():
    x, c = sympy.symbols("x c")
    coeffs = [1.5, -2.0, 0.25, 3.0]
    shifted = shift_polynomial(np.array(coeffs), 0.7)
    expr = sympy.expand(sum(a * (x + 0.7) ** k for k, a in enumerate(coeffs)))
    ref = [float(expr.coeff(x, k)) for k in range(4)]
    assert np.allclose(shifted, ref, atol=1e-13)


@pytest.mark.parametrize("N", [1, 2, 7, 32])
def test_products_with_same_sign_are_exact(N):
    ps = ps_n(N)
    for n in range(0, 5):
        for m in range(0, 5):
            for s in (1, -1):
                lhs = shift_operator(ps, s * n) @ shift_operator(ps, s * m)
                assert np.array_equal(lhs, shift_operator(ps, s * (n + m)))


@given(st.integers(1, 256), st.integers(-8, 8), st.integers(-8, 8))
def test_exact_shift_product_bound(N, n, m):
    ps = ps_n(N)
    D = shift_operator(ps, n) @ shift_operator(ps, m) - shift_operator(ps, n + m)
    assert np.sum(np.abs(D) ** 2) / N <= abs(m) / N + 1e-15


def test_classical_norm_examples():
    ps = ps_n(8)
    assert classical_l2_norm(ps, Obs.constant(1.0)) == pytest.approx(1.0, abs=1e-15)
    assert classical_l2_norm(ps, Obs.x()) == pytest.approx(1 / math.sqrt(3), abs=1e-15)
    assert classical_l2_norm(ps, Obs.z()) == pytest.approx(1.0, abs=1e-15)


@given(observables(), st.floats(0.2, 5))
def test_classical_norm_against_sympy_integral(a, L):
    ps = CylinderPhaseSpace.from_n(L, TWO_PI, 4)
    x = sympy.symbols("x")
    Lq = sympy.Rational(L)
    total = sympy.Integer(0)
    for c in a.terms.values():
        # exact rationals: |p|^2 = (Re p)^2 + (Im p)^2
        re = sympy.Poly([sympy.Rational(complex(v).real) for v in c][::-1], x)
        im = sympy.Poly([sympy.Rational(complex(v).imag) for v in c][::-1], x)
        sq = (re**2 + im**2).integrate()
        total += sq.eval(Lq) - sq.eval(0)
    ref = math.sqrt(float(total / Lq))
    assert classical_l2_norm(ps, a) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_r_norm_examples():
    assert r_norm(Obs.constant(1.0), 3.0) == 1.0
    assert r_norm(Obs.x(), 2.0) == 2.0
    assert r_norm(Obs.x() ** 2 + Obs.z() * Obs.x(), 1.0) == 2.0
    with pytest.raises(RangeError):
        r_norm(Obs.x(), 0.0)


def test_poisson_bracket_examples():
    M = 3.0
    assert poisson_bracket(Obs.x(), Obs.x() ** 2, M).is_zero
    assert poisson_bracket(Obs.x(), Obs.z(), M).allclose(Obs.z() * (-2j * math.pi / M))
    assert poisson_bracket(Obs.z(), Obs.z(-1), M).is_zero


def test_poisson_bracket_against_sympy():
    x, p = sympy.symbols("x p", real=True)
    M = 2.5
    z = sympy.exp(2 * sympy.pi * sympy.I * p / M)
    a_expr, b_expr = x**2 * z + 3 * x, x / z
    ref = sympy.diff(a_expr, p) * sympy.diff(b_expr, x) - sympy.diff(a_expr, x) * sympy.diff(b_expr, p)
    a = Obs.x() ** 2 * Obs.z() + 3 * Obs.x()
    b = Obs.x() * Obs.z(-1)
    ours = poisson_bracket(a, b, M)
    for xv, pv in [(0.3, 0.1), (1.7, -2.2)]:
        val = complex(ref.subs({x: xv, p: pv}).evalf())
        mine = sum(np.polynomial.polynomial.polyval(xv, c) * np.exp(2j * math.pi * n * pv / M)
                   for n, c in ours.terms.items())
        assert abs(val - mine) <= 1e-12


def test_dirac_bracket_matches_commutator_on_bulk():
    ps = ps_n(40)
    a, b = Obs.x(), Obs.z()
    Qa, Qb = quantize(ps, a), quantize(ps, b)
    D = (Qa @ Qb - Qb @ Qa) / (1j * ps.hbar) - quantize(ps, poisson_bracket(a, b, ps.M))
    assert np.abs(D[:, 1:-1]).max() <= 1e-12


def test_separability_examples():
    r = check_separability(Obs.x(), [4, 8, 16], 1.0, TWO_PI)
    N = r.parameters
    assert np.allclose(r.measured**2, (N + 1) * (2 * N + 1) / (6 * N**2), rtol=1e-13)
    assert np.allclose(r.reference**2, 1 / 3)
    assert r.is_monotone()
    assert np.all(check_separability(Obs.constant(1.0), [2, 5], 1.0, TWO_PI).residuals <= 1e-15)
    rz = check_separability(Obs.z(), [2, 4, 64], 1.0, TWO_PI)
    assert np.allclose(rz.residuals, 1 - np.sqrt(1 - 1 / rz.parameters), atol=1e-15)
    with pytest.raises(ArgumentError):
        check_separability(Obs.x(), [], 1.0, TWO_PI)


@given(observables(max_index=2, max_deg=1))
def test_separability_rate_property(a):
    # mixed observables can cross zero, so the residual decays like 1/N without being monotone
    r = check_separability(a, [8, 16, 32, 64, 128], 1.0, TWO_PI)
    assert np.all(r.parameters * r.residuals <= 2 * r_norm(a, 1.0) + 1e-12)


def test_separability_monotone_single_terms():
    for a in (Obs.x(), Obs.x() ** 2, Obs.z() * Obs.x(), Obs.z(-2) * (Obs.x() + 1)):
        assert check_separability(a, [8, 16, 32, 64, 128], 1.0, TWO_PI).is_monotone(slack=0.1)


def test_von_neumann_examples():
    Ns = [4, 8, 16, 32]
    for n in (-3, 2):
        for m in (-2, 1, 4):
            r = check_von_neumann(Obs.z(n), Obs.z(m), Ns, 1.0, TWO_PI)
            assert np.all(r.measured**2 <= abs(m) / r.parameters + 1e-15)
    assert np.all(check_von_neumann(Obs.x(), Obs.x(), Ns, 1.0, TWO_PI).residuals <= 1e-15)
    r = check_von_neumann(Obs.x() * Obs.z(), Obs.x(), [16, 64, 256, 1024], 1.0, TWO_PI)
    C = r.measured[0] * math.sqrt(16)
    assert np.all(r.measured <= 1.1 * C / np.sqrt(r.parameters))


@given(observables(max_index=2, max_deg=1), observables(max_index=2, max_deg=1))
def test_asymptotic_commutativity(a, b):
    Ns = [16, 32, 64, 128, 256]
    vals = []
    for N in Ns:
        ps = ps_n(N)
        Qa, Qb = quantize_sparse(ps, a), quantize_sparse(ps, b)
        C = (Qa @ Qb - Qb @ Qa).toarray()
        vals.append(math.sqrt(np.sum(np.abs(C) ** 2) / N))
    vals = np.array(vals)
    assert np.all(vals[1:] <= vals[:-1] * 1.1 + 1e-12)


def test_dirac_examples():
    Ns = [8, 16, 32, 64]
    assert np.all(check_dirac(Obs.x(), Obs.z(), 1, Ns, 1.0, TWO_PI).residuals <= 1e-12)
    a = Obs.x() ** 2 * Obs.z() + Obs.z(-1)
    assert np.all(check_dirac(a, a, 2, Ns, 1.0, TWO_PI).residuals <= 1e-12)
    r = check_dirac(Obs.x() ** 2 * Obs.z(), Obs.x() * Obs.z(-1), 2, [16, 32, 64, 128, 256], 1.0, TWO_PI)
    slope = np.polyfit(np.log(r.parameters), np.log(r.measured), 1)[0]
    assert slope < -0.9
    with pytest.raises(ArgumentError):
        check_dirac(Obs.z(3), Obs.x(), 1, Ns, 1.0, TWO_PI)
    with pytest.raises(ArgumentError):
        check_dirac(Obs.z(2), Obs.x(), 2, [4], 1.0, TWO_PI)


def test_interval_phase_space():
    ps = interval_phase_space(-1.0, 1.0, TWO_PI, 10)
    assert ps.first_index == -5 and ps.N == 11
    with pytest.raises(ArgumentError):
        interval_phase_space(0.0, 1.0, TWO_PI, 10)


def test_edge_bulk_split():
    c = np.arange(1.0, 11.0)
    edge, bulk = edge_bulk_split(None, c, 1)
    assert np.array_equal(edge + bulk, c)
    assert np.array_equal(np.nonzero(edge)[0], [0, 1, 8, 9])


def test_prop2_examples():
    psi = lambda k: 1.0 / (1.0 + k.astype(float) ** 2)
    one = Obs.constant(1.0)
    r = check_prop2(one, one, psi, -1.0, 1.0, TWO_PI, [8, 16])
    assert np.all(r.residuals <= 1e-14)
    geo = lambda k: 2.0 ** (-np.abs(k).astype(float))
    for N in (8, 16, 32):
        ps = interval_phase_space(-1.0, 1.0, TWO_PI, N)
        t = prop2_terms(Obs.z(), Obs.z(-1), geo, ps)
        assert t["product"] <= 2 * t["edge_mass"] + 1e-15
    r = check_prop2(Obs.x() * Obs.z(), Obs.x(), psi, -1.0, 1.0, TWO_PI, [16, 64, 256, 1024])
    prod = r.select("product")
    assert prod.measured[-1] < 0.1 * prod.measured[0]
    assert np.all(r.select("commutator").measured <= 1e-10)


def test_parse_n_list():
    assert parse_n_list("4,8,16,...,64") == [4, 8, 16, 32, 64]
    assert parse_n_list("4,..,32") == [4, 8, 16, 32]
    assert parse_n_list("3,9,...,81") == [3, 9, 27, 81]
    assert parse_n_list([5, 6]) == [5, 6]
    with pytest.raises(ArgumentError):
        parse_n_list("...,4")


def test_observable_algebra():
    a = Obs.x() * Obs.z() + 2
    assert (a - a).is_zero
    assert (a * 1).allclose(a)
    assert a.conj().conj() == a
    assert (Obs.z(2) * Obs.z(-2)) == Obs.constant(1.0)
    assert (Obs.x() ** 3).degree == 3
    assert a.max_index == 1
    assert Obs.x() ** 2 == Obs.x() * Obs.x()
    assert "CylinderObservable" in repr(a)
