from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.physics.quantum.cg import CG

from compactq.errors import ArgumentError, PreconditionError, QuantizabilityError, RangeError, TruncationError
from compactq.su2 import (BlockOperator, DomainPolynomial, SemialgebraicDomain, TruncatedRegularRep,
                          WeightState, angular_momentum, bulk_filtration, cap_count_formula,
                          cap_state_count, casimir_spectrum, check_separability_ball,
                          check_vn_dirac_su2, domain_eigenspace, eigenspace_for, multiply_fundamental,
                          poisson_bracket, position_operators, positivity_check, prequant_bound_check,
                          quantize_observable, quantize_polynomial, star_product_residual,
                          thickness_ratio, weyl_dimension)

P = DomainPolynomial
x1, x2, x3, Cas = P.x(1), P.x(2), P.x(3), P.casimir()


def enumerate_cap(s2, m2):
    # direct weight enumeration in doubled units
    return sum(tj + 1 for tj in range(s2 + 1) for tm in range(-tj, tj + 1, 2) if tm > m2)


# ---------------------------------------------------------------- representation


def test_weight_state_validation():
    WeightState(2, 0, -2)
    for bad in [(1, 0, 1), (2, 4, 0), (-1, 0, 0), (2, 0, 1)]:
        with pytest.raises(ArgumentError):
            WeightState(*bad)


@given(st.integers(0, 12))
def test_rep_dimension_and_indexing(tjm):
    rep = TruncatedRegularRep(tjm)
    assert rep.dim == sum((k + 1) ** 2 for k in range(tjm + 1)) == len(rep)
    s = rep.states
    assert s.shape == (rep.dim, 3)
    for i in range(0, rep.dim, max(1, rep.dim // 17)):
        assert rep.index(rep.state(i)) == i
    assert np.all(s[:, 0] * (s[:, 0] + 2) <= tjm * (tjm + 2))


def test_rep_for_casimir_and_truncation():
    assert TruncatedRegularRep.for_casimir(math.sqrt(2.0) + 1e-9).two_j_max == 2
    assert TruncatedRegularRep.for_casimir(0.0).two_j_max == 0
    with pytest.raises(TruncationError):
        TruncatedRegularRep(2).index(WeightState(3, 1, 1))
    with pytest.raises(RangeError):
        TruncatedRegularRep(-1)


@given(st.integers(0, 12), st.floats(0.01, 3.0))
def test_exact_lie_algebra(tjm, hbar):
    X = position_operators(TruncatedRegularRep(tjm), hbar)
    eps = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1}
    for (a, b, c), e in eps.items():
        C = X[a] @ X[b] - X[b] @ X[a] + 1j * hbar * e * X[c]
        assert np.abs(C).max() <= 1e-13 * max(1.0, hbar**2 * tjm**2)


def test_position_operator_examples():
    rep = TruncatedRegularRep(4)
    h = 0.3
    X = position_operators(rep, h)
    C = sum(x @ x for x in X)
    assert np.allclose(C, np.diag(casimir_spectrum(rep, h)), atol=1e-14)
    assert np.allclose(np.diag(X[2]).real, h * rep.states[:, 1] / 2)
    X0 = position_operators(TruncatedRegularRep(0), h)
    assert all(not x.any() for x in X0)


def test_angular_momentum_against_sympy():
    from sympy.physics.quantum import represent
    from sympy.physics.quantum.spin import Jx, Jy, Jz
    from sympy.physics.quantum.constants import hbar as hb
    for two_j in (1, 2, 3, 4):
        j = sympy.Rational(two_j, 2)
        ours = angular_momentum(two_j)
        for op, mine in zip((Jx, Jy, Jz), ours):
            ref = np.array(represent(op, basis=Jz, j=j).subs(hb, 1).evalf(), dtype=complex)
            assert np.allclose(mine, ref, atol=1e-13)


def test_casimir_spectrum_examples():
    rep = TruncatedRegularRep(2)
    c = casimir_spectrum(rep, 1.0)
    assert np.allclose(c[rep.states[:, 0] == 1], 0.75)
    assert np.allclose(c[rep.states[:, 0] == 2], 2.0)
    vals, counts = np.unique(c, return_counts=True)
    assert list(counts) == [1, 4, 9]


# ---------------------------------------------------------------- domains


@pytest.mark.parametrize("s2", [0, 1, 4, 7])
def test_ball_selects_all_low_spins(s2):
    h = 0.1
    s = s2 / 2
    dom = SemialgebraicDomain.ball(h**2 * s * (s + 1) + 1e-6 * h**2)
    E = domain_eigenspace(dom, TruncatedRegularRep(s2 + 3), h)
    assert E.dimension == sum((k + 1) ** 2 for k in range(s2 + 1))


def test_cap_dimension_examples():
    h = 0.05
    E = domain_eigenspace(SemialgebraicDomain.cap(h**2 * 2 + 1e-9, 0.0), TruncatedRegularRep(6), h)
    assert E.dimension == cap_state_count(2, 0) == enumerate_cap(2, 0) == 5
    E = eigenspace_for(SemialgebraicDomain.exact_cap(2, 0), 0.37)
    assert E.dimension == 5


@given(st.integers(0, 24), st.data())
def test_cap_count_matches_eigenspace(s2, data):
    m2 = data.draw(st.integers(-s2 - 2, s2 + 1))
    E = eigenspace_for(SemialgebraicDomain.exact_cap(s2, m2), 1.0)
    assert E.dimension == cap_state_count(s2, m2) == enumerate_cap(s2, m2)


def test_cap_count_full_ball_and_formula():
    for s2 in range(0, 12):
        assert cap_state_count(s2, -s2 - 1) == sum((k + 1) ** 2 for k in range(s2 + 1))
    for s2, m2 in [(2, 0), (7, 1), (20, -3), (9, -4)]:
        sv, mv = sympy.Rational(s2, 2), sympy.Rational(m2, 2)
        js = [mv + sympy.Rational(i + 1, 2) for i in range(int(2 * (sv - mv)))]
        expr = sum((2 * jj + 1) * (2 * jj - 2 * mv) for jj in js)
        assert Fraction(str(expr)) == cap_count_formula(s2, m2)
    ratio = float(cap_count_formula(400, 0)) / cap_state_count(400, 0)
    assert ratio == pytest.approx(2.0, rel=0.02)


def test_general_kind_is_not_quantizable():
    with pytest.raises(QuantizabilityError):
        SemialgebraicDomain(((x1,),))
    with pytest.raises(QuantizabilityError):
        SemialgebraicDomain.from_json({"components": [{"polys": [{"vars": "x1,x2", "coeffs": [[1]]}]}]})


def test_truncation_error_when_rep_too_small():
    with pytest.raises(TruncationError):
        domain_eigenspace(SemialgebraicDomain.ball(1.0), TruncatedRegularRep(3), 0.1)


def test_from_json():
    dom = SemialgebraicDomain.from_json({"components": [{"polys": [{"vars": "C,x3", "coeffs": [[1.0], [-1.0]]}]}],
                                         "radius": 1.0})
    a = eigenspace_for(dom, 0.1).dimension
    assert a == eigenspace_for(SemialgebraicDomain.ball(1.0), 0.1).dimension
    assert eigenspace_for(SemialgebraicDomain.from_json({"exact_units": True, "s2": 2, "m2": 0}), 1.0).dimension == 5
    assert eigenspace_for(SemialgebraicDomain.from_json({"exact_units": True, "s2": 2}), 1.0).dimension == 14


def test_union_and_intersection_masks():
    h = 0.05
    ball = SemialgebraicDomain.ball(1.0)
    up = SemialgebraicDomain.cap(1.0, 0.3)
    down = SemialgebraicDomain((( P.diagonal([[1.0], [-1.0]]), P.diagonal([[-0.3, -1.0]]) ),), 1.0)
    rep = TruncatedRegularRep(ball.max_two_j(h))
    m = lambda d: domain_eigenspace(d, rep, h).selected
    assert np.array_equal(m(up.intersection(ball)), m(up) & m(ball))
    assert np.array_equal(m(up.union(down)), m(up) | m(down))
    assert not np.any(m(up) & m(down))
    assert np.array_equal(m(up.intersection(down)), np.zeros(rep.dim, bool))


def test_compression_consistency():
    h = 0.2
    E = eigenspace_for(SemialgebraicDomain.cap(1.0, 0.1), h)
    Pd = E.projector().to_dense()
    assert np.array_equal(Pd, Pd.conj().T) and np.array_equal(Pd @ Pd, Pd)
    Q = quantize_polynomial(x1 * x3 + x2, E.rep.two_j_max, h)
    full = Q.to_dense()
    sel = E.selected
    assert np.allclose(quantize_observable(E, x1 * x3 + x2).to_dense(), full[np.ix_(sel, sel)], atol=1e-14)


def test_quantize_observable_examples():
    h = 0.25
    E = eigenspace_for(SemialgebraicDomain.cap(1.0, 0.1), h)
    assert np.allclose(quantize_observable(E, P.constant(1.0)).to_dense(), np.eye(E.dimension))
    sel = E.selected
    Q3 = quantize_observable(E, x3).to_dense()
    assert np.allclose(Q3, np.diag(h * E.rep.states[sel, 1] / 2))
    Eb = eigenspace_for(SemialgebraicDomain.exact_ball(2), h)
    Q1 = quantize_observable(Eb, x1)
    for k in (1, 2):
        assert np.allclose(Q1.blocks[k], -h * angular_momentum(k)[0])


# ---------------------------------------------------------------- bulk and thickness


def test_bulk_filtration_examples():
    E = eigenspace_for(SemialgebraicDomain.exact_cap(40, 0), 1.0)
    assert all(np.array_equal(a, b) for a, b in zip(bulk_filtration(E, 0), E.label_mask))
    shrunk = domain_eigenspace(SemialgebraicDomain.exact_cap(36, 4), E.rep, 1.0)
    assert all(np.array_equal(a, b) for a, b in zip(bulk_filtration(E, 2), shrunk.label_mask))
    with pytest.raises(ArgumentError):
        bulk_filtration(E, -1)


@given(st.floats(0, 3), st.floats(0, 3))
def test_bulk_filtration_nested(t1, t2):
    lo, hi = sorted((t1, t2))
    E = eigenspace_for(SemialgebraicDomain.cap(1.0, -0.2), 0.05)
    for a, b in zip(bulk_filtration(E, hi), bulk_filtration(E, lo)):
        assert not np.any(a & ~b)


def test_thickness_examples():
    hs = [0.1, 0.05, 0.025]
    r0 = thickness_ratio(SemialgebraicDomain.cap(1.0, 0.0), 0.0, hs)
    assert np.all(r0.measured == 1.0)
    rb = thickness_ratio(SemialgebraicDomain.ball(1.0), 1.0, hs)
    assert rb.is_monotone(increasing=True, slack=0.0, column=1)
    assert rb.measured[-1] > 0.9
    rc = thickness_ratio(None, 2.0, hs, R_fixed=1.0, h_fixed=0.0)
    assert rc.is_monotone(increasing=True, slack=0.0, column=1)
    with pytest.raises(ArgumentError):
        thickness_ratio(None, 1.0, hs)


def test_weyl_examples():
    assert weyl_dimension(math.sqrt(2) + 1e-9) == 14
    assert weyl_dimension(0) == 1
    assert abs(weyl_dimension(100) / 100**3 - 8 / 3) <= 0.02 * 8 / 3


# ---------------------------------------------------------------- spin-1/2 multiplication


def test_multiply_fundamental_against_sympy_cg():
    rep = TruncatedRegularRep(5)
    for a2 in (1, -1):
        for b2 in (1, -1):
            M = multiply_fundamental(rep, a2, b2).matrix.toarray()
            for i in range(0, rep.dim, 3):
                tj, tm, tn = rep.state(i).two_j, rep.state(i).two_m, rep.state(i).two_n
                j = sympy.Rational(tj, 2)
                for tj2 in (tj - 1, tj + 1):
                    if tj2 < 0 or tj2 > rep.two_j_max:
                        continue
                    if abs(tm + a2) > tj2 or abs(tn + b2) > tj2:
                        continue
                    j2 = sympy.Rational(tj2, 2)
                    mu, al = -sympy.Rational(tm, 2), -sympy.Rational(a2, 2)
                    nu, be = -sympy.Rational(tn, 2), -sympy.Rational(b2, 2)
                    ref = sympy.sqrt((2 * j + 1) / (2 * j2 + 1)) \
                        * CG(j, mu, sympy.Rational(1, 2), al, j2, mu + al).doit() \
                        * CG(j, nu, sympy.Rational(1, 2), be, j2, nu + be).doit()
                    dest = rep.index(WeightState(tj2, tm + a2, tn + b2))
                    assert abs(M[dest, i] - float(ref)) <= 1e-12


def test_multiply_fundamental_examples():
    rep = TruncatedRegularRep(4)
    F = multiply_fundamental(rep, 1, -1)
    col = F.matrix[:, 0].toarray().ravel()
    assert np.count_nonzero(col) == 1
    assert col[rep.index(WeightState(1, 1, -1))] == pytest.approx(1 / math.sqrt(2))
    assert F.leaked
    inner = F.matrix[:, : TruncatedRegularRep(3).dim].toarray()
    assert np.linalg.norm(inner, 2) <= 1 + 1e-12
    with pytest.raises(ArgumentError):
        multiply_fundamental(rep, 0, 1)


def test_separability_ball_examples():
    r = check_separability_ball(1, 1, [40])
    assert r.final_residual <= 0.05 * 0.5
    c = check_separability_ball(0, 0, [5, 10])
    assert np.all(c.measured == 1.0) and np.all(c.residuals == 0.0)
    t = check_separability_ball(-1, 1, [5, 10, 20, 40])
    assert t.is_monotone(slack=0.1)


# ---------------------------------------------------------------- correspondence


def test_poisson_bracket_examples_and_sympy():
    assert poisson_bracket(x1, x2).terms == {(0, 0, 1): -1}
    assert not poisson_bracket(x3, Cas).terms
    X = sympy.symbols("x1 x2 x3")
    f = X[0] ** 2 * X[2] + 3 * X[1]
    g = X[0] * X[1] - X[2] ** 3
    ref = sum(-sympy.LeviCivita(a, b, c) * X[c] * sympy.diff(f, X[a]) * sympy.diff(g, X[b])
              for a in range(3) for b in range(3) for c in range(3))
    ours = poisson_bracket(P.general({(2, 0, 1): 1, (0, 1, 0): 3}), P.general({(1, 1, 0): 1, (0, 0, 3): -1}))
    mine = sum(sympy.Rational(complex(v).real) * X[0] ** k[0] * X[1] ** k[1] * X[2] ** k[2]
               for k, v in ours.terms.items())
    assert all(complex(v).imag == 0 for v in ours.terms.values())
    assert sympy.expand(ref - mine) == 0


def test_vn_dirac_examples():
    dom = SemialgebraicDomain.cap(1.0, 0.0)
    hs = [0.2, 0.1, 0.05]
    r = check_vn_dirac_su2(x3, Cas, dom, 1.0, hs)
    assert np.all(r.residuals <= 1e-13)
    r = check_vn_dirac_su2(x1, x2, dom, 1.0, hs)
    assert np.all(r.select("dirac").measured <= 1e-12)
    r = check_vn_dirac_su2(x1 * x3, x2, dom, 1.0, hs)
    assert r.select("von_neumann").is_monotone(slack=0.0)
    r = check_vn_dirac_su2(x1 * x1 * x3, x2 * x2, dom, 1.0, hs)
    assert r.select("dirac").is_monotone(slack=0.0)
    assert r.select("dirac").measured[-1] < r.select("dirac").measured[0] / 2
    assert r.metadata["thick_warning"] in ("True", "False")


def test_positivity_examples():
    hs = [0.2, 0.1]
    ball = SemialgebraicDomain.ball(1.0)
    r = positivity_check(ball, P.diagonal([[1.5, 0.2], [-1.0]]), hs)
    assert np.all(r.residuals == 0.0)
    r = positivity_check(ball, P.constant(0.7), hs)
    mins = [float(v) for v in r.metadata["min_eigenvalues"].split(",")]
    assert np.allclose(mins, 0.7)
    r = positivity_check(ball, 1.1 - x1 * x1, hs)
    assert np.all(r.residuals == 0.0)
    with pytest.raises(PreconditionError):
        positivity_check(ball, 0.5 - x1 * x1, hs)


def test_prequant_bound_examples():
    assert prequant_bound_check(x3, 5.0, 0.1)
    assert prequant_bound_check(Cas, 5.0, 0.1)


@st.composite
def cubic_polys(draw):
    exps = [(a, b, c) for a in range(4) for b in range(4) for c in range(4) if a + b + c <= 3]
    chosen = draw(st.lists(st.sampled_from(exps), min_size=1, max_size=6, unique=True))
    return P.general({k: draw(st.floats(-2, 2, allow_nan=False)) for k in chosen})


@settings(max_examples=100)
@given(cubic_polys(), st.floats(0.01, 1.0))
def test_prequant_bound_random_cubics(a, hbar):
    assert prequant_bound_check(a, 10.0, hbar)


@pytest.mark.parametrize("a,b", [(x1, x2), (x1 * x1, x2), (x1 * x3, x2 * x2 + x1), (Cas, x1)])
def test_star_product_lowest_orders(a, b):
    ratios = []
    for k in range(4):
        h = 0.2 / 2**k
        ratios.append(star_product_residual(a, b, int(round(2 / h)), h) / h**2)
    assert max(ratios) <= 1.5 * max(ratios[0], 1e-12)


def test_block_operator_algebra():
    A = BlockOperator((np.array([[2.0]]), np.array([[1.0, 1j], [-1j, 0.0]])))
    assert A.dimension == 5
    assert np.allclose((A @ A.adjoint()).to_dense(), A.to_dense() @ A.to_dense().conj().T)
    assert A.frob_norm_normalized() == pytest.approx(np.sqrt(np.sum(np.abs(A.to_dense()) ** 2) / 5))
    assert A.min_eigenvalue() == pytest.approx(np.linalg.eigvalsh(A.to_dense())[0])
    with pytest.raises(ArgumentError):
        A + BlockOperator((np.array([[1.0]]),))


def test_von_neumann_rate_on_ball():
    # without a flat edge the product defect is first order in hbar
    hs = [0.1, 0.05, 0.025]
    v = check_vn_dirac_su2(x1, x2, SemialgebraicDomain.ball(1.0), 1.0, hs).select("von_neumann").measured
    assert np.all(v[:-1] / v[1:] >= 1.8)
