import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ebm_inverse import polyutil
from ebm_inverse.errors import ConjugacyViolation, DegreeMismatch, MaxIterExceeded, NotARoot, SignAgreement
from ebm_inverse.polyutil import Bracket, Polynomial


def coeffs(p):
    return list(p.coefficients)


class TestPolynomial:
    def test_trailing_zeros_trimmed(self):
        assert coeffs(Polynomial([1, 2, 0, 0])) == [1, 2]
        assert coeffs(Polynomial([0, 0])) == [0.0]

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Polynomial([1, math.nan])

    def test_arithmetic(self):
        p, q = Polynomial([1, 1]), Polynomial([-1, 1])
        assert coeffs(p * q) == [-1, 0, 1]
        assert coeffs(p + q) == [0, 2]
        assert coeffs(p - q) == [2]
        assert coeffs(p * 3) == [3, 3]


class TestEvaluate:
    def test_constant(self):
        assert polyutil.evaluate(Polynomial([5]), 123) == 5

    def test_monomial(self):
        assert polyutil.evaluate(Polynomial([0, 0, 1]), -3) == 9

    def test_reference_cubic_vanishes_at_zero(self):
        # (1 + lam^2)(lam + 2) - 2 expanded by hand
        assert polyutil.evaluate(Polynomial([0, 1, 2, 1]), 0) == 0

    def test_complex(self):
        assert polyutil.evaluate_complex(Polynomial([1, 0, 1]), 1j) == 0
        assert polyutil.evaluate_complex(Polynomial([2, 1]), 3 + 0j) == 5 + 0j
        assert polyutil.evaluate_complex(Polynomial([0, 0, 0, 1]), 1 + 1j) == -2 + 2j


class TestFromRoots:
    def test_real_pair(self):
        assert coeffs(polyutil.from_roots([1, -1])) == [-1, 0, 1]

    def test_conjugate_pair(self):
        assert coeffs(polyutil.from_roots([1j, -1j], 2.0)) == [2, 0, 2]

    def test_vieta(self):
        assert coeffs(polyutil.from_roots([-2, -3, -5])) == [30, 31, 10, 1]

    def test_unpaired_complex_root(self):
        with pytest.raises(ConjugacyViolation):
            polyutil.from_roots([1 + 1j, 2 - 1j])

    def test_pairing_tolerance(self):
        reals, pairs = polyutil.pair_conjugates([1 + 2j, 1 - 2j * (1 + 1e-12), 3.0])
        assert reals == [3.0] and len(pairs) == 1

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=10))
    def test_roots_are_zeros(self, roots):
        p = polyutil.from_roots(roots)
        for rho in roots:
            assert abs(p(rho)) <= 1e-13 * p.scale_at(max(1.0, abs(rho))) * len(roots)


class TestDeflate:
    def test_examples(self):
        assert coeffs(polyutil.deflate(Polynomial([-1, 0, 1]), 1)) == [1, 1]
        assert coeffs(polyutil.deflate(Polynomial([30, 31, 10, 1]), -2)) == [15, 8, 1]
        assert coeffs(polyutil.deflate(Polynomial([0, 1]), 0)) == [1]

    def test_not_a_root(self):
        with pytest.raises(NotARoot):
            polyutil.deflate(Polynomial([-1, 0, 1]), 2)

    def test_constant(self):
        with pytest.raises(DegreeMismatch):
            polyutil.divide_linear(Polynomial([3]), 1)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=8),
        st.floats(-10, 10, allow_nan=False),
    )
    def test_multiply_back(self, c, root):
        p = Polynomial(c)
        if p.degree < 1:
            return
        q, rem = polyutil.divide_linear(p, root)
        back = q * Polynomial([-root, 1]) + Polynomial([rem])
        scale = p.scale_at(max(1.0, abs(root)))
        for x, y in zip(back.coefficients, p.coefficients):
            assert abs(x - y) <= 1e-13 * scale

    def test_composite_matches_forward_on_exact_roots(self):
        p = polyutil.from_roots([-0.01, -3.0, -700.0])
        for root in (-0.01, -3.0, -700.0):
            a = polyutil.deflate(p, root)
            b = polyutil.deflate(p, root, composite=False)
            assert np.allclose(a.coefficients, b.coefficients, rtol=1e-9)


class TestSolveQuadratic:
    def test_double_root(self):
        assert polyutil.solve_quadratic(Polynomial([1, -2, 1])) == (1, 1)

    def test_conjugate(self):
        z1, z2 = polyutil.solve_quadratic(Polynomial([2, 0, 2]))
        assert z1 == 1j and z2 == -1j

    def test_no_cancellation(self):
        z1, z2 = polyutil.solve_quadratic(Polynomial([1e-8, 1, 1]))
        exact = mpmath.polyroots([1, 1, mpmath.mpf("1e-8")], extraprec=100)
        exact = sorted((float(mpmath.re(x)) for x in exact), reverse=True)
        assert abs(z1.real - exact[0]) <= 1e-12 * abs(exact[0])
        assert abs(z2.real - exact[1]) <= 1e-12 * abs(exact[1])

    def test_degree_check(self):
        with pytest.raises(DegreeMismatch):
            polyutil.solve_quadratic(Polynomial([1, 1]))

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-1e3, 1e3, allow_nan=False),
        st.floats(-1e3, 1e3, allow_nan=False),
        st.floats(0.01, 1e3),
    )
    def test_residual(self, c, b, a):
        p = Polynomial([c, b, a])
        for z in polyutil.solve_quadratic(p):
            assert abs(polyutil.evaluate_complex(p, z)) <= 1e-12 * p.scale_at(max(1.0, abs(z)))


class TestBisect:
    def test_linear(self):
        x = polyutil.bisect_root(lambda x: x, Bracket.of(lambda x: x, -1, 2))
        assert abs(x) <= 1e-12

    def test_sqrt2(self):
        f = lambda x: x * x - 2
        assert abs(polyutil.bisect_root(f, Bracket.of(f, 1, 2)) - math.sqrt(2)) <= 1e-12

    def test_reference_cubic_against_companion(self):
        p = Polynomial([0, 1, 2, 1])  # lam (lam + 1)^2
        # the double root at -1 does not change sign, so this bracket is rejected
        with pytest.raises(SignAgreement):
            Bracket.of(p, -2 + 1e-9, -1e-9)
        x = polyutil.bisect_root(p, Bracket.of(p, -0.5, 0.25))
        oracle = np.roots(p.coefficients[::-1])
        assert np.min(np.abs(oracle - x)) <= 1e-10

    def test_sign_agreement(self):
        with pytest.raises(SignAgreement):
            Bracket.of(lambda x: x * x + 1, -1, 1)

    def test_max_iter(self):
        f = lambda x: x - 0.3
        with pytest.raises(MaxIterExceeded):
            polyutil.bisect_root(f, Bracket.of(f, 0, 1), tol=1e-12, max_iter=5)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-50, 50), st.floats(0.1, 100), st.floats(1e-12, 1e-3))
    def test_iteration_bound(self, x0, width, tol):
        calls = []

        def f(x):
            calls.append(x)
            return x - x0

        lo, hi = x0 - width * 0.37, x0 + width * 0.63
        x = polyutil.bisect_root(f, Bracket.of(f, lo, hi), tol=tol)
        assert abs(x - x0) <= tol
        # two endpoint evaluations in Bracket.of and two more in bisect_root
        assert len(calls) - 4 <= math.ceil(math.log2((hi - lo) / tol))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(1e-2, 1e3), min_size=1, max_size=12, unique=True),
    st.floats(0.1, 10),
)
def test_bisect_deflate_round_trip(mags, lead):
    # distinct real roots of mixed sign, isolated by midpoints between neighbours
    roots = sorted(m * (-1) ** i for i, m in enumerate(mags))
    p = polyutil.from_roots(roots, lead)
    # only roots whose evaluation condition number allows 1e-10 relative accuracy
    for rho in roots:
        slope = abs(lead) * math.prod(abs(rho - other) for other in roots if other != rho)
        assume(p.scale_at(rho) * 2.2e-16 / (slope * abs(rho)) <= 1e-12)
    edges = [roots[0] - 1.0] + [0.5 * (a + b) for a, b in zip(roots, roots[1:])] + [roots[-1] + 1.0]
    found = []
    for lo, hi in zip(edges, edges[1:]):
        found.append(polyutil.bisect_root(p, Bracket.of(p, lo, hi), tol=1e-15))
    for x, rho in zip(found, roots):
        assert abs(x - rho) <= 1e-10 * abs(rho)
    q = p
    for x in sorted(found, key=abs):
        q = polyutil.deflate(q, x)
    assert q.degree == 0
