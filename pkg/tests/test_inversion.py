import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_model
from ebm_inverse import inversion
from ebm_inverse.errors import (
    DegenerateRates,
    DimensionMismatch,
    FrequencyOrder,
    LabelingAmbiguous,
    NearZeroLambda,
    ValidationError,
)
from ebm_inverse.inversion import (
    MeasuredCluster,
    eval_measured_charpoly,
    eval_Q,
    invert,
    recover_D,
    recover_D_glassy,
    recover_rates,
    recover_weights,
)
from ebm_inverse.relaxation import EbmModel, reference_model
from ebm_inverse.spectral import compute_cluster


def measured(m, k):
    return MeasuredCluster.from_cluster(compute_cluster(m, k))


@pytest.fixture(scope="module")
def ref5():
    m = reference_model(5, 1.0)
    return m, measured(m, 81), measured(m, 1001)


def reference_cluster(k=1):
    # hand-factored lam (lam + 1)^2
    return MeasuredCluster(k=k, roots=(0, -1, -1), interlaced=(0,), extra=(1, 2))


class TestMeasuredCluster:
    def test_labels_validated(self):
        with pytest.raises(ValidationError):
            MeasuredCluster(k=1, roots=(0, -1, -2), interlaced=(0, 0), extra=(1, 2))
        with pytest.raises(ValidationError):
            MeasuredCluster(k=1, roots=(1j, -1, -2), interlaced=(0,), extra=(1, 2))
        with pytest.raises(ValidationError):
            MeasuredCluster(k=1, roots=(-3, -1, -2, -5), interlaced=(0, 1), extra=(2, 3))

    def test_labeling_complex_pair(self):
        c = MeasuredCluster.from_roots(81, [-2 + 5j, -3.0, -2 - 5j, -8.0])
        assert c.interlaced_roots == (-3.0, -8.0)
        assert c.extra == (0, 2)

    def test_labeling_real(self):
        c = MeasuredCluster.from_roots(1, [-1, 0, -1])
        assert c.interlaced_roots == (0.0,)
        with pytest.raises(LabelingAmbiguous):
            MeasuredCluster.from_roots(1, [0.0, -1.0, -2.0])


class TestCharpoly:
    def test_zero_factor(self):
        assert eval_measured_charpoly(reference_cluster(), -1.0) == 0

    def test_reference(self):
        assert eval_measured_charpoly(reference_cluster(), 1.0) == 4


class TestEvalQ:
    def test_vanishes_at_rate(self, ref5):
        m, c1, c2 = ref5
        for ri in m.r:
            assert abs(eval_Q(c1, c2, -ri)) <= 1e-6 * math.prod(m.r)

    def test_reference_model(self, n1_model):
        c1, c2 = measured(n1_model, 1), measured(n1_model, 2)
        assert eval_Q(c1, c2, 1.0) == pytest.approx(3.0, rel=1e-9)

    def test_hand_product(self, ref5):
        _, c1, c2 = ref5
        assert eval_Q(c1, c2, -7.0) == pytest.approx(-11232.0, rel=1e-6)

    def test_guard(self, ref5):
        _, c1, c2 = ref5
        with pytest.raises(NearZeroLambda):
            eval_Q(c1, c2, 0.0)

    def test_pair_checks(self, ref5):
        _, c1, c2 = ref5
        with pytest.raises(FrequencyOrder):
            eval_Q(c2, c1, -7.0)
        with pytest.raises(DimensionMismatch):
            eval_Q(c1, measured(reference_model(4, 1.0), 1001), -7.0)


class TestRates:
    def test_reference_model(self, ref5):
        m, c1, c2 = ref5
        assert recover_rates(c1, c2) == pytest.approx(m.r, abs=1e-6)

    def test_reference_model_deflation_path(self, n1_model):
        r = recover_rates(measured(n1_model, 1), measured(n1_model, 2))
        assert r == pytest.approx((2.0,), abs=1e-9)

    @pytest.mark.parametrize("N", [2, 5, 9])
    def test_label_independence(self, N):
        m = reference_model(N, 0.5)
        c1, c2 = measured(m, 81), measured(m, 1001)
        a = recover_rates(c1, c2, brackets_from="k1")
        b = recover_rates(c1, c2, brackets_from="k2")
        assert max(abs(x - y) for x, y in zip(a, b)) <= 1e-6

    def test_vieta_cross_check(self, ref5):
        m, c1, c2 = ref5
        res = invert(c1, c2)
        assert res.diagnostics["r_N_vieta"] == pytest.approx(m.r[-1], rel=1e-8)
        # root errors near 1e-13, amplified by the 1/(1/K1 - 1/K2) scale factor
        norm = res.diagnostics["q_norm"]
        assert all(abs(x) <= 1e-7 * norm for x in res.diagnostics["q_dropped_coefficients"])


class TestWeights:
    def test_reference(self):
        assert recover_weights(reference_cluster(), (2.0,)) == pytest.approx((2.0,))

    def test_reference_model(self, ref5):
        m, _, c2 = ref5
        assert recover_weights(c2, m.r) == pytest.approx(m.b, abs=1e-6)

    def test_sign_alternation(self, ref5):
        m, _, c2 = ref5
        signs = [np.sign(eval_measured_charpoly(c2, -ri)) for ri in m.r]
        assert all(s1 == -s2 for s1, s2 in zip(signs, signs[1:]))

    def test_degenerate(self, ref5):
        _, _, c2 = ref5
        with pytest.raises((DegenerateRates, ValidationError)):
            recover_weights(c2, (5.0, 10.0, 15.0, 20.0, 20.0 + 1e-14))


class TestD:
    def test_reference(self):
        assert recover_D(reference_cluster(), (2.0,), (2.0,)) == pytest.approx(1.0)

    def test_glassy_formula(self):
        assert recover_D_glassy((2.0,), (2.0,)) == 1
        assert recover_D_glassy((5, 10, 15, 20, 25), (1,) * 5) == pytest.approx(137 / 300, rel=1e-15)

    @pytest.mark.parametrize("lam", [-2.5, -7.0, 0.7, 3.0, -33.3])
    def test_evaluation_point_irrelevant(self, ref5, lam):
        # solving the characteristic equation for D at any lam off the poles
        m, c1, c2 = ref5
        r, b = m.r, m.b
        shifted = [lam + ri for ri in r]
        memory = sum(bi * math.prod(s for j, s in enumerate(shifted) if j != i) for i, bi in enumerate(b))
        D_lam = (eval_measured_charpoly(c2, lam) + memory) / math.prod(shifted) - lam * lam / c2.K
        assert D_lam == pytest.approx(recover_D(c2, r, b), abs=1e-8)

    def test_table_values(self):
        m = reference_model(5, 5.0)
        assert abs(invert(measured(m, 81), measured(m, 1001)).D_inv - 5.0) <= 1e-3
        m = reference_model(9, 0.5)
        assert abs(invert(measured(m, 81), measured(m, 91)).D_inv - 0.5) <= 5e-3


class TestInvert:
    def test_reference_row(self):
        m = reference_model(5, 0.5)
        res = invert(measured(m, 81), measured(m, 1001))
        assert abs(res.D_inv - 0.5) <= 1e-3
        assert res.r_inv == pytest.approx(m.r, abs=1e-6)
        assert res.b_inv == pytest.approx(m.b, abs=1e-6)
        assert res.diagnostics["charpoly_residual"] <= 1e-10

    def test_near_pair(self):
        m = reference_model(5, 1.0)
        assert abs(invert(measured(m, 81), measured(m, 91)).D_inv - 1.0) <= 5e-3

    def test_identical_clusters(self, ref5):
        _, c1, _ = ref5
        with pytest.raises(FrequencyOrder):
            invert(c1, c1)

    def test_stage_label(self, ref5):
        m, c1, c2 = ref5
        # a grossly wrong a_1 leaves Q without a sign change in the first bracket
        bad = MeasuredCluster.from_roots(c2.k, [c2.roots[0] * 50] + list(c2.roots[1:]))
        with pytest.raises(inversion.EbmError) as info:
            invert(c1, bad)
        assert info.value.stage == "rates"

    def test_as_dict(self, ref5):
        _, c1, c2 = ref5
        d = invert(c1, c2).as_dict()
        assert set(d) == {"r_inv", "b_inv", "D_inv", "D_inv_glassy", "diagnostics"}

    def test_glassy_agreement(self):
        for N in (1, 5, 9):
            m = reference_model(N, 1.0, normalize_h=True)
            res = invert(measured(m, 81), measured(m, 1001))
            assert abs(res.D_inv - res.D_inv_glassy) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["D>h", "D=h", "D<h"]))
def test_round_trip_property(seed, regime):
    m = random_model(np.random.default_rng(seed), regime)
    res = invert(measured(m, 81), measured(m, 1001))
    assert res.D_inv == pytest.approx(m.D, rel=1e-5)
    assert res.r_inv == pytest.approx(m.r, rel=1e-5)
    assert res.b_inv == pytest.approx(m.b, rel=1e-5)
