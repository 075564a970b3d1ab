import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mcstop.estimators import (
    ConsistentBatchMeans,
    FixedBatchMeans,
    Regenerative,
    VarianceEstimate,
    batch_means,
    half_width,
    rs_variance,
)
from mcstop.model import BatchSchedule, ScalarTrace, Tour, TourSet, cbm_schedule

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def make_tours(pairs):
    return TourSet.from_tours([Tour(n, s) for n, s in pairs])


class TestBatchMeans:
    def test_hand_example_two_batches(self):
        est = batch_means(ScalarTrace([1.0, 3.0, 2.0, 4.0]), BatchSchedule(a=2, b=2))
        assert est.point == pytest.approx(2.5, rel=1e-9)
        assert est.sigma2 == pytest.approx(1.0, rel=1e-9)
        assert est.df == 1
        assert est.sample_count == 4

    def test_hand_example_three_batches(self):
        est = batch_means(
            ScalarTrace([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), BatchSchedule(a=3, b=2)
        )
        assert est.sigma2 == pytest.approx(8.0, rel=1e-9)

    def test_constant_trace(self):
        est = batch_means(ScalarTrace([5.0] * 6), BatchSchedule(a=3, b=2))
        assert est.sigma2 == 0.0

    def test_consumes_first_ab_points(self):
        # trailing remainder beyond a*b must not affect the estimate
        base = [1.0, 3.0, 2.0, 4.0]
        with_tail = base + [1000.0]
        est = batch_means(ScalarTrace(with_tail), BatchSchedule(a=2, b=2))
        assert est.point == pytest.approx(2.5, rel=1e-12)
        assert est.sigma2 == pytest.approx(1.0, rel=1e-12)
        assert est.sample_count == 4

    def test_insufficient_sample(self):
        with pytest.raises(ValueError, match="insufficient sample"):
            batch_means(ScalarTrace([1.0, 2.0, 3.0]), BatchSchedule(a=2, b=2))

    @given(st.lists(finite, min_size=4, max_size=60), st.floats(-100, 100))
    def test_shift_moves_point_not_sigma2(self, values, kappa):
        schedule = cbm_schedule(len(values), 0.5)
        base = batch_means(ScalarTrace(values), schedule)
        shifted = batch_means(ScalarTrace([v + kappa for v in values]), schedule)
        assert shifted.point == pytest.approx(base.point + kappa, rel=1e-9, abs=1e-6)
        assert shifted.sigma2 == pytest.approx(base.sigma2, rel=1e-9, abs=1e-6)

    @given(st.lists(finite, min_size=4, max_size=60), st.floats(-50, 50))
    def test_scale_equivariance(self, values, kappa):
        schedule = cbm_schedule(len(values), 0.5)
        base = batch_means(ScalarTrace(values), schedule)
        scaled = batch_means(ScalarTrace([v * kappa for v in values]), schedule)
        assert scaled.sigma2 == pytest.approx(
            base.sigma2 * kappa * kappa, rel=1e-9, abs=1e-6
        )


class TestRsVariance:
    def test_hand_example(self):
        est = rs_variance(make_tours([(2, 4.0), (2, 6.0)]))
        assert est.point == pytest.approx(2.5, rel=1e-9)
        assert est.sigma2 == pytest.approx(0.25, rel=1e-9)
        assert est.df is None
        assert est.sample_count == 2

    def test_identical_tours(self):
        est = rs_variance(make_tours([(3, 6.0)] * 5))
        assert est.point == pytest.approx(2.0, rel=1e-12)
        assert est.sigma2 == 0.0

    def test_unit_tours(self):
        est = rs_variance(make_tours([(1, 0.0), (1, 2.0)]))
        assert est.point == pytest.approx(1.0, rel=1e-9)
        assert est.sigma2 == pytest.approx(1.0, rel=1e-9)

    def test_point_is_ratio_of_totals(self):
        tours = make_tours([(3, 1.0), (5, 4.0), (2, -1.0)])
        est = rs_variance(tours)
        assert est.point == pytest.approx(4.0 / 10.0, rel=1e-12)

    def test_single_tour_rejected(self):
        with pytest.raises(ValueError, match="insufficient tours"):
            rs_variance(make_tours([(3, 1.0)]))

    @given(
        st.lists(
            st.tuples(st.integers(1, 20), st.floats(-100, 100)), min_size=2, max_size=30
        ),
        st.floats(-10, 10),
    )
    def test_shift_by_kappa_per_step(self, pairs, kappa):
        # adding kappa to every underlying value sends S_r to S_r + kappa*N_r
        base = rs_variance(make_tours(pairs))
        shifted = rs_variance(
            make_tours([(n, s + kappa * n) for n, s in pairs])
        )
        assert shifted.point == pytest.approx(base.point + kappa, rel=1e-9, abs=1e-6)
        assert shifted.sigma2 == pytest.approx(base.sigma2, rel=1e-6, abs=1e-6)


class TestHalfWidth:
    def test_rs_example(self):
        est = VarianceEstimate(point=0.0, sigma2=1.0, df=None, sample_count=400)
        # z_{.975}/20; the displayed 0.0979982 rounds this value
        assert half_width(est, 0.05, 400) == pytest.approx(
            0.09799819922700271, rel=1e-9
        )
        assert half_width(est, 0.05, 400) == pytest.approx(0.0979982, abs=5e-8)

    def test_bm_example(self):
        est = VarianceEstimate(point=0.0, sigma2=4.0, df=30, sample_count=400)
        # 2 * t_{30,.975} / 20 with the full-precision quantile
        assert half_width(est, 0.05, 400) == pytest.approx(
            0.2042272456301238, rel=1e-9
        )

    def test_zero_variance(self):
        est = VarianceEstimate(point=1.0, sigma2=0.0, df=4, sample_count=100)
        assert half_width(est, 0.05, 100) == 0.0

    def test_rejects_bad_run_length(self):
        est = VarianceEstimate(point=0.0, sigma2=1.0, df=None, sample_count=4)
        with pytest.raises(ValueError, match="run length"):
            half_width(est, 0.05, 0)

    def test_rejects_bad_delta(self):
        est = VarianceEstimate(point=0.0, sigma2=1.0, df=None, sample_count=4)
        with pytest.raises(ValueError, match="delta"):
            half_width(est, 1.0, 4)


class TestVarianceEstimate:
    def test_rejects_negative_sigma2(self):
        with pytest.raises(ValueError, match="nonnegative"):
            VarianceEstimate(point=0.0, sigma2=-1.0, df=None, sample_count=4)

    def test_rejects_tiny_sample(self):
        with pytest.raises(ValueError, match="sample count"):
            VarianceEstimate(point=0.0, sigma2=1.0, df=None, sample_count=1)


class TestSelectors:
    def test_fixed_bm_tag_and_evaluate(self):
        sel = FixedBatchMeans(a=30)
        assert sel.tag == "bm30"
        trace = ScalarTrace(np.arange(90.0))
        est = sel.evaluate(trace)
        direct = batch_means(trace, BatchSchedule(a=30, b=3))
        assert est.sigma2 == direct.sigma2
        assert est.df == 29

    def test_cbm_tag_and_evaluate(self):
        sel = ConsistentBatchMeans(theta=0.5)
        assert sel.tag == "cbm(0.5)"
        trace = ScalarTrace(np.sin(np.arange(2500.0)))
        est = sel.evaluate(trace)
        direct = batch_means(trace, cbm_schedule(2500, 0.5))
        assert est.sigma2 == direct.sigma2
        assert est.df == 49

    def test_regenerative_evaluate(self):
        tours = make_tours([(2, 4.0), (2, 6.0)])
        est = Regenerative().evaluate(tours)
        assert est.sigma2 == rs_variance(tours).sigma2
        assert Regenerative().tag == "rs"
