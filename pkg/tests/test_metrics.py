import io

import numpy as np
import pytest

from conftest import make_mask, make_prob, random_pair
from fitzcal.errors import DataError
from fitzcal.metrics import (ConfusionCounts, CurveCounts, aggregate_curves,
                             biou, confusion_at, curve_fast, curve_naive,
                             dice, dump_curve_csv, grid_index, sweep_counts,
                             threshold_grid)

PROBS_2X2 = [0.2, 0.6, 0.8, 0.4]
MASK_2X2 = [0, 1, 1, 0]


def test_threshold_grid():
    grid = threshold_grid()
    assert len(grid) == 990
    assert grid[0] == pytest.approx(0.001)
    assert grid[-1] == pytest.approx(0.990)
    assert np.allclose(np.diff(grid), 0.001)


def test_grid_index_rejects_off_grid():
    assert grid_index(0.001) == 0
    assert grid_index(0.990) == 989
    with pytest.raises(DataError):
        grid_index(0.9905)
    with pytest.raises(DataError):
        grid_index(0.0)


class TestConfusion:
    def test_at_half(self):
        c = confusion_at(make_prob(PROBS_2X2, 2, 2), make_mask(MASK_2X2, 2, 2), 0.5)
        assert (c.tp, c.fp, c.fn, c.tn) == (2, 0, 0, 2)

    def test_at_point_seven(self):
        c = confusion_at(make_prob(PROBS_2X2, 2, 2), make_mask(MASK_2X2, 2, 2), 0.7)
        assert (c.tp, c.fp, c.fn, c.tn) == (1, 0, 1, 2)

    def test_all_positive_empty_mask(self):
        c = confusion_at(make_prob([0.3, 0.9], 2, 1), make_mask([0, 0], 2, 1), 0.001)
        assert (c.tp, c.fp, c.fn, c.tn) == (0, 2, 0, 0)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            confusion_at(make_prob([0.5], 1, 1), make_mask([0, 1], 2, 1), 0.5)


class TestScalarMetrics:
    def test_dice(self):
        assert dice(ConfusionCounts(2, 0, 0, 2)) == 1.0
        assert dice(ConfusionCounts(1, 0, 1, 2)) == pytest.approx(2 / 3)
        assert dice(ConfusionCounts(0, 0, 0, 4)) == 1.0  # both empty

    def test_biou(self):
        assert biou(ConfusionCounts(1, 0, 1, 2)) == 0.5
        assert biou(ConfusionCounts(0, 3, 0, 1)) == 0.0
        assert biou(ConfusionCounts(0, 0, 0, 4)) == 1.0


class TestCurves:
    def test_five_regime_dice_curve(self):
        curve = curve_fast(make_prob(PROBS_2X2, 2, 2), make_mask(MASK_2X2, 2, 2), "dice")
        grid = threshold_grid()
        for tau, value in zip(grid, curve.values):
            if tau <= 0.2:
                expected = 2 / 3
            elif tau <= 0.4:
                expected = 0.8
            elif tau <= 0.6:
                expected = 1.0
            elif tau <= 0.8:
                expected = 2 / 3
            else:
                expected = 0.0
            assert value == expected, f"tau={tau}"

    def test_saturated(self):
        curve = curve_fast(make_prob([1.0] * 4, 2, 2), make_mask([1] * 4, 2, 2), "dice")
        assert (curve.values == 1.0).all()

    def test_naive_single_pixel_fg(self):
        curve = curve_naive(make_prob([0.5], 1, 1), make_mask([1], 1, 1), "dice")
        assert (curve.values[:500] == 1.0).all()
        assert (curve.values[500:] == 0.0).all()

    def test_naive_single_pixel_bg(self):
        curve = curve_naive(make_prob([0.5], 1, 1), make_mask([0], 1, 1), "dice")
        assert (curve.values[:500] == 0.0).all()
        assert (curve.values[500:] == 1.0).all()  # both-empty above max prob

    def test_empty_mask_regimes(self):
        curve = curve_naive(make_prob([0.25, 0.25], 2, 1), make_mask([0, 0], 2, 1), "biou")
        assert (curve.values[:250] == 0.0).all()
        assert (curve.values[250:] == 1.0).all()

    def test_fast_equals_naive_randomized(self, rng):
        for _ in range(25):
            prob, mask = random_pair(rng, max_side=24)
            for metric in ("dice", "biou"):
                fast = curve_fast(prob, mask, metric)
                naive = curve_naive(prob, mask, metric)
                assert np.array_equal(fast.values, naive.values)

    def test_counts_monotone(self, rng):
        for _ in range(10):
            prob, mask = random_pair(rng, max_side=24)
            counts = sweep_counts(prob, mask)
            assert (np.diff(counts.tp) <= 0).all()
            assert (np.diff(counts.fp) <= 0).all()
            assert (np.diff(counts.fn) >= 0).all()
            assert (np.diff(counts.tn) >= 0).all()
            assert counts.tp[0] + counts.fp[0] + counts.fn[0] + counts.tn[0] \
                == prob.probs.size

    def test_values_bounded(self, rng):
        prob, mask = random_pair(rng)
        for metric in ("dice", "biou"):
            values = curve_fast(prob, mask, metric).values
            assert (values >= 0).all() and (values <= 1).all()


def constant_counts(tp, fp, fn, n_pixels=100):
    ones = np.ones(990, dtype=np.int64)
    return CurveCounts(tp * ones, fp * ones, tp + fn, n_pixels)


class TestAggregation:
    def test_single_curve_identity(self):
        curve = curve_fast(make_prob(PROBS_2X2, 2, 2), make_mask(MASK_2X2, 2, 2), "dice")
        agg = aggregate_curves([curve], mode="macro")
        assert np.array_equal(agg.values, curve.values)

    def test_macro_mean(self):
        from fitzcal.metrics import MetricCurve
        a = MetricCurve("dice", np.full(990, 0.4))
        b = MetricCurve("dice", np.full(990, 0.8))
        agg = aggregate_curves([a, b], mode="macro")
        assert np.allclose(agg.values, 0.6)

    def test_micro_pooled_counts(self):
        # summed counts tp=3, fp=1, fn=2 -> bIoU 3/6
        c1 = constant_counts(1, 0, 1)
        c2 = constant_counts(2, 1, 1)
        from fitzcal.metrics import curve_from_counts
        curves = [curve_from_counts(c, "biou") for c in (c1, c2)]
        agg = aggregate_curves(curves, mode="micro", counts=[c1, c2])
        assert (agg.values == 0.5).all()

    def test_macro_order_is_bit_exact(self, rng):
        from fitzcal.metrics import MetricCurve
        curves = [MetricCurve("dice", rng.random(990)) for _ in range(7)]
        ids = [f"img{i}" for i in range(7)]
        agg1 = aggregate_curves(curves, mode="macro", image_ids=ids)
        perm = [3, 0, 6, 2, 5, 1, 4]
        agg2 = aggregate_curves([curves[i] for i in perm], mode="macro",
                                image_ids=[ids[i] for i in perm])
        assert np.array_equal(agg1.values, agg2.values)

    def test_micro_permutation_invariant(self, rng):
        from fitzcal.metrics import curve_from_counts
        counts = [constant_counts(int(rng.integers(0, 5)), int(rng.integers(0, 5)),
                                  int(rng.integers(0, 5))) for _ in range(5)]
        curves = [curve_from_counts(c, "biou") for c in counts]
        agg1 = aggregate_curves(curves, mode="micro", counts=counts)
        agg2 = aggregate_curves(curves[::-1], mode="micro", counts=counts[::-1])
        assert np.array_equal(agg1.values, agg2.values)

    def test_empty_input(self):
        with pytest.raises(DataError):
            aggregate_curves([], mode="macro")


def test_compiled_and_python_kernels_agree(rng):
    from fitzcal import _kernels_py
    from fitzcal.metrics import _impl

    for _ in range(20):
        prob, mask = random_pair(rng, max_side=32)
        tp_a, fp_a = _impl.sweep_counts(prob.probs, mask.labels)
        tp_b, fp_b = _kernels_py.sweep_counts(prob.probs, mask.labels)
        assert np.array_equal(tp_a, tp_b)
        assert np.array_equal(fp_a, fp_b)


def test_dice_iou_identity(rng):
    for _ in range(10):
        prob, mask = random_pair(rng, max_side=24)
        counts = sweep_counts(prob, mask)
        d = curve_fast(prob, mask, "dice").values
        j = curve_fast(prob, mask, "biou").values
        not_empty = (counts.tp + counts.fp + counts.fn) > 0
        assert np.abs(d[not_empty] - 2 * j[not_empty] / (1 + j[not_empty])).max() < 1e-12


def test_curve_csv_dump():
    curve = curve_fast(make_prob(PROBS_2X2, 2, 2), make_mask(MASK_2X2, 2, 2), "dice")
    buf = io.StringIO()
    dump_curve_csv(curve, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "tau,value"
    assert len(lines) == 991
    assert lines[1] == "0.001,0.666667"
    assert lines[-1] == "0.990,0.000000"
