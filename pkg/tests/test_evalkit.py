import math

import numpy as np
import pytest

from muellerkit import (
    BinaryConfusion,
    SplitRng,
    SplitSpec,
    TooFewSpecimensError,
    aggregate,
    classify_metrics,
    dice,
    fewshot_indices,
    macro_dice,
    metrics_csv,
    nested_cv_splits,
    shuffled_indices,
    train_val_test_split,
)
from muellerkit.evalkit import IGNORE_LABEL, _splitmix64


class TestRngStream:
    """Frozen vectors; any change to these breaks reproducibility of
    every published split."""

    def test_splitmix64_frozen(self):
        assert _splitmix64(42) == 13679457532755275413

    def test_stream_seed_42(self):
        rng = SplitRng(42)
        got = [rng.next_u64() for _ in range(5)]
        assert got == [
            3580622183945639842,
            10378725325292465923,
            8967075514996744559,
            5001014893397904463,
            14825054885549601002,
        ]

    def test_stream_seed_0_guarded(self):
        # zero seed must not collapse to the all-zero xorshift fixed point
        rng = SplitRng(0)
        got = [rng.next_u64() for _ in range(3)]
        assert got == [
            8916199331640804048,
            16032783972208265725,
            12954103179475586193,
        ]
        assert all(v != 0 for v in got)

    def test_shuffle_frozen(self):
        assert shuffled_indices(10, 42) == [0, 1, 6, 8, 3, 9, 5, 7, 4, 2]

    def test_shuffle_is_permutation(self):
        for seed in range(10):
            out = shuffled_indices(57, seed)
            assert sorted(out) == list(range(57))

    def test_deterministic(self):
        assert shuffled_indices(100, 7) == shuffled_indices(100, 7)
        assert shuffled_indices(100, 7) != shuffled_indices(100, 8)


class TestFewshot:
    def test_subset_size_round_half_up(self):
        # floor(f*n + 0.5); 2.5 rounds to 3, never banker's rounding
        for frac, expect in [(0.01, 1), (0.05, 5), (0.25, 25), (0.5, 50), (1.0, 100)]:
            assert SplitSpec(100, frac, 0).subset_size == expect
        assert SplitSpec(10, 0.25, 0).subset_size == 3
        assert SplitSpec(10, 0.001, 0).subset_size == 1  # floor at 1

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SplitSpec(0, 0.5, 0)
        with pytest.raises(ValueError):
            SplitSpec(10, 0.0, 0)
        with pytest.raises(ValueError):
            SplitSpec(10, 1.5, 0)

    def test_frozen_vectors(self):
        assert fewshot_indices(SplitSpec(10, 0.3, 42)) == [0, 1, 6]
        assert fewshot_indices(SplitSpec(100, 0.05, 7)) == [92, 86, 3, 99, 67]
        assert fewshot_indices(SplitSpec(100, 0.01, 7)) == [92]

    def test_returns_shuffle_order_not_sorted(self):
        # full fraction returns the permutation itself
        assert fewshot_indices(SplitSpec(6, 1.0, 3)) == [5, 3, 1, 2, 0, 4]

    def test_prefix_property(self):
        # smaller fractions are prefixes of larger ones at the same seed
        big = fewshot_indices(SplitSpec(200, 0.5, 11))
        small = fewshot_indices(SplitSpec(200, 0.1, 11))
        assert big[: len(small)] == small

    def test_no_duplicates(self):
        out = fewshot_indices(SplitSpec(1000, 0.37, 5))
        assert len(out) == len(set(out)) == 370


class TestTrainValTest:
    def test_frozen(self):
        assert train_val_test_split(10, 1) == ([0, 1, 9, 4, 3, 7], [8, 2], [6, 5])
        assert train_val_test_split(5, 0) == ([4, 2, 0], [1], [3])

    def test_partition(self):
        train, val, test = train_val_test_split(137, 9, (0.7, 0.15, 0.15))
        assert sorted(train + val + test) == list(range(137))

    def test_fraction_sum_checked(self):
        with pytest.raises(ValueError):
            train_val_test_split(10, 0, (0.5, 0.2, 0.2))

    def test_too_small(self):
        with pytest.raises(ValueError):
            train_val_test_split(2, 0)


class TestNestedCV:
    def test_six_specimens_thirty_pairs(self):
        assert len(nested_cv_splits(6)) == 30

    def test_three_specimens_six_pairs(self):
        assert len(nested_cv_splits(3)) == 6

    def test_no_leakage(self):
        for s in nested_cv_splits(6):
            held = {s.test, s.val}
            assert len(held) == 2
            assert set(s.train) == set(range(6)) - held

    def test_ordered_pairs_distinct(self):
        splits = nested_cv_splits(5)
        pairs = [(s.test, s.val) for s in splits]
        assert len(set(pairs)) == len(pairs) == 20

    def test_too_few(self):
        with pytest.raises(TooFewSpecimensError):
            nested_cv_splits(2)
        with pytest.raises(TooFewSpecimensError):
            nested_cv_splits(1)


class TestDice:
    def test_identical(self):
        a = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        assert dice(a, a, 1) == 1.0

    def test_disjoint(self):
        a = np.array([[1, 1], [0, 0]], dtype=np.uint8)
        b = np.array([[0, 0], [1, 1]], dtype=np.uint8)
        assert dice(a, b, 1) == 0.0

    def test_half_overlap(self):
        a = np.array([1, 1, 0, 0], dtype=np.uint8)
        b = np.array([1, 0, 1, 0], dtype=np.uint8)
        assert dice(a, b, 1) == 0.5

    def test_empty_empty_is_one(self):
        z = np.zeros((3, 3), dtype=np.uint8)
        assert dice(z, z, 1) == 1.0

    def test_empty_vs_nonempty_is_zero(self):
        z = np.zeros(4, dtype=np.uint8)
        o = np.array([1, 0, 0, 0], dtype=np.uint8)
        assert dice(z, o, 1) == 0.0

    def test_symmetry(self, rng):
        a = rng.integers(0, 3, 100).astype(np.uint8)
        b = rng.integers(0, 3, 100).astype(np.uint8)
        for lbl in (0, 1, 2):
            assert dice(a, b, lbl) == dice(b, a, lbl)

    def test_ignore_label(self):
        pred = np.array([1, 1, 1, 1], dtype=np.uint8)
        truth = np.array([1, 0, IGNORE_LABEL, IGNORE_LABEL], dtype=np.uint8)
        # ignored pixels drop out of both sets: dice = 2*1/(2+1)
        assert dice(pred, truth, 1) == pytest.approx(2 / 3)

    def test_shape_mismatch(self):
        from muellerkit import DimensionMismatchError

        with pytest.raises(DimensionMismatchError):
            dice(np.zeros(3, dtype=np.uint8), np.zeros(4, dtype=np.uint8), 1)

    def test_macro(self):
        pred = np.array([0, 0, 1, 1, 2, 2], dtype=np.uint8)
        truth = np.array([0, 0, 1, 1, 2, 0], dtype=np.uint8)
        per = [dice(pred, truth, c) for c in (0, 1, 2)]
        assert per[0] == pytest.approx(2 * 2 / (2 + 3))
        assert per[1] == 1.0
        assert per[2] == pytest.approx(2 * 1 / (2 + 1))
        assert macro_dice(pred, truth, [0, 1, 2]) == pytest.approx(sum(per) / 3)

    def test_macro_requires_classes(self):
        with pytest.raises(ValueError):
            macro_dice(np.zeros(2, dtype=np.uint8), np.zeros(2, dtype=np.uint8), [])


class TestClassification:
    def test_from_planes(self):
        pred = np.array([1, 1, 0, 0, 1], dtype=np.uint8)
        truth = np.array([1, 0, 0, 1, IGNORE_LABEL], dtype=np.uint8)
        c = BinaryConfusion.from_planes(pred, truth, positive_class=1)
        assert (c.tp, c.fp, c.tn, c.fn) == (1, 1, 1, 1)

    def test_perfect(self):
        m = classify_metrics(BinaryConfusion(tp=5, fp=0, tn=5, fn=0))
        assert (m.accuracy, m.sensitivity, m.specificity) == (1.0, 1.0, 1.0)

    def test_all_wrong(self):
        m = classify_metrics(BinaryConfusion(tp=0, fp=5, tn=0, fn=5))
        assert (m.accuracy, m.sensitivity, m.specificity) == (0.0, 0.0, 0.0)

    def test_nan_on_empty_denominator(self):
        m = classify_metrics(BinaryConfusion(tp=0, fp=0, tn=10, fn=0))
        assert math.isnan(m.sensitivity)
        assert m.specificity == 1.0
        assert m.accuracy == 1.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            BinaryConfusion(tp=-1, fp=0, tn=0, fn=0)

    def test_accuracy_identity(self, rng):
        pred = rng.integers(0, 2, 200).astype(np.uint8)
        truth = rng.integers(0, 2, 200).astype(np.uint8)
        m = classify_metrics(BinaryConfusion.from_planes(pred, truth))
        assert m.accuracy == pytest.approx((pred == truth).mean())


class TestAggregate:
    def test_constant(self):
        assert aggregate([1.0, 1.0, 1.0]) == (1.0, 0.0)

    def test_two_values(self):
        mean, std = aggregate([0.0, 1.0])
        assert mean == 0.5
        assert std == pytest.approx(0.7071067811865476)  # sample std, n-1

    def test_single_value_nan_std(self):
        mean, std = aggregate([0.25])
        assert mean == 0.25
        assert math.isnan(std)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_csv(self):
        text = metrics_csv([("dice", "1", 0.5), ("accuracy", "", 0.925)])
        lines = text.strip().splitlines()
        assert lines[0] == "metric,class,value"
        assert lines[1] == "dice,1,0.5"
        assert lines[2] == "accuracy,,0.92500000000000004"
