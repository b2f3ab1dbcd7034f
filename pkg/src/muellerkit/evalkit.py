"""Segmentation/classification metrics and the few-shot evaluation
protocol: DICE scores, confusion-matrix metrics, seeded subset sampling,
specimen-level nested cross-validation, and multi-run aggregation.

Everything that involves randomness uses one pinned PRNG (splitmix64
seeding an xorshift64* stream, Fisher-Yates shuffle; see docs) so that
any implementation in any language reproduces the same index lists for
the same (n_items, fraction, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, TooFewSpecimensError

# Label value excluded from every metric (unannotated pixels).
IGNORE_LABEL = 255

_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# pinned PRNG
# ---------------------------------------------------------------------------

def _splitmix64(seed: int) -> int:
    """One splitmix64 step; used only to condition the user seed."""
    z = (seed + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitRng:
    """xorshift64* stream seeded through splitmix64.

    Tiny, exactly specified, and trivially portable; not for statistics
    beyond shuffling index lists.
    """

    def __init__(self, seed: int) -> None:
        state = _splitmix64(seed & _MASK64)
        if state == 0:  # xorshift needs a nonzero state
            state = 0x9E3779B97F4A7C15
        self._state = state

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def shuffle(self, items: list) -> None:
        """Fisher-Yates, descending, j = next() mod (i + 1)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]


def shuffled_indices(n_items: int, seed: int) -> list[int]:
    if n_items < 0:
        raise ValueError(f"n_items must be >= 0, got {n_items}")
    items = list(range(n_items))
    SplitRng(seed).shuffle(items)
    return items


# ---------------------------------------------------------------------------
# few-shot sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """A seeded fraction of an index range."""

    n_items: int
    fraction: float
    seed: int

    def __post_init__(self) -> None:
        if self.n_items < 1:
            raise ValueError(f"n_items must be >= 1, got {self.n_items}")
        if not (0.0 < self.fraction <= 1.0):
            raise ValueError(
                f"fraction must be in (0, 1], got {self.fraction!r}"
            )

    @property
    def subset_size(self) -> int:
        # round-half-up, never empty
        return max(1, math.floor(self.fraction * self.n_items + 0.5))


def fewshot_indices(spec: SplitSpec) -> list[int]:
    """First max(1, round(fraction * n)) entries of the seeded shuffle.

    Returned in shuffle order (fraction 1.0 gives the full permutation).
    """
    order = shuffled_indices(spec.n_items, spec.seed)
    return order[: spec.subset_size]


def train_val_test_split(
    n_items: int,
    seed: int,
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
) -> tuple[list[int], list[int], list[int]]:
    """Disjoint train/val/test index lists by three seeded draws without
    replacement (seed, seed+1, seed+2), sizes round(f*n) with the
    remainder going to test.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    n_train = SplitSpec(n_items, fractions[0], seed).subset_size
    remaining = shuffled_indices(n_items, seed)
    train = remaining[:n_train]
    pool = sorted(remaining[n_train:])
    if not pool:
        raise ValueError(f"{n_items} items leave nothing after the train draw")
    n_val = max(1, math.floor(fractions[1] * n_items + 0.5))
    if n_val >= len(pool):
        raise ValueError(
            f"{n_items} items cannot fill train/val/test at {fractions}"
        )
    order = [pool[i] for i in shuffled_indices(len(pool), seed + 1)]
    val = order[:n_val]
    rest = sorted(order[n_val:])
    test = [rest[i] for i in shuffled_indices(len(rest), seed + 2)]
    return train, val, test


# ---------------------------------------------------------------------------
# nested cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NestedSplit:
    test: int
    val: int
    train: tuple[int, ...]


def nested_cv_splits(n_specimens: int) -> list[NestedSplit]:
    """Every ordered (test, val) specimen pair, training on the rest.

    n specimens give n*(n-1) splits; needs n >= 3 so the train set is
    never empty.
    """
    if n_specimens < 3:
        raise TooFewSpecimensError(
            f"nested cross-validation needs >= 3 specimens, got {n_specimens}"
        )
    splits = []
    for test in range(n_specimens):
        for val in range(n_specimens):
            if val == test:
                continue
            train = tuple(
                k for k in range(n_specimens) if k != test and k != val
            )
            splits.append(NestedSplit(test=test, val=val, train=train))
    return splits


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinaryConfusion:
    """Counts for a two-class problem; positive class first."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_planes(
        cls,
        pred: np.ndarray,
        gt: np.ndarray,
        positive_class: int = 1,
        ignore_label: int = IGNORE_LABEL,
    ) -> "BinaryConfusion":
        pred, gt = _check_planes(pred, gt)
        keep = gt != ignore_label
        p = pred[keep] == positive_class
        g = gt[keep] == positive_class
        return cls(
            tp=int(np.count_nonzero(p & g)),
            fp=int(np.count_nonzero(p & ~g)),
            tn=int(np.count_nonzero(~p & ~g)),
            fn=int(np.count_nonzero(~p & g)),
        )


@dataclass(frozen=True)
class ClassificationMetrics:
    """Accuracy, sensitivity (recall of the positive class), specificity
    (true-negative rate).  Undefined ratios are NaN, never an exception.
    """

    accuracy: float
    sensitivity: float
    specificity: float


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else math.nan


def classify_metrics(conf: BinaryConfusion) -> ClassificationMetrics:
    return ClassificationMetrics(
        accuracy=_ratio(conf.tp + conf.tn, conf.total),
        sensitivity=_ratio(conf.tp, conf.tp + conf.fn),
        specificity=_ratio(conf.tn, conf.tn + conf.fp),
    )


def _check_planes(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise DimensionMismatchError(
            f"prediction shape {pred.shape} != ground truth shape {gt.shape}"
        )
    return pred, gt


def dice(
    pred: np.ndarray,
    gt: np.ndarray,
    class_id: int,
    ignore_label: int = IGNORE_LABEL,
) -> float:
    """Overlap score 2|A n B| / (|A| + |B|) for one class.

    Pixels labeled ``ignore_label`` in the ground truth are excluded.
    Both sets empty counts as perfect agreement (1.0).
    """
    pred, gt = _check_planes(pred, gt)
    keep = gt != ignore_label
    a = pred[keep] == class_id
    b = gt[keep] == class_id
    denom = int(np.count_nonzero(a)) + int(np.count_nonzero(b))
    if denom == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(a & b)) / denom


def macro_dice(
    pred: np.ndarray,
    gt: np.ndarray,
    class_ids: list[int],
    ignore_label: int = IGNORE_LABEL,
) -> float:
    """Unweighted mean of per-class dice scores."""
    if not class_ids:
        raise ValueError("class_ids must not be empty")
    return sum(dice(pred, gt, c, ignore_label) for c in class_ids) / len(class_ids)


def aggregate(values: list[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (n - 1) over runs.

    A single value has no spread: std is NaN there.
    """
    if len(values) == 0:
        raise ValueError("cannot aggregate zero runs")
    mean = sum(values) / len(values)
    if len(values) == 1:
        return mean, math.nan
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def metrics_csv(rows: list[tuple[str, str, float]]) -> str:
    """Render (metric, class, value) rows in the canonical CSV layout."""
    lines = ["metric,class,value"]
    for metric, cls, value in rows:
        lines.append(f"{metric},{cls},{value:.17g}")
    return "\n".join(lines) + "\n"
