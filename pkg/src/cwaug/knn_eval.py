"""k-nearest-neighbor error rates for judging augmentation variants.

A deliberately small evaluator: it exists to compare training sets (for
example, gated versus ungated augmentation) on the same test split, not
to chase benchmark accuracy. Distances are either plain pixel-space
euclidean or one minus the complex-wavelet similarity index; the latter
is far slower and meant for small subsets.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cwssim import CwssimParams, cwssim_index

__all__ = [
    "EvalConfig",
    "EmptyTrainingSet",
    "knn_classify",
    "evaluate",
    "subsample",
]

METRICS = ("euclidean", "cwssim")


class EmptyTrainingSet(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    """k is kept odd to reduce voting ties; `cwssim` configures the
    similarity metric when metric="cwssim" (distance = 1 - index)."""

    k: int = 3
    metric: str = "euclidean"
    cwssim: CwssimParams = field(default_factory=CwssimParams)

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be odd and >= 1")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")


def subsample(images, labels, size, seed):
    """Deterministic subsample of `size` items, keeping the input order."""
    n = len(images)
    if size >= n:
        return images, labels
    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    idx = np.sort(rng.choice(n, size=size, replace=False))
    return images[idx], labels[idx]


def _distances_to_train(query, train_images, cfg):
    if cfg.metric == "euclidean":
        diff = train_images.reshape(len(train_images), -1) - query.ravel()
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return np.array([1.0 - cwssim_index(query, t, cfg.cwssim) for t in train_images])


def _classify_from_distances(dists, train_labels, k):
    # stable sort keeps equal-distance ordering deterministic
    nearest = np.argsort(dists, kind="stable")[:k]
    votes = train_labels[nearest]
    counts = np.bincount(votes)
    best = counts.max()
    tied = np.flatnonzero(counts == best)
    if len(tied) == 1:
        return int(tied[0])
    # break ties by smallest mean distance among each class's voters,
    # then by lowest class id (lexicographic min over (mean, class))
    means = [dists[nearest[votes == c]].mean() for c in tied]
    return int(tied[int(np.lexsort((tied, means))[0])])


def knn_classify(train_images, train_labels, query, cfg=None):
    """Majority label among the k nearest training images."""
    if cfg is None:
        cfg = EvalConfig()
    if len(train_images) == 0:
        raise EmptyTrainingSet("training set is empty")
    dists = _distances_to_train(np.asarray(query, dtype=np.float64), train_images, cfg)
    return _classify_from_distances(dists, np.asarray(train_labels), cfg.k)


def evaluate(train_images, train_labels, test_images, test_labels, cfg=None):
    """Fraction of misclassified test items, in [0, 1].

    An empty test set evaluates to 0.0 with a warning.
    """
    if cfg is None:
        cfg = EvalConfig()
    if len(train_images) == 0:
        raise EmptyTrainingSet("training set is empty")
    if len(test_images) == 0:
        warnings.warn("empty test set; error rate defined as 0", stacklevel=2)
        return 0.0
    train_labels = np.asarray(train_labels)
    errors = 0
    for query, truth in zip(test_images, test_labels):
        dists = _distances_to_train(np.asarray(query, dtype=np.float64), train_images, cfg)
        if _classify_from_distances(dists, train_labels, cfg.k) != int(truth):
            errors += 1
    return errors / len(test_images)
