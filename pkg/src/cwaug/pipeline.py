"""Quality-gated augmentation: deform, score, admit above a threshold.

For every original image and synthetic slot, candidates are generated
with per-(slot, attempt) seeds derived from one master seed by a fixed
avalanche mix. Candidate generation therefore never depends on earlier
acceptance decisions: raising the threshold can only shrink the accepted
set, and (image, slot) pairs can be processed in any order or in
parallel with bit-identical results.

A candidate is admitted when its similarity against its source strictly
exceeds the threshold; otherwise the same slot is retried with a fresh
field, up to `max_attempts` times, after which the slot is dropped and
counted as exhausted. The augmented dataset is all originals in input
order followed by accepted synthetics ordered by (image, slot), each
carrying its source's label.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cwssim import CwssimParams, cwssim_from_pyramids
from .elastic import ElasticParams, elastic_deform
from .pyramid import build_pyramid

__all__ = [
    "AugmentConfig",
    "CandidateRecord",
    "SlotResult",
    "AugmentReport",
    "derive_seed",
    "rebuild_candidate",
    "try_augment_one",
    "augment_dataset",
]

HISTOGRAM_BINS = 100

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z):
    # splitmix64 finalizer; constants are frozen for reproducibility
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master, image_index, attempt):
    """Per-candidate 64-bit seed, a pure avalanche over the input tuple.

    Stable across runs and platforms; never change the constants, or
    previously recorded runs stop being reproducible.
    """
    h = _mix64((master + _GOLDEN) & _MASK64)
    h = _mix64(h ^ _mix64((image_index + 2 * _GOLDEN) & _MASK64))
    h = _mix64(h ^ _mix64((attempt + 3 * _GOLDEN) & _MASK64))
    return h


@dataclass(frozen=True)
class AugmentConfig:
    """Everything one gated augmentation run needs.

    `threshold` is the strict lower bound a candidate's score must exceed
    (a score equal to the threshold is rejected). The 0.7 default is an
    artifact default chosen by sweep, not an established constant; treat
    it as a parameter that deserves attention.
    """

    elastic: ElasticParams
    cwssim: CwssimParams = field(default_factory=CwssimParams)
    threshold: float = 0.7
    multiplier: int = 1
    max_attempts: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.multiplier < 0:
            raise ValueError("multiplier must be >= 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class CandidateRecord:
    """One scored candidate; `slot` is local to its source image."""

    image_index: int
    slot: int
    attempt: int
    score: float
    accepted: bool


@dataclass
class SlotResult:
    """Outcome of filling one synthetic slot: the admitted image, or None
    when every attempt failed, plus the records of all attempts made."""

    image: np.ndarray | None
    records: list


@dataclass
class AugmentReport:
    """Audit record of one augmentation run."""

    originals: int
    requested: int
    accepted: int
    rejected: int
    exhausted_slots: int
    records: list
    histogram: np.ndarray

    def to_json_dict(self, include_candidates=True):
        doc = {
            "schema_version": 1,
            "originals": self.originals,
            "requested": self.requested,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "exhausted_slots": self.exhausted_slots,
            "histogram": {
                "bins": HISTOGRAM_BINS,
                "range": [0.0, 1.0],
                "counts": [int(c) for c in self.histogram],
            },
        }
        if include_candidates:
            doc["candidates"] = [
                {
                    "image_index": r.image_index,
                    "slot": r.slot,
                    "attempt": r.attempt,
                    "score": r.score,
                    "accepted": r.accepted,
                }
                for r in self.records
            ]
        return doc


def _candidate_seed(cfg, image_index, slot_index, attempt):
    return derive_seed(cfg.seed, image_index * cfg.multiplier + slot_index, attempt)


def rebuild_candidate(img, cfg, image_index, slot_index, attempt):
    """Regenerate the exact candidate behind a record (for inspection dumps)."""
    return elastic_deform(img, cfg.elastic, _candidate_seed(cfg, image_index, slot_index, attempt))


def try_augment_one(img, cfg, image_index, slot_index, source_pyramid=None):
    """Fill one synthetic slot, retrying up to `cfg.max_attempts` times.

    `source_pyramid` may carry the prebuilt decomposition of `img` to
    avoid recomputing it per attempt; scores are identical either way.
    """
    img = np.asarray(img, dtype=np.float64)
    if source_pyramid is None:
        source_pyramid = build_pyramid(img, cfg.cwssim.pyramid)
    records = []
    for attempt in range(cfg.max_attempts):
        candidate = elastic_deform(img, cfg.elastic, _candidate_seed(cfg, image_index, slot_index, attempt))
        score = cwssim_from_pyramids(
            source_pyramid, build_pyramid(candidate, cfg.cwssim.pyramid), cfg.cwssim
        )
        accepted = score > cfg.threshold
        records.append(CandidateRecord(image_index, slot_index, attempt, score, accepted))
        if accepted:
            return SlotResult(candidate, records)
    return SlotResult(None, records)


def _augment_image(img, cfg, image_index):
    source_pyramid = build_pyramid(img, cfg.cwssim.pyramid)
    return [
        try_augment_one(img, cfg, image_index, slot, source_pyramid)
        for slot in range(cfg.multiplier)
    ]


def _augment_chunk(args):
    images_chunk, cfg, start = args
    return [_augment_image(img, cfg, start + off) for off, img in enumerate(images_chunk)]


def augment_dataset(images, labels, cfg, threads=1):
    """Run gated augmentation over a whole image set.

    Parameters
    ----------
    images : ndarray (N, H, W)
    labels : ndarray (N,)
    cfg : AugmentConfig
    threads : int
        Parallel workers (separate processes: the per-candidate numpy work
        is too fine-grained to share one interpreter). The output is
        independent of the worker count.

    Returns
    -------
    (augmented_images, augmented_labels, AugmentReport)
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if len(images) != len(labels):
        raise ValueError(f"{len(images)} images vs {len(labels)} labels")

    n = len(images)
    if cfg.multiplier == 0:
        per_image = [[] for _ in range(n)]
    elif threads > 1 and n > 1:
        # chunks keep dispatch overhead low; output order is by index
        chunk = max(1, -(-n // (threads * 8)))
        tasks = [(images[s : s + chunk], cfg, s) for s in range(0, n, chunk)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_image = [res for group in pool.map(_augment_chunk, tasks) for res in group]
    else:
        per_image = [_augment_image(images[i], cfg, i) for i in range(n)]

    synth_images, synth_labels, records = [], [], []
    exhausted = 0
    for i, slots in enumerate(per_image):
        for result in slots:
            records.extend(result.records)
            if result.image is None:
                exhausted += 1
            else:
                synth_images.append(result.image)
                synth_labels.append(labels[i])

    scores = np.array([r.score for r in records], dtype=np.float64)
    histogram, _ = np.histogram(scores, bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    report = AugmentReport(
        originals=n,
        requested=n * cfg.multiplier,
        accepted=len(synth_images),
        rejected=int(len(records) - len(synth_images)),
        exhausted_slots=exhausted,
        records=records,
        histogram=histogram,
    )

    if synth_images:
        out_images = np.concatenate([images, np.stack(synth_images)])
        out_labels = np.concatenate([labels, np.array(synth_labels, dtype=labels.dtype)])
    else:
        out_images = images.copy()
        out_labels = labels.copy()
    return out_images, out_labels, report
