import numpy as np
import pytest
from scipy.ndimage import zoom
from sklearn.datasets import load_digits

from cwaug.idx_io import write_images, write_labels
from cwaug.imgcore import from_bytes, to_bytes


@pytest.fixture(scope="session")
def digit_corpus():
    """1797 handwritten digits upsampled to 28x28 in [0, 1].

    Stands in for MNIST at desk scale: same geometry, same label space,
    real handwriting variation. Quantized through the byte codec so every
    pixel is exactly representable in IDX files.
    """
    data = load_digits()
    ups = np.stack([np.clip(zoom(img / 16.0, 28 / 8, order=1), 0.0, 1.0) for img in data.images])
    return from_bytes(to_bytes(ups)), data.target.astype(np.uint8)


@pytest.fixture(scope="session")
def split500(digit_corpus):
    """Disjoint deterministic 500-train / 500-test split of the corpus."""
    images, labels = digit_corpus
    rng = np.random.Generator(np.random.Philox(key=123))
    perm = rng.permutation(len(images))
    tr, te = perm[:500], perm[500:1000]
    return images[tr], labels[tr], images[te], labels[te]


@pytest.fixture
def make_idx(tmp_path):
    """Write an (images, labels) pair as IDX files under tmp_path."""

    def _make(images, labels, stem="data"):
        ipath = tmp_path / f"{stem}-images.idx"
        lpath = tmp_path / f"{stem}-labels.idx"
        write_images(images, ipath)
        write_labels(labels, lpath)
        return ipath, lpath

    return _make
