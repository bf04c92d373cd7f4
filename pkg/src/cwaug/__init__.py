"""Quality-gated elastic augmentation for MNIST-format digit datasets.

Synthetic images are produced by elastic deformation, scored against
their source with a complex-wavelet structural similarity index, and
admitted to the augmented dataset only when the score strictly exceeds a
threshold. A small k-NN evaluator is included to compare gated and
ungated augmentation on a held-out split.
"""

__version__ = "0.1.0"

from .cwssim import CwssimParams, cwssim_index, cwssim_window
from .elastic import ElasticParams, elastic_deform
from .idx_io import read_images, read_labels, write_images, write_labels
from .knn_eval import EvalConfig, evaluate, knn_classify
from .pipeline import AugmentConfig, augment_dataset, derive_seed
from .pyramid import PyramidParams, build_pyramid

__all__ = [
    "__version__",
    "CwssimParams",
    "cwssim_index",
    "cwssim_window",
    "ElasticParams",
    "elastic_deform",
    "read_images",
    "read_labels",
    "write_images",
    "write_labels",
    "EvalConfig",
    "evaluate",
    "knn_classify",
    "AugmentConfig",
    "augment_dataset",
    "derive_seed",
    "PyramidParams",
    "build_pyramid",
]
