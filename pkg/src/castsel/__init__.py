"""Collapse-aware multimodal coreset selection.

Builds per-modality fuzzy k-NN graphs, refines them against local structural
collapse, fuses them through diffusion-wavelet consensus into a unified graph,
optimizes continuous proxy points under a multi-scale matching objective with
relational coverage, and realizes the proxies as a discrete coreset by
minimum-cost assignment.
"""

from .config import RunConfig, load_config
from .feature_store import FeatureMatrix, read_feature_file, write_feature_file

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "load_config",
    "FeatureMatrix",
    "read_feature_file",
    "write_feature_file",
]
