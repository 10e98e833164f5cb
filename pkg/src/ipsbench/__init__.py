"""Benchmarking toolkit for RSS-fingerprinting indoor positioning methods."""

from ipsbench.data import (
    NOT_DETECTED,
    Dataset,
    Position,
    Sample,
    SyntheticConfig,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from ipsbench.representation import RssRepresentation
from ipsbench.distances import DistanceSpec, distance, rank_references
from ipsbench.positioning import KnnPositioner, TrialResult, evaluate
from ipsbench.clustering import ClusteredRadioMap, RadioMapClusterer, cluster_count

__all__ = [
    "NOT_DETECTED",
    "Dataset",
    "Position",
    "Sample",
    "SyntheticConfig",
    "generate_synthetic",
    "load_dataset",
    "save_dataset",
    "RssRepresentation",
    "DistanceSpec",
    "distance",
    "rank_references",
    "KnnPositioner",
    "TrialResult",
    "evaluate",
    "ClusteredRadioMap",
    "RadioMapClusterer",
    "cluster_count",
]
