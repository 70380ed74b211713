"""Dynamic hierarchically well-separated tree embeddings of Euclidean points.

Static and fully dynamic label computation over shifted grids, an HST store
driven by leaf events, exact tree algorithms (k-median, bipartite and general
matching, transport) on top of it, a round-counting parallel simulator and
brute-force oracles.
"""

from .dynamic import DynamicConfig, DynamicEmbedding, RecourseStats
from .embedding import DistortionReport, Label, LabelTable, compute_labels, evaluate_distortion
from .geometry import InputError, JLMap, LevelSchedule, Point, PointSet, Rng, make_schedule
from .grid_hash import BucketKey, GridHash
from .hst import HstStore, PreconditionError, Type1, Type2
from .kmedian import TreeKMedian
from .matching import TreeMatching
from .mpc import CapacityError, MpcSimulator, RoundLog, run_embedding_mpc
from .transport import TreeTransport

__version__ = "0.1.0"

__all__ = [
    "BucketKey", "CapacityError", "DistortionReport", "DynamicConfig", "DynamicEmbedding", "GridHash",
    "HstStore", "InputError", "JLMap", "Label", "LabelTable", "LevelSchedule", "MpcSimulator", "Point",
    "PointSet", "PreconditionError", "RecourseStats", "Rng", "RoundLog", "TreeKMedian", "TreeMatching",
    "TreeTransport", "Type1", "Type2", "compute_labels", "evaluate_distortion", "make_schedule",
    "run_embedding_mpc",
]
