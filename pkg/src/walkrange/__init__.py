"""Entropy of random walk ranges: simulation, coding and bounds."""
from .codec import RangeBitStream, RangeCodec, decode_range, encode_range
from .entropy import (
    BoundaryEntropyBound,
    CodecEntropyBound,
    EntropyEstimate,
    boundary_lower_bound,
    codec_upper_bound,
    exact_range_entropy,
    range_distribution,
    scaling_experiment,
)
from .extractor import BitExtractor, TemplatePair, default_templates, extract_bits, scan_occurrences
from .geometry import RangeSet, inner_boundary, range_of, scale_schedule, tile_indicator
from .harness import ExperimentConfig, ResultRow, run
from .lemmas import LemmaCheckReport, lemma_check
from .percolation import (
    PercolationTree,
    exact_tree_entropy,
    intersection_ratio,
    sample_fractal,
    tree_log_prob,
)
from .potential import PotentialKernel, potential_kernel
from .stats import Estimate
from .walk import RngStream, Trajectory, derive_stream, run_until, simulate_walk

__version__ = "0.1.0"
