"""Desk-scale numerical oracles for the combinatorial and probabilistic toolbox."""

from .alternating import (
    AlternatingProductSpec,
    FnSlot,
    PolySlot,
    QFCheckResult,
    alternating_trace,
    apply_alternating,
    clipped_quadratic,
    identity_slot,
    predicted_qf_limit,
    quadratic_form_limit_check,
)
from .mehler import (
    hermite_truncated_product,
    mc_gaussian_product,
    weighted_graphs,
)
from .moments import (
    MCEstimate,
    bernoulli_centered_mean,
    centered_power,
    collapse_polynomial,
    gaussian_moment_limit,
    matrix_moment,
    matrix_polynomial,
    mc_matrix_moment,
)
from .partitions import (
    ConflictFreeCount,
    Labelling,
    Partition,
    WeightedGraph,
    count_conflict_free,
    enumerate_partitions,
    is_conflict_free,
    is_disassortative,
    wst,
)

__all__ = [
    "AlternatingProductSpec",
    "ConflictFreeCount",
    "FnSlot",
    "Labelling",
    "MCEstimate",
    "Partition",
    "PolySlot",
    "QFCheckResult",
    "WeightedGraph",
    "alternating_trace",
    "apply_alternating",
    "bernoulli_centered_mean",
    "centered_power",
    "clipped_quadratic",
    "collapse_polynomial",
    "count_conflict_free",
    "enumerate_partitions",
    "gaussian_moment_limit",
    "hermite_truncated_product",
    "identity_slot",
    "is_conflict_free",
    "is_disassortative",
    "matrix_moment",
    "matrix_polynomial",
    "mc_gaussian_product",
    "mc_matrix_moment",
    "predicted_qf_limit",
    "quadratic_form_limit_check",
    "weighted_graphs",
    "wst",
]
