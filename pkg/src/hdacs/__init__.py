"""Hierarchical compressive-sensing data aggregation for sensor networks.

A seedable simulator and analytic toolkit: multi-resolution clustering of a
random 2D deployment, per-cluster DCT sparsification with greedy sparse
recovery at the heads, two gathering baselines, and the matching closed-form
payload and energy expressions.
"""

from .analytics import (
    AnalyticParams,
    baseline_measurements,
    energy_bounds,
    expected_distance,
    measurement_bounds,
    per_node_energy,
    ratio_table,
    series_s1,
    series_s1p,
    series_s2,
    series_s2p,
)
from .cs import (
    Measurements,
    RecoveryConfig,
    RecoveryResult,
    cosamp,
    cosamp_dct_model,
    generate_matrix,
    measure,
    snr,
)
from .deployment import (
    ClusterTree,
    ConfigError,
    DeployConfig,
    Node,
    build_hierarchy,
    coverage_stats,
    deploy,
    deploy_and_build,
    elect_heads,
)
from .field import (
    FieldConfig,
    GaussianBump,
    SparseCoefficients,
    dct_forward,
    dct_inverse,
    estimate_sparsity,
    sample_field,
    truncate,
    truncate_count,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .protocols import (
    AggregationTrace,
    Protocol,
    Thresholds,
    compression_ratios,
    frame_counts,
    payload_threshold,
    run_hcs,
    run_hdacs,
    run_ncs,
)

__version__ = "0.1.0"
