"""Brain reaction maps by anisotropic branched transport on synthetic multimodal data."""

from .config import PipelineConfig
from .dynamics import (
    GraphOperators,
    PathEnsemble,
    bridge_control,
    dynamic_cost,
    graph_operators,
    simulate_ensemble,
)
from .eeg import LeadField, SourceEstimate, build_lead_field, min_norm_inverse, window_scores
from .fmri import DesignMatrix, GlmResult, build_block_design, glm_fit, hrf_double_gamma
from .fusion import MeasurePair, fuse_profiles, normalize_unit_max, sensitivity_sweep, to_measures
from .geometry import (
    CandidateGraph,
    Roi,
    RoiSet,
    assign_tensor_field,
    build_knn_graph,
    build_roi_layout,
    fractional_anisotropy,
)
from .pipeline import diff_runs, run_pipeline
from .tradeoff import (
    TradeoffRecord,
    alpha_grid_run,
    detect_rank_reversals,
    hybrid_functional,
    pareto_frontier,
)
from .transport import (
    ArcCosts,
    FlowSolution,
    RelayStats,
    anisotropic_arc_cost,
    extract_support,
    flux_comparison,
    forest_oracle,
    isotropic_arc_cost,
    linear_flow_oracle,
    relay_statistics,
    shortest_path_surrogate,
    solve_bot,
)

__version__ = "0.1.0"
