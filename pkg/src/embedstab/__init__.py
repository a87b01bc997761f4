"""Stability assessment and hyperparameter selection for neighbor embeddings."""

from .dataset import (
    DataMatrix,
    LabelVector,
    SvdDenoiseResult,
    denoise_svd,
    discrete_circle,
    generate_circle,
    generate_curve,
    load_matrix,
)
from .embed import (
    AffinityMatrix,
    EmbeddingRun,
    OptimizerParams,
    load_external_embedding,
    objective,
    random_init,
    run_engine,
    save_embedding,
    tsne_affinities_knn,
    tsne_affinities_perplexity,
    tsne_optimize,
)
from .knn import DistanceMatrix, KnnGraph, knn_graph, knn_graph_from_points, pairwise_distances
from .metrics import (
    MetricsReport,
    bh_adjust,
    concordance,
    correlation_score,
    feature_association,
    local_density_profile,
    local_simpson,
    metrics_report,
    neighbor_purity,
    removal_experiment,
    silhouette,
)
from .stability import (
    GcpScanTrace,
    NeighborCountMatrix,
    RarenessReport,
    RunEnsemble,
    StabilityReport,
    collect_runs,
    gcp_grid,
    gcp_scan,
    global_stability,
    instability,
    local_stability,
    neighbor_count_matrix,
    rareness_scores,
    stability_report,
)
from .theory import (
    DistortionResult,
    Phi0Embedding,
    distortion,
    distortion_scaling_experiment,
    fragmentation_components,
    objective_knn,
    phi0_construction,
)

__version__ = "0.1.0"
