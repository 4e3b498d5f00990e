"""Divide-and-conquer metric learning on precomputed features."""

from dcml._core import (
    apply_mask_rows,
    class_variance_stats,
    conquer_masks,
    ed_knn,
    effective_dimensionality,
    embed,
    evaluate,
    fixed_orthogonal_masks,
    generate_synthetic,
    iou_matrix,
    kmeans,
    load_features,
    marp,
    nmi,
    recall_at_k,
    run_experiment,
    save_features,
    solve_assignment,
    train,
    zero_shot_split,
)

__all__ = [
    "apply_mask_rows",
    "class_variance_stats",
    "conquer_masks",
    "ed_knn",
    "effective_dimensionality",
    "embed",
    "evaluate",
    "fixed_orthogonal_masks",
    "generate_synthetic",
    "iou_matrix",
    "kmeans",
    "load_features",
    "marp",
    "nmi",
    "recall_at_k",
    "run_experiment",
    "save_features",
    "solve_assignment",
    "train",
    "zero_shot_split",
]
