"""Python interface to the camoseg core.

Thin re-export of the pybind11 extension: rotation geometry, dual-rotation
pseudo-label weighting, evaluation metrics, the synthetic data generator,
and the segmentation model (fresh or loaded from a training checkpoint).
"""

from camoseg._core import (
    InsufficientValidAreaError,
    Model,
    dual_rotation_views,
    f_measure,
    generate_sample,
    instance_weight,
    iou_at_half,
    mae,
    mean_horizontal,
    pixel_inconsistency,
    pixel_weight,
    rotate,
    rotate_mask,
    ssim,
    unrotate,
)

__version__ = "0.1.0"

__all__ = [
    "InsufficientValidAreaError",
    "Model",
    "dual_rotation_views",
    "f_measure",
    "generate_sample",
    "instance_weight",
    "iou_at_half",
    "mae",
    "mean_horizontal",
    "pixel_inconsistency",
    "pixel_weight",
    "rotate",
    "rotate_mask",
    "ssim",
    "unrotate",
]
