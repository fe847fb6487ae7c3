"""Homography estimation toolkit (Python bindings)."""

from ._core import (
    Dataset,
    Error,
    Sample,
    dlt_solve,
    direct_align,
    fourpt_rmse,
    generate_dataset,
    h4pt_to_h,
    invert,
    overlap_preset,
    predict,
    procedural_image,
    project,
    read_dataset,
    read_image,
    train,
    warp_image,
    write_image,
)

__all__ = [
    "Dataset",
    "Error",
    "Sample",
    "dlt_solve",
    "direct_align",
    "fourpt_rmse",
    "generate_dataset",
    "h4pt_to_h",
    "invert",
    "overlap_preset",
    "predict",
    "procedural_image",
    "project",
    "read_dataset",
    "read_image",
    "train",
    "warp_image",
    "write_image",
]
