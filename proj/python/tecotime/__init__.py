"""Temporal video metrics, training losses and ping-pong helpers.

Frames are float32 arrays of shape (H, W) or (H, W, C) with intensities in
[0, 1]; sequences add a leading frame axis. Arrays of any other dtype raise
TypeError. Library errors raise TecoError (a ValueError) whose ``code``
attribute names the failure.
"""

from ._core import (
    FlowParams,
    TecoError,
    adv_g_uvt,
    adv_g_vsr,
    backward_warp,
    content_loss_uvt,
    content_loss_vsr,
    cosine_feature_loss,
    d_loss_uvt,
    d_loss_vsr,
    estimate_flow,
    gram_loss,
    gram_matrix,
    make_pp_sequence,
    perceptual_distance,
    pp_index_map,
    pp_loss,
    psnr,
    split_pp_outputs,
    tdiff,
    tlp,
    tof,
    total_generator_loss,
    warp_loss,
)

__all__ = [name for name in dir() if not name.startswith("_")]
