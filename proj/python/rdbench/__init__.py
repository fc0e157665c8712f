"""Rate-distortion benchmarking toolkit: resampling, quality metrics,
Bjontegaard deltas, and the hermetic mock codec, backed by the C++ core."""

from ._rdbench import (  # noqa: F401
    ValidationError,
    ParseFailure,
    IoError,
    ToolFailure,
    bd_metric,
    bd_metric_interval,
    bd_rate,
    bicubic_weight,
    derive_bitrate_mbps,
    lanczos_weight,
    mock_codec_roundtrip,
    psnr,
    read_video_luma,
    resample_plane,
    si_ti,
    ssim,
    write_video_luma,
    __version__,
)

__all__ = [
    "ValidationError",
    "ParseFailure",
    "IoError",
    "ToolFailure",
    "bd_metric",
    "bd_metric_interval",
    "bd_rate",
    "bicubic_weight",
    "derive_bitrate_mbps",
    "lanczos_weight",
    "mock_codec_roundtrip",
    "psnr",
    "read_video_luma",
    "resample_plane",
    "si_ti",
    "ssim",
    "__version__",
]
