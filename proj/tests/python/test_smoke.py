"""Smoke tests for the python bindings; the heavy verification lives in the
C++ suites, this checks the binding surface end to end."""

import math

import numpy as np
import pytest

import rdbench


def curve(points):
    return [{"bitrate_mbps": r, "qp": None, "metrics": {"psnr_y": m}} for r, m in points]


ANCHOR = curve([(10, 40), (20, 43), (40, 46), (80, 49)])


def test_kernel_weights():
    assert rdbench.lanczos_weight(0.0, 3) == 1.0
    assert rdbench.lanczos_weight(2.0, 3) == 0.0
    assert abs(rdbench.lanczos_weight(0.5, 3) - 0.607927101854026629) < 1e-12
    assert rdbench.bicubic_weight(0.5, -0.5) == 0.5625
    with pytest.raises(ValueError):
        rdbench.bicubic_weight(0.5, 0.5)


def test_bd_closed_forms():
    twice = curve([(20, 40), (40, 43), (80, 46), (160, 49)])
    r = rdbench.bd_rate("anchor", ANCHOR, "2x", twice)
    assert r["kind"] == "bd_rate_percent"
    assert abs(r["value"] - 100.0) < 1e-6

    lifted = curve([(10, 40.5), (20, 43.5), (40, 46.5), (80, 49.5)])
    m = rdbench.bd_metric("anchor", ANCHOR, "up", lifted)
    assert abs(m["value"] - 0.5) < 1e-9

    full = rdbench.bd_metric_interval("anchor", ANCHOR, "up", lifted, "psnr_y", 10.0, 80.0)
    assert abs(full["value"] - 0.5) < 1e-9

    nothing = rdbench.bd_metric_interval("anchor", ANCHOR, "up", lifted, "psnr_y", 500.0, 900.0)
    assert nothing is None  # insufficient data marker


def test_resample_and_metrics():
    plane = np.full((24, 32), 111, dtype=np.uint16)
    up = rdbench.resample_plane(plane, 64, 48, "lanczos:3")
    assert up.shape == (48, 64)
    assert np.all(up == 111)

    noisy = (np.arange(32 * 32, dtype=np.uint16) % 251).reshape(32, 32)
    assert math.isinf(rdbench.psnr(noisy, noisy))
    assert rdbench.ssim(noisy, noisy) == 1.0

    shifted = np.clip(noisy.astype(np.int32) + 1, 0, 255).astype(np.uint16)
    p = rdbench.psnr(noisy, shifted)
    assert abs(p - 20 * math.log10(255)) < 1e-6


def test_si_ti():
    flat = [np.full((16, 16), 40, dtype=np.uint16)] * 3
    r = rdbench.si_ti(flat)
    assert r["si"] == 0.0
    assert r["ti"] == 0.0
    assert len(r["per_frame_ti"]) == 2


def test_video_and_mock_codec_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    frames = [rng.integers(0, 256, size=(32, 48)).astype(np.uint16) for _ in range(3)]
    path = tmp_path / "clip.y4m"
    rdbench.write_video_luma(str(path), frames, bit_depth=8, fps_num=30, fps_den=1)

    back = rdbench.read_video_luma(str(path))
    assert len(back) == 3
    assert all(np.array_equal(a, b) for a, b in zip(frames, back))

    bits = tmp_path / "clip.rdmc"
    recon = tmp_path / "recon.y4m"
    size = rdbench.mock_codec_roundtrip(str(path), 4, str(bits), str(recon))
    assert size > 0
    decoded = rdbench.read_video_luma(str(recon))
    assert all(np.array_equal(a, b) for a, b in zip(frames, decoded))  # qp 4 is lossless

    assert rdbench.derive_bitrate_mbps(1_500_000, 60, 1, 300) == pytest.approx(2.4)
