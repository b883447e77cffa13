import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarcube.errors import ConfigError, DomainError
from radarcube.radar_model import (
    C0,
    PointTarget,
    RadarConfig,
    Scene,
    TargetClass,
    angle_bin_of,
    angle_resolution_at,
    beat_frequency,
    doppler_phase_shift,
    max_angle,
    max_range,
    max_velocity,
    range_bin_of,
    range_resolution,
    synthesize_frame,
    synthesize_scene,
    tdm_schedule,
    velocity_bin_index,
    velocity_resolution,
)
from oracles import direct_dft


def test_table_values(cfg):
    assert range_resolution(cfg) == pytest.approx(0.23, rel=0.05)
    assert velocity_resolution(cfg) == pytest.approx(0.065, rel=0.05)
    assert math.degrees(angle_resolution_at(cfg, 0.0)) == pytest.approx(15, rel=0.05)
    assert max_range(cfg) == pytest.approx(28.5, rel=0.05)
    assert max_velocity(cfg) == pytest.approx(8.3, rel=0.05)
    assert math.degrees(max_angle(cfg)) == pytest.approx(90, rel=0.05)


def test_closed_forms(cfg):
    lam = C0 / 77e9
    assert cfg.wavelength == pytest.approx(lam)
    assert cfg.element_spacing == pytest.approx(lam / 2)
    assert range_resolution(cfg) == pytest.approx(C0 / (2 * 670e6))
    assert velocity_resolution(cfg) == pytest.approx(lam / (2 * 255 * 120e-6))
    assert max_range(cfg) == pytest.approx(4e6 * C0 / (2 * 21e12))
    assert max_velocity(cfg) == pytest.approx(lam / (4 * 120e-6))
    assert angle_resolution_at(cfg, math.radians(60)) == pytest.approx(2 * angle_resolution_at(cfg, 0.0))


def test_frame_rate_constructor():
    cfg = RadarConfig.from_frame_rate()
    assert cfg.chirp_duration == pytest.approx(1 / (255 * 30))
    assert cfg.chirp_duration == pytest.approx(130.7e-6, rel=1e-3)


def test_beat_frequency(cfg):
    assert beat_frequency(cfg, 0.0) == 0.0
    assert beat_frequency(cfg, 10.0) == pytest.approx(1.4e6, rel=1e-3)
    assert beat_frequency(cfg, max_range(cfg)) == pytest.approx(cfg.sampling_freq)


def test_doppler_phase(cfg):
    assert doppler_phase_shift(cfg, 0.0) == 0.0
    assert doppler_phase_shift(cfg, 1.0) == pytest.approx(0.387, abs=1e-3)
    assert doppler_phase_shift(cfg, max_velocity(cfg)) == pytest.approx(math.pi)
    assert doppler_phase_shift(cfg, -1.0) == -doppler_phase_shift(cfg, 1.0)


def test_range_bins(cfg):
    assert range_bin_of(cfg, 0.0) == 0
    assert range_bin_of(cfg, 10.0) == 44
    assert range_bin_of(cfg, max_range(cfg) * (1 - 1e-6)) == cfg.range_fft_points - 1
    with pytest.raises(DomainError):
        range_bin_of(cfg, max_range(cfg) + 0.1)
    with pytest.raises(DomainError):
        range_bin_of(cfg, -1.0)


@given(st.floats(0.0, 28.5))
def test_range_bin_matches_beat_frequency(r):
    cfg = RadarConfig()
    assert range_bin_of(cfg, r) == min(math.floor(cfg.range_fft_points * beat_frequency(cfg, r) / cfg.sampling_freq + 1e-9),
                                       cfg.range_fft_points - 1)


def test_angle_bins(cfg):
    assert angle_bin_of(cfg, 0.0) == 0
    assert angle_bin_of(cfg, math.radians(30)) == 32
    assert angle_bin_of(cfg, math.radians(-30)) == -32
    with pytest.raises(DomainError):
        angle_bin_of(RadarConfig(element_spacing=0.6 * C0 / 77e9), math.radians(89))


@settings(max_examples=300)
@given(st.floats(-math.pi / 2, math.pi / 2))
def test_angle_bin_odd_symmetry(theta):
    cfg = RadarConfig()
    a = angle_bin_of(cfg, theta)
    assert angle_bin_of(cfg, -theta) in (-a, -a - 1)


def test_config_validation():
    with pytest.raises(ConfigError):
        RadarConfig(sweep_slope=0)
    with pytest.raises(ConfigError):
        RadarConfig(samples_per_chirp=256)
    with pytest.raises(ConfigError):
        RadarConfig.from_dict({"bogus": 1})
    cfg = RadarConfig.from_dict(RadarConfig().to_dict())
    assert cfg == RadarConfig()
    assert cfg.num_virtual == 8
    assert cfg.loops_per_frame == 127


def test_target_validation(cfg):
    with pytest.raises(DomainError):
        PointTarget(30.0).validate(cfg)
    with pytest.raises(DomainError):
        PointTarget(5.0, theta=math.pi / 2).validate(cfg)
    with pytest.raises(DomainError):
        PointTarget(5.0, v=9.0).validate(cfg)
    with pytest.raises(DomainError):
        PointTarget(5.0, amp=0.0).validate(cfg)
    with pytest.raises(ConfigError):
        PointTarget.from_dict({"r": 5, "class": "truck"})
    t = PointTarget.from_dict({"r": 5, "theta_deg": 30, "class": "car"})
    assert t.theta == pytest.approx(math.pi / 6)
    assert t.cls is TargetClass.CAR
    back = PointTarget.from_dict(t.to_dict())
    assert (back.r, back.cls) == (t.r, t.cls)
    assert back.theta == pytest.approx(t.theta)


def test_scene_json_round_trip():
    doc = {"frames": [[{"r": 3.0, "theta_deg": -10.0, "v": 0.5, "amp": 2.0, "class": "cyclist"}], []]}
    scene = Scene.from_dict(doc)
    again = Scene.from_dict(scene.to_dict())
    assert again.num_frames == 2
    assert again.frames[0][0].cls is TargetClass.CYCLIST
    assert again.frames[0][0].theta == pytest.approx(math.radians(-10))
    with pytest.raises(ConfigError):
        Scene.from_dict({"frames": 1})


def test_tdm_schedule(cfg):
    sched = tdm_schedule(cfg)
    assert sched.shape == (255,)
    assert list(sched[:4]) == [0, 1, 0, 1]


def test_empty_target_list_is_zero_or_noise(cfg):
    assert not synthesize_frame(cfg, []).data.any()
    noisy = synthesize_frame(cfg, [], noise_std=0.5, rng=1).data
    assert noisy.std() == pytest.approx(0.5, rel=0.02)
    np.testing.assert_array_equal(noisy, synthesize_frame(cfg, [], noise_std=0.5, rng=1).data)


def test_superposition_exact(cfg):
    a = PointTarget(7.3, math.radians(12), 1.1, 0.7)
    b = PointTarget(15.2, math.radians(-40), -2.3, 1.9)
    both = synthesize_frame(cfg, [a, b]).data
    np.testing.assert_allclose(both, synthesize_frame(cfg, [a]).data + synthesize_frame(cfg, [b]).data,
                               rtol=0, atol=1e-12)


def test_amplitude_linearity(cfg):
    a = PointTarget(9.1, math.radians(5), 0.4, 1.0)
    np.testing.assert_array_equal(synthesize_frame(cfg, [PointTarget(9.1, math.radians(5), 0.4, 4.0)]).data,
                                  4.0 * synthesize_frame(cfg, [a]).data)


def test_static_target_range_peak_in_phase(cfg):
    r = 20 * cfg.range_bin_width
    data = synthesize_frame(cfg, [PointTarget(r)]).data
    spec = direct_dft(data[:, :3, :], n=cfg.range_fft_points, axis=0)
    assert np.all(np.argmax(np.abs(spec), axis=0) == range_bin_of(cfg, r))
    peak = spec[20]
    np.testing.assert_allclose(np.angle(peak / peak[0, 0]), 0, atol=1e-9)


def test_velocity_bin_one_off_centre(cfg):
    # one Velocity FFT bin per unit of the per-transmitter velocity bin width
    v = cfg.velocity_bin_width
    data = synthesize_frame(cfg, [PointTarget(8.0, 0.0, v)]).data
    tx0 = data[:, 0::2, 0][:, : cfg.velocity_fft_points]
    spec = np.fft.fftshift(direct_dft(tx0, n=cfg.velocity_fft_points, axis=1), axes=1)
    peak = np.unravel_index(np.argmax(np.abs(spec)), spec.shape)[1]
    assert peak == cfg.velocity_fft_points // 2 + 1 == velocity_bin_index(cfg, v)


def test_phase_state_continuity(cfg):
    t = PointTarget(6.0, 0.0, 1.5)
    first = synthesize_frame(cfg, [t])
    second = synthesize_frame(cfg, [t], first.phase_state)
    # chirp 0 of the next frame continues the Doppler rotation of chirp Nc - 1
    step = second.data[0, 0, 0] / first.data[0, -1, 0]
    assert step == pytest.approx(np.exp(1j * doppler_phase_shift(cfg, 1.5)), abs=1e-9)
    with pytest.raises(ConfigError):
        synthesize_frame(cfg, [t], [0.0, 1.0])


def test_synthesize_scene_shape(cfg):
    scene = Scene.constant_velocity(cfg, PointTarget(5.0, 0.0, 2.0), 3)
    raw = synthesize_scene(cfg, scene)
    assert raw.shape == (3, 128, 255, 4)
    assert scene.frames[2][0].r == pytest.approx(5.0 + 2.0 * 2 / 30)
