"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
written straight to the terminal so they survive output capture.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import direct_dft, rel_err
from radarcube.augmentation import (
    flip_angle,
    mix,
    moved_by_range,
    translate_angle,
    translate_range,
)
from radarcube.complexity import LayerSpec, ModelSpec, compare, flops, load_model, space
from radarcube.evaluation import average_precision_recall, evaluate
from radarcube.fusion_loss import LossParams, centers_from_scene, combined_loss, focal_loss, rasterize_labels
from radarcube.pipeline import (
    ProcessingOptions,
    angle_fft,
    deinterleave,
    doppler_compensate,
    process_frame,
    range_fft,
    velocity_fft,
)
from radarcube.radar_model import (
    CLASSES,
    PointTarget,
    RadarConfig,
    Scene,
    angle_bin_index,
    angle_resolution_at,
    max_angle,
    max_range,
    max_velocity,
    range_bin_of,
    range_resolution,
    synthesize_frame,
    velocity_bin_index,
    velocity_resolution,
)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return emit


def peak(x):
    return tuple(int(i) for i in np.unravel_index(np.argmax(np.abs(x)), x.shape))


def lattice_target(cfg, m_r, m_v, m_a, amp=1.0):
    return PointTarget(m_r * cfg.range_bin_width, math.asin(m_a / 64), m_v * cfg.velocity_bin_width, amp)


def test_c1_table_values(report):
    start = time.perf_counter()
    cfg = RadarConfig()
    got = {
        "range_res": range_resolution(cfg),
        "velocity_res": velocity_resolution(cfg),
        "angle_res_deg": math.degrees(angle_resolution_at(cfg)),
        "max_range": max_range(cfg),
        "max_velocity": max_velocity(cfg),
        "max_angle_deg": math.degrees(max_angle(cfg)),
    }
    table = {"range_res": 0.23, "velocity_res": 0.065, "angle_res_deg": 15.0,
             "max_range": 28.5, "max_velocity": 8.3, "max_angle_deg": 90.0}
    errs = {k: abs(got[k] - table[k]) / table[k] for k in table}
    elapsed = time.perf_counter() - start
    ok = max(errs.values()) <= 0.05 and elapsed < 1.0
    worst = max(errs, key=errs.get)
    report(1, ok, f"worst {worst} off by {100 * errs[worst]:.2f}% (limit 5%), {elapsed * 1e3:.1f} ms")


def test_c2_localization(report, rng):
    cfg = RadarConfig()
    vmax = 0.95 * cfg.unambiguous_velocity
    start = time.perf_counter()
    hits = 0
    trials = 1000
    for _ in range(trials):
        t = PointTarget(rng.uniform(1, 27), math.radians(rng.uniform(-70, 70)), rng.uniform(-vmax, vmax))
        got = peak(process_frame(synthesize_frame(cfg, [t]), cfg).cube)
        want = (range_bin_of(cfg, t.r), velocity_bin_index(cfg, t.v), angle_bin_index(cfg, t.theta))
        hits += max(abs(g - w) for g, w in zip(got, want)) <= 1
    elapsed = time.perf_counter() - start
    report(2, hits / trials >= 0.99 and elapsed < 120,
           f"{hits}/{trials} within one bin (need 99%), {elapsed:.1f} s (limit 120 s)")


def test_c3_fft_stages(report, rng):
    worst = 0.0
    for ns, nc, mr, mv, ma in ((16, 8, 16, 8, 8), (100, 64, 128, 64, 64), (200, 255, 256, 128, 256),
                               (256, 255, 256, 256, 128)):
        cfg = RadarConfig(samples_per_chirp=ns, chirps_per_frame=nc, fft_points=(mr, mv, ma))
        x = rng.standard_normal((ns, nc, 4)) + 1j * rng.standard_normal((ns, nc, 4))
        prof = range_fft(x, cfg)
        worst = max(worst, rel_err(prof, direct_dft(x, n=mr, axis=0)))
        streams = deinterleave(prof, cfg)
        spec = velocity_fft(prof, cfg)
        want = np.fft.fftshift(direct_dft(streams, n=mv, axis=1), axes=1)
        worst = max(worst, rel_err(spec, want))
        small = spec[:4, :4]
        want = np.fft.fftshift(direct_dft(small, n=ma, axis=2), axes=2)
        worst = max(worst, rel_err(angle_fft(small, cfg), want))
    report(3, worst <= 1e-9, f"worst relative error {worst:.2e} over range, velocity and angle stages (limit 1e-9)")


def _spread(cfg, spectrum, cell, theta):
    e = spectrum[cell[0], cell[1], :]
    q = np.arange(cfg.num_virtual)
    resid = e * np.exp(-2j * math.pi * q * cfg.element_spacing * math.sin(theta) / cfg.wavelength)
    ang = np.angle(resid / resid[0])
    return float(ang.max() - ang.min())


def test_c4_doppler_compensation(report, rng):
    cfg = RadarConfig()
    worst = 0.0
    for _ in range(40):
        m_v = int(rng.choice([k for k in range(-63, 64) if k]))
        t = PointTarget(rng.uniform(2, 26), math.radians(rng.uniform(-60, 60)), m_v * cfg.velocity_bin_width)
        proc = process_frame(synthesize_frame(cfg, [t]), cfg)
        rv = (np.abs(proc.rv_spectrum) ** 2).sum(axis=2)
        cell = np.unravel_index(np.argmax(rv), rv.shape)
        fixed = doppler_compensate(proc.rv_spectrum, proc.detections, cfg)
        worst = max(worst, _spread(cfg, fixed, cell, t.theta))
    # negative control: every lattice speed above 2 m/s, uncompensated
    plain = ProcessingOptions(compensate=False)
    fast = [k for k in range(-63, 64) if abs(k * cfg.velocity_bin_width) > 2]
    min_err = math.inf
    for m_v in fast:
        m_a = int(rng.integers(-20, 21))
        t = lattice_target(cfg, int(rng.integers(10, 110)), m_v, m_a)
        bad = process_frame(synthesize_frame(cfg, [t]), cfg, plain).cube
        min_err = min(min_err, abs(peak(bad)[2] - (64 + m_a)))
    ok = worst < 1e-6 and min_err > 1
    report(4, ok, f"compensated spread {worst:.2e} rad (limit 1e-6); uncompensated angle error "
                  f">= {min_err} bins over {len(fast)} speeds above 2 m/s (need > 1)")


def test_c5_augmentation_resynthesis(report, rng):
    cfg = RadarConfig()
    bw = cfg.range_bin_width
    vmax = 0.95 * cfg.unambiguous_velocity

    def cube(targets, detections=None):
        return process_frame(synthesize_frame(cfg, targets), cfg, detections=detections).cube

    range_ok = range_total = 0
    worst_mag = 0.0
    # velocities sit on Doppler bins: off-bin, the compensation residual on the
    # second Tx group is scaled with the steering phase and can flip a near-tie
    while range_total < 200:
        v = int(rng.integers(-61, 62)) * cfg.velocity_bin_width
        t = PointTarget(rng.uniform(2, 24), math.radians(rng.uniform(-60, 60)), v)
        cells = int(rng.integers(-30, 31))
        dr = cells * bw
        if cells == 0 or not 1.0 < t.r + dr < 26.5 or abs(t.r * math.sin(t.theta) / (t.r + dr)) > 0.95:
            continue
        range_total += 1
        out, _ = translate_range(cube([t]), cfg, dr, [t.r])
        ref = cube([moved_by_range(replace(t, amp=(t.r / (t.r + dr)) ** 2), dr)])
        err = abs(np.abs(out).max() / np.abs(ref).max() - 1)
        worst_mag = max(worst_mag, err)
        range_ok += peak(out) == peak(ref) and err <= 0.02

    angle_ok = 0
    for _ in range(200):
        k0, k1 = (int(k) for k in rng.integers(-50, 51, size=2))
        t = PointTarget(rng.uniform(2, 26), math.asin(k0 / 64), rng.uniform(-vmax, vmax))
        new = math.asin(k1 / 64)
        out, _ = translate_angle(cube([t]), cfg, new - t.theta, [t.r], [t.theta])
        ref = cube([replace(t, theta=new)])
        err = abs(np.abs(out).max() / np.abs(ref).max() - 1)
        worst_mag = max(worst_mag, err)
        angle_ok += peak(out) == peak(ref) and err <= 0.02

    flip_ok = mix_ok = True
    for _ in range(20):
        a = PointTarget(rng.uniform(2, 26), math.radians(rng.uniform(-60, 60)), rng.uniform(-vmax, vmax))
        b = PointTarget(rng.uniform(2, 26), math.radians(rng.uniform(-60, 60)), rng.uniform(-vmax, vmax))
        ca = cube([a])
        flip_ok &= np.array_equal(flip_angle(flip_angle(ca)), ca)
        dets = process_frame(synthesize_frame(cfg, [a, b]), cfg).detections
        joint = cube([a, b], dets)
        mixed = mix(cube([a], dets), cube([b], dets))
        mix_ok &= np.abs(mixed - joint).max() <= 1e-9 * np.abs(joint).max()
    ok = range_ok == 200 and angle_ok == 200 and flip_ok and mix_ok
    report(5, ok, f"translate_range {range_ok}/200, translate_angle {angle_ok}/200 exact peak, "
                  f"worst magnitude error {100 * worst_mag:.3f}% (limit 2%), flip involution {flip_ok}, "
                  f"mix linearity {mix_ok}")


def test_c6_loss_oracles(report, rng):
    cell = lambda v: np.array([[[[v]]]])
    cases = [
        (focal_loss(cell(1.0), cell(1.0)), 0.0),
        (focal_loss(cell(0.5), cell(1.0)), 0.693147),
        (focal_loss(cell(0.5), cell(0.0)), 0.173287),
    ]
    worst = max(abs(a - b) for a, b in cases)
    truth = rasterize_labels(centers_from_scene(RadarConfig(), Scene([[PointTarget(8.0, 0.2, cls="car")]])),
                             (1, 128, 128))
    full = rng.uniform(0.01, 0.99, truth.shape)
    dropped = rng.uniform(0.01, 0.99, truth.shape)
    lin = 0.0
    for gamma in (0.0, 0.5, 1.0):
        p = LossParams(gamma=gamma)
        want = focal_loss(full, truth, p) + gamma * focal_loss(dropped, truth, p)
        lin = max(lin, abs(combined_loss(full, dropped, truth, p) - want))
    ok = worst <= 1e-6 and lin <= 1e-9
    report(6, ok, f"hand cases off by at most {worst:.1e} (limit 1e-6), gamma linearity residual {lin:.1e}")


def _random_scene(cfg, rng, frames=3):
    out = []
    for _ in range(frames):
        targets, centres = [], []
        for _ in range(int(rng.integers(0, 5))):
            t = PointTarget(rng.uniform(1, 27), math.radians(rng.uniform(-70, 70)),
                            cls=CLASSES[int(rng.integers(0, 3))])
            c = centers_from_scene(cfg, Scene([[t]]))[0]
            if all(math.hypot(c.r - o.r, c.theta - o.theta) > 12 for o in centres):
                targets.append(t)
                centres.append(c)
        out.append(targets)
    return Scene(out)


def test_c7_closed_loop(report, rng):
    cfg = RadarConfig()
    results = []
    objects = 0
    for _ in range(50):
        scene = _random_scene(cfg, rng)
        truth = centers_from_scene(cfg, scene)
        objects += len(truth)
        pred = rasterize_labels(truth, (scene.num_frames, cfg.range_fft_points, cfg.angle_fft_points))
        results.append(evaluate(pred, truth))
    ap, ar = average_precision_recall(results)
    report(7, ap == 1.0 and ar == 1.0, f"AP={ap} AR={ar} over 50 scenes, {objects} objects")


def test_c8_complexity(report, rng):
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        i = tuple(int(v) for v in rng.integers(1, 129, size=n))
        k = tuple(int(v) for v in rng.integers(1, 10, size=n))
        ci, co = (int(v) for v in rng.integers(1, 513, size=2))
        m = ModelSpec("r", [LayerSpec(str(rng.choice(["conv", "transposed_conv"])), n, i, k, ci, co)])
        want_flops = math.prod(i) * math.prod(k) * ci * co
        want_space = (math.prod(k) * ci * co, math.prod(i) * co)
        mismatches += flops(m) != want_flops or space(m) != want_space
    ramp, cdc4 = load_model("ramp_cnn"), load_model("4d_cdc")
    ratio = compare([cdc4, ramp])[(cdc4.name, ramp.name)]["flops"]
    ok = mismatches == 0 and 50 <= ratio <= 500
    report(8, ok, f"{1000 - mismatches}/1000 layers exact, 4D-CDC/RAMP-CNN FLOPs ratio {ratio:.1f} (need 50 to 500)")


def test_c9_trained_network_tables(capsys):
    reason = ("trained-network AP/AR and prediction-time tables need the original dataset and "
              "GPU training; criteria 2 to 7 stand in for them")
    with capsys.disabled():
        print(f"\nSKIP criterion 9: {reason}")
    pytest.skip(reason)
