"""Range FFT -> Velocity FFT -> CA-CFAR -> Doppler compensation -> Angle FFT.

Array layouts:

* range profile: ``[range bin, chirp, physical rx]``
* RV spectrum:   ``[range bin, velocity bin, virtual element]`` (velocity centred)
* RVA cube:      ``[range bin, velocity bin, angle bin]`` (velocity and angle centred)

Virtual element ``q = tx * num_rx + rx``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError, ShapeError
from .radar_model import RadarConfig, RawFrame, Scene, synthesize_frame

WINDOWS = ("none", "hann")


@dataclass(frozen=True)
class CfarParams:
    """2-D cell-averaging CFAR window; ``guard`` and ``train`` are half-widths
    per (range, velocity) axis, training cells lying outside the guard band."""

    guard: tuple[int, int] = (2, 2)
    train: tuple[int, int] = (8, 8)
    pfa: float = 1e-3
    max_detections: int = 64

    def __post_init__(self):
        if min(self.guard) < 0 or min(self.train) < 1:
            raise ConfigError("CFAR guard must be >= 0 and training >= 1 cells")
        if not 0 < self.pfa < 1:
            raise ConfigError("CFAR pfa must lie in (0, 1)")

    @property
    def num_training(self) -> int:
        gr, gc = self.guard
        orr, oc = gr + self.train[0], gc + self.train[1]
        return (2 * orr + 1) * (2 * oc + 1) - (2 * gr + 1) * (2 * gc + 1)

    @property
    def scale(self) -> float:
        """Threshold multiplier for a square-law detector in exponential noise."""
        n = self.num_training
        return n * (self.pfa ** (-1.0 / n) - 1.0)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "CfarParams":
        try:
            return cls(
                guard=tuple(doc.get("guard", (2, 2))),
                train=tuple(doc.get("train", (8, 8))),
                pfa=float(doc.get("pfa", 1e-3)),
                max_detections=int(doc.get("max_detections", 64)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad cfar block: {exc}") from None


@dataclass(frozen=True)
class ProcessingOptions:
    window: tuple[str, str, str] = ("none", "none", "none")
    cfar: CfarParams = field(default_factory=CfarParams)
    compensate: bool = True

    def __post_init__(self):
        if len(self.window) != 3 or any(w not in WINDOWS for w in self.window):
            raise ConfigError(f"window must name one of {WINDOWS} per (range, velocity, angle) axis")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ProcessingOptions":
        win = doc.get("window", {})
        if isinstance(win, dict):
            window = (win.get("range", "none"), win.get("velocity", "none"), win.get("angle", "none"))
        else:
            window = tuple(win)
        return cls(window=window, cfar=CfarParams.from_dict(doc.get("cfar", {})),
                   compensate=bool(doc.get("compensate", True)))


@dataclass(frozen=True)
class CfarDetection:
    range_bin: int
    velocity_bin: int
    magnitude: float
    noise: float


@dataclass
class ProcessedFrame:
    cube: np.ndarray
    range_profile: np.ndarray
    rv_spectrum: np.ndarray
    detections: list[CfarDetection]


@dataclass
class ViewHeatmap:
    kind: str
    data: np.ndarray
    axes: tuple[str, str]
    frame: int = 0


@dataclass
class ViewSequence:
    ra: np.ndarray
    rv: np.ndarray
    va: np.ndarray
    cubes: np.ndarray | None = None


@lru_cache(maxsize=64)
def _window(kind: str, n: int) -> np.ndarray:
    if kind == "none":
        w = np.ones(n)
    elif kind == "hann":
        w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    else:
        raise ConfigError(f"unknown window {kind!r}")
    w.setflags(write=False)
    return w


def _as_array(frame: RawFrame | np.ndarray) -> np.ndarray:
    return frame.data if isinstance(frame, RawFrame) else np.asarray(frame)


def range_fft(frame: RawFrame | np.ndarray, cfg: RadarConfig, window: str = "none") -> np.ndarray:
    """DFT along fast time with ``Mr`` points (zero-padded)."""
    data = _as_array(frame)
    if data.shape != (cfg.samples_per_chirp, cfg.chirps_per_frame, cfg.num_rx_physical):
        raise ShapeError(f"raw frame shape {data.shape} does not match the config")
    w = _window(window, data.shape[0])[:, None, None]
    return np.fft.fft(data * w, n=cfg.range_fft_points, axis=0)


def deinterleave(profile: np.ndarray, cfg: RadarConfig) -> np.ndarray:
    """Split TDM chirps per transmitter: ``[range, loop, virtual element]``."""
    loops = cfg.loops_per_frame
    used = profile[:, : loops * cfg.num_tx, :]
    # chirp = loop * num_tx + tx
    split = used.reshape(profile.shape[0], loops, cfg.num_tx, cfg.num_rx_physical)
    return split.reshape(profile.shape[0], loops, cfg.num_virtual)


def velocity_fft(profile: np.ndarray, cfg: RadarConfig, window: str = "none") -> np.ndarray:
    """DFT across chirps of each transmitter, centred so zero velocity is bin ``Mv // 2``.

    A per-transmitter stream longer than ``Mv`` is truncated to its first ``Mv`` chirps.
    """
    streams = deinterleave(profile, cfg)
    mv = cfg.velocity_fft_points
    streams = streams[:, :mv, :]
    w = _window(window, streams.shape[1])[None, :, None]
    return np.fft.fftshift(np.fft.fft(streams * w, n=mv, axis=1), axes=1)


def rv_power(spectrum: np.ndarray) -> np.ndarray:
    """Non-coherent sum of ``|X|^2`` over virtual elements."""
    return np.einsum("rvq,rvq->rv", spectrum, spectrum.conj()).real


def ca_cfar_2d(power: np.ndarray, params: CfarParams | None = None) -> list[CfarDetection]:
    """Cell-averaging CFAR over a range-velocity power map.

    Training cells wrap around both axes. Detections are sorted by
    magnitude, strongest first, and capped at ``params.max_detections``.
    """
    params = params or CfarParams()
    power = np.asarray(power, dtype=np.float64)
    if power.ndim != 2:
        raise ShapeError("CFAR expects a 2-D range-velocity map")
    if np.any(power < 0) or not np.all(np.isfinite(power)):
        raise DomainError("CFAR input must be finite and nonnegative")
    span = [2 * (g + t) + 1 for g, t in zip(params.guard, params.train)]
    if power.shape[0] < span[0] or power.shape[1] < span[1]:
        raise ConfigError(f"spectrum {power.shape} smaller than the CFAR window {tuple(span)}")
    noise = kernels.cfar_noise_2d(power, params.guard[0], params.guard[1], params.train[0], params.train[1])
    hits = np.nonzero(power > params.scale * noise)
    if hits[0].size == 0:
        return []
    mags = power[hits]
    # strongest first; ties resolved by (range, velocity)
    order = np.lexsort((hits[1], hits[0], -mags))[: params.max_detections]
    return [CfarDetection(int(hits[0][i]), int(hits[1][i]), float(mags[i]), float(noise[hits[0][i], hits[1][i]]))
            for i in order]


def loop_phase_of_bin(cfg: RadarConfig, velocity_bin: int) -> float:
    """Doppler phase between successive chirps of one transmitter at a velocity bin."""
    mv = cfg.velocity_fft_points
    return 2 * math.pi * (velocity_bin - mv // 2) / mv


def _tx_rotation(cfg: RadarConfig, loop_phase: float) -> np.ndarray:
    tx = np.repeat(np.arange(cfg.num_tx), cfg.num_rx_physical)
    return np.exp(-1j * tx * loop_phase / cfg.num_tx)


def doppler_compensate(spectrum: np.ndarray, detections: Sequence[CfarDetection], cfg: RadarConfig) -> np.ndarray:
    """Undo the TDM Doppler rotation at detected cells.

    Transmitter ``p`` fires ``p`` chirps after the first one, so its virtual
    elements are rotated back by ``p / num_tx`` of the per-loop Doppler phase
    measured by the Velocity FFT (half of it for two transmitters).
    """
    out = spectrum.copy()
    seen = set()
    for det in detections:
        cell = (det.range_bin, det.velocity_bin)
        if cell in seen:
            continue
        seen.add(cell)
        out[cell[0], cell[1], :] *= _tx_rotation(cfg, loop_phase_of_bin(cfg, det.velocity_bin))
    return out


def angle_fft(spectrum: np.ndarray, cfg: RadarConfig, window: str = "none") -> np.ndarray:
    """DFT across virtual elements, centred so boresight is bin ``M_theta // 2``."""
    if spectrum.shape[-1] != cfg.num_virtual:
        raise ShapeError("last axis must hold the virtual array")
    w = _window(window, cfg.num_virtual)
    return np.fft.fftshift(np.fft.fft(spectrum * w, n=cfg.angle_fft_points, axis=-1), axes=-1)


def process_frame(
    frame: RawFrame | np.ndarray,
    cfg: RadarConfig,
    options: ProcessingOptions | None = None,
    detections: Sequence[CfarDetection] | None = None,
) -> ProcessedFrame:
    """Run the full chain on one frame.

    Passing ``detections`` skips the CFAR and compensates at the given cells,
    which makes the chain linear in the raw data.
    """
    options = options or ProcessingOptions()
    wr, wv, wa = options.window
    profile = range_fft(frame, cfg, wr)
    rv = velocity_fft(profile, cfg, wv)
    if detections is None:
        detections = ca_cfar_2d(rv_power(rv), options.cfar)
    detections = list(detections)
    corrected = doppler_compensate(rv, detections, cfg) if options.compensate else rv
    cube = angle_fft(corrected, cfg, wa)
    return ProcessedFrame(cube=cube, range_profile=profile, rv_spectrum=rv, detections=detections)


def ra_view(processed: ProcessedFrame, cfg: RadarConfig, chirp_pick: int = 0,
            options: ProcessingOptions | None = None) -> np.ndarray:
    """Complex range-angle map from one TDM loop of chirps.

    ``chirp_pick`` indexes loops (one chirp per transmitter). At range bins
    with CFAR detections the virtual elements are compensated with the
    strongest detection's velocity.
    """
    options = options or ProcessingOptions()
    loops = cfg.loops_per_frame
    if not 0 <= chirp_pick < loops:
        raise DomainError(f"chirp_pick {chirp_pick} outside [0, {loops})")
    snap = deinterleave(processed.range_profile, cfg)[:, chirp_pick, :].copy()
    if options.compensate:
        best: dict[int, CfarDetection] = {}
        for det in processed.detections:
            cur = best.get(det.range_bin)
            if cur is None or det.magnitude > cur.magnitude:
                best[det.range_bin] = det
        for rbin, det in best.items():
            snap[rbin] *= _tx_rotation(cfg, loop_phase_of_bin(cfg, det.velocity_bin))
    return angle_fft(snap, cfg, options.window[2])


def slice_views(processed: ProcessedFrame, cfg: RadarConfig, chirp_pick: int = 0,
                options: ProcessingOptions | None = None, frame: int = 0) -> tuple[ViewHeatmap, ViewHeatmap, ViewHeatmap]:
    """RA (complex), RV and VA (power summed over the omitted axis) views."""
    power = np.abs(processed.cube) ** 2
    ra = ViewHeatmap("RA-complex", ra_view(processed, cfg, chirp_pick, options), ("range", "angle"), frame)
    rv = ViewHeatmap("RV-magnitude", power.sum(axis=2), ("range", "velocity"), frame)
    va = ViewHeatmap("VA-magnitude", power.sum(axis=0), ("velocity", "angle"), frame)
    return ra, rv, va


def process_raw_sequence(
    raw: np.ndarray,
    cfg: RadarConfig,
    options: ProcessingOptions | None = None,
    chirp_pick: int = 0,
    keep_cubes: bool = False,
    threads: int = 1,
) -> ViewSequence:
    """Process ``[frame, sample, chirp, rx]`` raw data into view sequences."""
    options = options or ProcessingOptions()

    def one(k):
        proc = process_frame(raw[k], cfg, options)
        ra, rv, va = slice_views(proc, cfg, chirp_pick, options, frame=k)
        return ra.data, rv.data, va.data, (proc.cube if keep_cubes else None)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(raw.shape[0])))
    else:
        results = [one(k) for k in range(raw.shape[0])]
    return ViewSequence(
        ra=np.stack([r[0] for r in results]),
        rv=np.stack([r[1] for r in results]),
        va=np.stack([r[2] for r in results]),
        cubes=np.stack([r[3] for r in results]) if keep_cubes else None,
    )


def process_sequence(
    scene: Scene,
    cfg: RadarConfig,
    num_frames: int | None = None,
    options: ProcessingOptions | None = None,
    *,
    noise_std: float = 0.0,
    seed: int | None = None,
    chirp_pick: int = 0,
    keep_cubes: bool = False,
    threads: int = 1,
) -> ViewSequence:
    """Synthesize and process the first ``num_frames`` frames of ``scene``."""
    m = scene.num_frames if num_frames is None else num_frames
    if m < 1 or scene.num_frames < m:
        raise DomainError(f"scene has {scene.num_frames} frames, {m} requested")
    rng = np.random.default_rng(seed)
    raw = np.stack([synthesize_frame(cfg, scene.frames[k], noise_std=noise_std, rng=rng).data for k in range(m)])
    return process_raw_sequence(raw, cfg, options, chirp_pick, keep_cubes, threads)
