"""FMCW radar configuration, closed-form resolution limits, bin mappings and
the analytic de-chirped point-target synthesizer.

Conventions used throughout the package:

* range bin ``m_r`` grows with range; bin ``m`` is centred on ``m * R_max / Mr``;
* velocity and angle axes are FFT-shifted so that zero sits at bin ``M // 2``;
* positive velocity means the range grows (target receding);
* positive azimuth is to the right of boresight, and a target at ``theta``
  lands ``floor(M_theta * d * sin(theta) / lambda)`` bins above the centre.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError

C0 = 299_792_458.0
# absorbs float round-off when a value sits exactly on a bin boundary
_BIN_EPS = 1e-9


class TargetClass(str, enum.Enum):
    PEDESTRIAN = "pedestrian"
    CYCLIST = "cyclist"
    CAR = "car"

    @property
    def index(self) -> int:
        return CLASSES.index(self)

    @classmethod
    def parse(cls, value: "str | int | TargetClass") -> "TargetClass":
        if isinstance(value, TargetClass):
            return value
        if isinstance(value, (int, np.integer)):
            return CLASSES[int(value)]
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown target class {value!r}") from None


CLASSES: tuple[TargetClass, ...] = (TargetClass.PEDESTRIAN, TargetClass.CYCLIST, TargetClass.CAR)


@dataclass(frozen=True)
class RadarConfig:
    """Waveform, array and FFT parameters. All quantities in SI units."""

    carrier_freq: float = 77e9
    sweep_bandwidth: float = 670e6
    sweep_slope: float = 21e12
    sampling_freq: float = 4e6
    chirps_per_frame: int = 255
    samples_per_chirp: int = 128
    chirp_duration: float = 120e-6
    num_tx: int = 2
    num_rx_physical: int = 4
    element_spacing: float | None = None
    frame_rate: float = 30.0
    fft_points: tuple[int, int, int] = (128, 128, 128)

    def __post_init__(self):
        for name in ("carrier_freq", "sweep_bandwidth", "sweep_slope", "sampling_freq",
                     "chirp_duration", "frame_rate"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        for name in ("chirps_per_frame", "samples_per_chirp", "num_tx", "num_rx_physical"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        fft = tuple(int(n) for n in self.fft_points)
        if len(fft) != 3 or min(fft) < 2:
            raise ConfigError("fft_points must hold three sizes >= 2")
        object.__setattr__(self, "fft_points", fft)
        if self.element_spacing is None:
            object.__setattr__(self, "element_spacing", self.wavelength / 2)
        elif not self.element_spacing > 0:
            raise ConfigError("element_spacing must be strictly positive")
        if self.samples_per_chirp > self.range_fft_points:
            raise ConfigError("samples_per_chirp exceeds the Range FFT size")
        if self.num_virtual > self.angle_fft_points:
            raise ConfigError("virtual array larger than the Angle FFT size")
        if self.chirps_per_frame < self.num_tx:
            raise ConfigError("a frame needs at least one chirp per transmitter")

    # -- constructors -------------------------------------------------------
    @classmethod
    def awr1843(cls, **overrides) -> "RadarConfig":
        """The 77 GHz, 2 Tx / 4 Rx configuration used for the UWCR recordings."""
        return cls(**overrides)

    @classmethod
    def from_frame_rate(cls, **kwargs) -> "RadarConfig":
        """Derive the chirp period from the frame rate as ``Tc = 1 / (Nc * fF)``."""
        probe = cls(**kwargs)
        return replace(probe, chirp_duration=1.0 / (probe.chirps_per_frame * probe.frame_rate))

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RadarConfig":
        allowed = set(cls.__dataclass_fields__)
        kwargs = {}
        for key, value in doc.items():
            if key in ("cfar", "window", "processing"):
                continue
            if key not in allowed:
                raise ConfigError(f"unknown config field {key!r}")
            kwargs[key] = value
        if "fft_points" in kwargs:
            kwargs["fft_points"] = tuple(kwargs["fft_points"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict[str, Any]:
        doc = {name: getattr(self, name) for name in self.__dataclass_fields__}
        doc["fft_points"] = list(self.fft_points)
        return doc

    # -- derived quantities -------------------------------------------------
    @property
    def wavelength(self) -> float:
        return C0 / self.carrier_freq

    @property
    def num_virtual(self) -> int:
        return self.num_tx * self.num_rx_physical

    @property
    def range_fft_points(self) -> int:
        return self.fft_points[0]

    @property
    def velocity_fft_points(self) -> int:
        return self.fft_points[1]

    @property
    def angle_fft_points(self) -> int:
        return self.fft_points[2]

    @property
    def loops_per_frame(self) -> int:
        """Chirps per transmitter; trailing chirps of an incomplete TDM round are dropped."""
        return self.chirps_per_frame // self.num_tx

    @property
    def range_bin_width(self) -> float:
        return max_range(self) / self.range_fft_points

    @property
    def velocity_bin_width(self) -> float:
        # each Tx stream is sampled every num_tx chirps
        return self.wavelength / (2 * self.num_tx * self.chirp_duration * self.velocity_fft_points)

    @property
    def unambiguous_velocity(self) -> float:
        """Half-span of the Velocity FFT once the chirps are split per transmitter."""
        return max_velocity(self) / self.num_tx


# -- closed-form resolutions and limits --------------------------------------

def range_resolution(cfg: RadarConfig) -> float:
    return C0 / (2 * cfg.sweep_bandwidth)


def velocity_resolution(cfg: RadarConfig) -> float:
    return cfg.wavelength / (2 * cfg.chirps_per_frame * cfg.chirp_duration)


def angle_resolution_at(cfg: RadarConfig, theta: float = 0.0) -> float:
    """Angular resolution in radians at azimuth ``theta``."""
    return cfg.wavelength / (cfg.num_virtual * cfg.element_spacing * math.cos(theta))


def max_range(cfg: RadarConfig) -> float:
    return cfg.sampling_freq * C0 / (2 * cfg.sweep_slope)


def max_velocity(cfg: RadarConfig) -> float:
    return cfg.wavelength / (4 * cfg.chirp_duration)


def max_angle(cfg: RadarConfig) -> float:
    return math.asin(min(1.0, cfg.wavelength / (2 * cfg.element_spacing)))


def beat_frequency(cfg: RadarConfig, r: float) -> float:
    return 2 * cfg.sweep_slope * r / C0


def doppler_phase_shift(cfg: RadarConfig, v: float) -> float:
    """Carrier phase advance between consecutive chirps for radial velocity ``v``."""
    return 4 * math.pi * v * cfg.chirp_duration / cfg.wavelength


# -- bin mappings ------------------------------------------------------------

def range_bin_of(cfg: RadarConfig, r: float) -> int:
    rmax = max_range(cfg)
    if not 0 <= r <= rmax * (1 + 1e-12):
        raise DomainError(f"range {r} m outside [0, {rmax:.3f}] m")
    m = math.floor(2 * cfg.range_fft_points * cfg.sweep_slope * r / (C0 * cfg.sampling_freq) + _BIN_EPS)
    return min(m, cfg.range_fft_points - 1)


def angle_bin_of(cfg: RadarConfig, theta: float) -> int:
    """Signed angle bin; add ``M_theta // 2`` (see :func:`angle_bin_index`) for array indexing."""
    tmax = max_angle(cfg)
    if abs(theta) > tmax + 1e-12:
        raise DomainError(f"azimuth {math.degrees(theta):.2f} deg beyond +/-{math.degrees(tmax):.2f} deg")
    return math.floor(cfg.angle_fft_points * cfg.element_spacing * math.sin(theta) / cfg.wavelength + _BIN_EPS)


def velocity_bin_of(cfg: RadarConfig, v: float) -> int:
    """Signed Doppler bin relative to the zero-velocity centre bin."""
    vmax = cfg.unambiguous_velocity
    if abs(v) >= vmax * (1 + 1e-12):
        raise DomainError(f"velocity {v} m/s aliases beyond +/-{vmax:.3f} m/s")
    return math.floor(v / cfg.velocity_bin_width + _BIN_EPS)


def angle_bin_index(cfg: RadarConfig, theta: float) -> int:
    return (angle_bin_of(cfg, theta) + cfg.angle_fft_points // 2) % cfg.angle_fft_points


def velocity_bin_index(cfg: RadarConfig, v: float) -> int:
    return (velocity_bin_of(cfg, v) + cfg.velocity_fft_points // 2) % cfg.velocity_fft_points


def velocity_of_bin(cfg: RadarConfig, index: int) -> float:
    """Radial velocity at (shifted) Velocity FFT bin ``index``."""
    return (index - cfg.velocity_fft_points // 2) * cfg.velocity_bin_width


def range_of_bin(cfg: RadarConfig, index: float) -> float:
    return index * cfg.range_bin_width


def sin_of_angle_bin(cfg: RadarConfig, index: float) -> float:
    return (index - cfg.angle_fft_points // 2) * cfg.wavelength / (cfg.angle_fft_points * cfg.element_spacing)


# -- targets and scenes ------------------------------------------------------

@dataclass(frozen=True)
class PointTarget:
    r: float
    theta: float = 0.0
    v: float = 0.0
    amp: float = 1.0
    cls: TargetClass = TargetClass.PEDESTRIAN

    def __post_init__(self):
        object.__setattr__(self, "cls", TargetClass.parse(self.cls))

    def validate(self, cfg: RadarConfig) -> None:
        if not 0 < self.r <= max_range(cfg):
            raise DomainError(f"target range {self.r} m outside (0, {max_range(cfg):.3f}] m")
        if not abs(self.theta) < math.pi / 2:
            raise DomainError("target azimuth must satisfy |theta| < 90 deg")
        if not abs(self.v) < max_velocity(cfg):
            raise DomainError(f"target velocity {self.v} m/s beyond +/-{max_velocity(cfg):.3f} m/s")
        if not self.amp > 0:
            raise DomainError("target amplitude must be positive")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "PointTarget":
        try:
            if "theta_deg" in doc:
                theta = math.radians(float(doc["theta_deg"]))
            else:
                theta = float(doc.get("theta", 0.0))
            return cls(
                r=float(doc["r"]),
                theta=theta,
                v=float(doc.get("v", 0.0)),
                amp=float(doc.get("amp", 1.0)),
                cls=doc.get("class", "pedestrian"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad target record {doc!r}: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        return {"r": self.r, "theta_deg": math.degrees(self.theta), "v": self.v,
                "amp": self.amp, "class": self.cls.value}


@dataclass
class Scene:
    frames: list[list[PointTarget]]
    config: RadarConfig | None = None
    ground_truth: list[dict[str, Any]] | None = None

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def validate(self, cfg: RadarConfig | None = None) -> None:
        cfg = cfg or self.config
        if cfg is None:
            raise ConfigError("scene validation needs a RadarConfig")
        for frame in self.frames:
            for target in frame:
                target.validate(cfg)

    @classmethod
    def from_dict(cls, doc: dict[str, Any], config: RadarConfig | None = None) -> "Scene":
        if not isinstance(doc, dict) or not isinstance(doc.get("frames"), list):
            raise ConfigError('scene document needs a "frames" list')
        frames = []
        for frame in doc["frames"]:
            if not isinstance(frame, list):
                raise ConfigError("each scene frame must be a list of targets")
            frames.append([PointTarget.from_dict(t) for t in frame])
        return cls(frames=frames, config=config, ground_truth=doc.get("ground_truth"))

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"frames": [[t.to_dict() for t in f] for f in self.frames]}
        if self.ground_truth is not None:
            doc["ground_truth"] = self.ground_truth
        return doc

    @classmethod
    def constant_velocity(cls, cfg: RadarConfig, target: PointTarget, num_frames: int) -> "Scene":
        """A single target moving radially at ``target.v`` for ``num_frames`` frames."""
        frames = []
        for k in range(num_frames):
            r = target.r + target.v * k / cfg.frame_rate
            frames.append([replace(target, r=r)])
        return cls(frames=frames, config=cfg)


# -- synthesis ---------------------------------------------------------------

@dataclass
class RawFrame:
    """De-chirped ADC samples ``[sample, chirp, physical rx]``.

    ``tx_schedule[k]`` is the transmitter that fired chirp ``k`` (round-robin TDM).
    ``phase_state`` holds each target's extra phase at the start of the next frame.
    """

    data: np.ndarray
    tx_schedule: np.ndarray
    phase_state: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


def tdm_schedule(cfg: RadarConfig) -> np.ndarray:
    return np.arange(cfg.chirps_per_frame) % cfg.num_tx


def synthesize_frame(
    cfg: RadarConfig,
    targets: Sequence[PointTarget],
    phase_state: Iterable[float] | None = None,
    *,
    noise_std: float = 0.0,
    rng: np.random.Generator | int | None = None,
    carrier_phase: bool = True,
    validate: bool = True,
) -> RawFrame:
    """Sample the de-chirped return of point targets for one TDM-MIMO frame.

    Each target contributes
    ``A exp(j2pi(fc tau + S t tau - S tau^2 / 2 + q d sin(theta) / lambda))``
    at ``t = i / fs``, advanced by the Doppler phase per chirp, where ``q`` is
    the virtual element ``tx * num_rx + rx`` of the transmitter firing that
    chirp. Chirps from the second transmitter therefore carry the extra
    one-chirp Doppler rotation that :func:`radarcube.pipeline.doppler_compensate`
    removes.

    ``phase_state`` adds a per-target phase offset; pass it when successive
    frames hold a target's range fixed but its Doppler phase should keep
    accumulating. Scenes that already advance ranges frame to frame get that
    continuity from the carrier term and should leave it as ``None``.
    ``carrier_phase=False`` drops the range-dependent constant phase
    ``fc tau - S tau^2 / 2``. ``noise_std`` is the per-sample standard
    deviation of circular complex Gaussian noise.
    """
    targets = list(targets)
    if validate:
        for t in targets:
            t.validate(cfg)
    offsets = np.zeros(len(targets)) if phase_state is None else np.asarray(list(phase_state), dtype=float)
    if offsets.shape != (len(targets),):
        raise ConfigError("phase_state needs one entry per target")

    n = len(targets)
    amp = np.empty(n)
    phi0 = np.empty(n)
    f_cyc = np.empty(n)
    dphi = np.empty(n)
    s_cyc = np.empty(n)
    for j, t in enumerate(targets):
        tau = 2 * t.r / C0
        amp[j] = t.amp
        if carrier_phase:
            cycles = math.fmod(cfg.carrier_freq * tau, 1.0) - math.fmod(0.5 * cfg.sweep_slope * tau * tau, 1.0)
        else:
            cycles = 0.0
        phi0[j] = 2 * math.pi * cycles + offsets[j]
        f_cyc[j] = cfg.sweep_slope * tau / cfg.sampling_freq
        dphi[j] = doppler_phase_shift(cfg, t.v)
        s_cyc[j] = cfg.element_spacing * math.sin(t.theta) / cfg.wavelength

    data = np.zeros((cfg.samples_per_chirp, cfg.chirps_per_frame, cfg.num_rx_physical), dtype=np.complex128)
    if n:
        kernels.dechirp_accumulate(data, amp, phi0, f_cyc, dphi, s_cyc, cfg.num_tx, cfg.num_rx_physical)
    if noise_std > 0:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        scale = noise_std / math.sqrt(2)
        data += scale * (gen.standard_normal(data.shape) + 1j * gen.standard_normal(data.shape))
    end_state = np.mod(offsets + cfg.chirps_per_frame * dphi, 2 * math.pi)
    return RawFrame(data=data, tx_schedule=tdm_schedule(cfg), phase_state=end_state)


def synthesize_scene(
    cfg: RadarConfig,
    scene: Scene,
    *,
    noise_std: float = 0.0,
    seed: int | None = None,
    carrier_phase: bool = True,
) -> np.ndarray:
    """Synthesize every frame of ``scene``; returns ``[frame, sample, chirp, rx]``."""
    rng = np.random.default_rng(seed)
    out = np.empty((scene.num_frames, cfg.samples_per_chirp, cfg.chirps_per_frame, cfg.num_rx_physical),
                   dtype=np.complex128)
    for k, frame in enumerate(scene.frames):
        out[k] = synthesize_frame(cfg, frame, noise_std=noise_std, rng=rng, carrier_phase=carrier_phase).data
    return out
