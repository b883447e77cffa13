"""Radar-aware augmentation of RVA cubes: flip, translate in range or angle,
noise interpolation of vacated cells, and mixing.

The translations operate on the complex cube directly. A range shift moves
the whole cube along the range axis by a whole number of bins, then rescales
each target's amplitude by ``(r / (r + dr))**2`` and its inter-element phase
by ``r / (r + dr)``. An angle shift rolls each target's range rows along the
angle axis and applies the antenna gain ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ShapeError
from .radar_model import C0, PointTarget, RadarConfig, max_angle, max_range

SUPPORT_HALF_WIDTH = 2
NOISE_FRACTION = 0.05


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class GainProfile:
    """Tabulated one-way antenna gain over azimuth, linearly interpolated."""

    theta: tuple[float, ...] = (-math.pi / 2, math.pi / 2)
    gain: tuple[float, ...] = (1.0, 1.0)

    def __post_init__(self):
        if len(self.theta) != len(self.gain) or len(self.theta) < 2:
            raise ConfigError("gain profile needs matching theta/gain tables of length >= 2")
        if np.any(np.diff(self.theta) <= 0):
            raise ConfigError("gain profile theta grid must be increasing")
        if min(self.gain) <= 0:
            raise ConfigError("antenna gain must be positive")

    def __call__(self, theta: float) -> float:
        return float(np.interp(theta, self.theta, self.gain))

    @classmethod
    def uniform(cls) -> "GainProfile":
        return cls()

    @classmethod
    def cos2(cls, points: int = 181, floor: float = 1e-3) -> "GainProfile":
        th = np.linspace(-math.pi / 2, math.pi / 2, points)
        return cls(tuple(th), tuple(np.maximum(np.cos(th) ** 2, floor)))


@dataclass(frozen=True)
class AugmentOp:
    """One recipe step. ``params`` carries SI values (``dr`` in m, ``dtheta`` in rad)."""

    variant: str
    params: dict[str, Any] = field(default_factory=dict)

    VARIANTS = ("flip", "translate_range", "translate_angle", "interpolate", "mix")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise ConfigError(f"unknown augmentation {self.variant!r}")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "AugmentOp":
        if not isinstance(doc, dict) or "op" not in doc:
            raise ConfigError('augmentation record needs an "op" field')
        params = {k: v for k, v in doc.items() if k != "op"}
        if "dtheta_deg" in params:
            params["dtheta"] = math.radians(float(params.pop("dtheta_deg")))
        return cls(doc["op"], params)


# -- geometry ----------------------------------------------------------------

def polar_point_to_xy(r: float, theta: float) -> tuple[float, float]:
    return r * math.sin(theta), r * math.cos(theta)


def xy_to_polar_point(x: float, y: float) -> tuple[float, float]:
    return math.hypot(x, y), math.atan2(x, y)


def _angle_index(cfg: RadarConfig, sin_theta):
    m = cfg.angle_fft_points
    return m // 2 + sin_theta * m * cfg.element_spacing / cfg.wavelength


def _sample(grid: np.ndarray, coords: np.ndarray) -> np.ndarray:
    from scipy.ndimage import map_coordinates

    if np.iscomplexobj(grid):
        return (map_coordinates(grid.real, coords, order=1, cval=0.0)
                + 1j * map_coordinates(grid.imag, coords, order=1, cval=0.0))
    return map_coordinates(grid, coords, order=1, cval=0.0)


def cartesian_axes(cfg: RadarConfig, nx: int | None = None, ny: int | None = None):
    rmax = max_range(cfg)
    nx = nx or 2 * cfg.range_fft_points
    ny = ny or cfg.range_fft_points
    return np.linspace(-rmax, rmax, nx), np.linspace(0.0, rmax, ny)


def polar_to_cartesian(ra: np.ndarray, cfg: RadarConfig, nx: int | None = None, ny: int | None = None):
    """Resample a ``[range, angle]`` map onto a uniform ``[y, x]`` grid.

    Returns ``(image, x_axis, y_axis)``; cells outside the field of view are 0.
    """
    x_axis, y_axis = cartesian_axes(cfg, nx, ny)
    xx, yy = np.meshgrid(x_axis, y_axis)
    r = np.hypot(xx, yy)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r > 0, xx / r, 0.0)
    coords = np.stack([r / cfg.range_bin_width, _angle_index(cfg, s)])
    return _sample(np.asarray(ra), coords), x_axis, y_axis


def cartesian_to_polar(image: np.ndarray, cfg: RadarConfig, x_axis: np.ndarray, y_axis: np.ndarray) -> np.ndarray:
    """Inverse of :func:`polar_to_cartesian` back onto the FFT bin grid."""
    mr, ma = cfg.range_fft_points, cfg.angle_fft_points
    r = np.arange(mr)[:, None] * cfg.range_bin_width
    s = (np.arange(ma)[None, :] - ma // 2) * cfg.wavelength / (ma * cfg.element_spacing)
    c = np.sqrt(np.clip(1 - s ** 2, 0.0, None))
    x = r * s
    y = r * c
    xi = (x - x_axis[0]) / (x_axis[1] - x_axis[0])
    yi = (y - y_axis[0]) / (y_axis[1] - y_axis[0])
    out = _sample(np.asarray(image), np.stack([yi, np.broadcast_to(xi, yi.shape)]))
    out[:, np.abs(s[0]) > 1] = 0
    return out


# -- operators ---------------------------------------------------------------

def flip_angle(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Mirror the angle axis about the boresight bin ``M // 2``."""
    m = x.shape[axis]
    return np.take(x, (m - np.arange(m)) % m, axis=axis)


def _row_owners(centres: Sequence[int], n_rows: int) -> dict[int, list[int]]:
    """Partition range rows among targets by nearest centre.

    Within ``SUPPORT_HALF_WIDTH`` of a centre this is the per-target mask;
    rows beyond every support carry range sidelobes and follow the nearest
    target too, so a lone target is transformed as a whole.
    """
    owners: dict[int, list[int]] = {j: [] for j in range(len(centres))}
    if not centres:
        return owners
    for row in range(n_rows):
        j = min(range(len(centres)), key=lambda k: (abs(row - centres[k]), k))
        owners[j].append(row)
    return owners


def _to_elements(x: np.ndarray, n: int) -> np.ndarray:
    return np.fft.ifft(np.fft.ifftshift(x, axes=-1), axis=-1)[..., :n]


def _from_elements(e: np.ndarray, m: int) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft(e, n=m, axis=-1), axes=-1)


def scale_element_phase(e: np.ndarray, ratio: float, mode: str = "steering") -> np.ndarray:
    """Scale array phases by ``ratio``.

    ``steering`` scales each element's phase relative to element 0 (unwrapped
    along the array), which moves the arrival angle to ``sin(theta) * ratio``.
    ``absolute`` scales each element's wrapped absolute phase.
    """
    mag = np.abs(e)
    if mode == "steering":
        ref = e[..., :1]
        rel = np.unwrap(np.angle(e * np.conj(ref)), axis=-1)
        return mag * np.exp(1j * (np.angle(ref) + ratio * rel))
    if mode == "absolute":
        return mag * np.exp(1j * ratio * np.angle(e))
    raise ConfigError(f"unknown phase mode {mode!r}")


def _nearest_range_bin(cfg: RadarConfig, r: float) -> int:
    return min(max(int(round(r / cfg.range_bin_width)), 0), cfg.range_fft_points - 1)


def range_shift_cells(cfg: RadarConfig, dr: float) -> int:
    """Signed cell offset ``round(-2 Mr S dr / (c0 fs))`` (new bin = old bin - offset)."""
    return round_half_away(-2 * cfg.range_fft_points * cfg.sweep_slope * dr / (C0 * cfg.sampling_freq))


def angle_shift_cells(cfg: RadarConfig, theta: float, theta_new: float) -> int:
    """Signed cell offset ``round(M d (sin(theta) - sin(theta')) / lambda)``."""
    m = cfg.angle_fft_points
    return round_half_away(m * cfg.element_spacing * (math.sin(theta) - math.sin(theta_new)) / cfg.wavelength)


def translate_range(
    cube: np.ndarray,
    cfg: RadarConfig,
    dr: float,
    target_ranges: Sequence[float],
    *,
    phase_mode: str = "steering",
) -> tuple[np.ndarray, np.ndarray]:
    """Move every target by ``dr`` metres in range.

    ``cube`` is ``[range, velocity, angle]`` complex. Returns the new cube and
    a boolean mask of vacated (blank) cells, which are zero in the output.
    """
    _check_cube(cube, cfg)
    rmax = max_range(cfg)
    for r in target_ranges:
        if not 0 < r + dr <= rmax:
            raise DomainError(f"target at {r:.3f} m shifted by {dr:.3f} m leaves (0, {rmax:.3f}] m")
    mr = cube.shape[0]
    offset = -range_shift_cells(cfg, dr)
    out = np.zeros_like(cube)
    blank = np.ones(cube.shape, dtype=bool)
    if abs(offset) < mr:
        src = slice(max(0, -offset), mr - max(0, offset))
        dst = slice(max(0, offset), mr - max(0, -offset))
        out[dst] = cube[src]
        blank[dst] = False
    if dr == 0:
        return out, blank

    centres = [_nearest_range_bin(cfg, r) + offset for r in target_ranges]
    for j, rows in _row_owners(centres, mr).items():
        if not rows:
            continue
        ratio = target_ranges[j] / (target_ranges[j] + dr)
        e = _to_elements(out[rows], cfg.num_virtual)
        e = ratio ** 2 * scale_element_phase(e, ratio, phase_mode)
        out[rows] = _from_elements(e, cube.shape[2])
        out[rows] = np.where(blank[rows], 0, out[rows])
    return out, blank


def translate_angle(
    cube: np.ndarray,
    cfg: RadarConfig,
    dtheta: float,
    target_ranges: Sequence[float],
    target_angles: Sequence[float],
    gain: GainProfile | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate every target by ``dtheta`` radians in azimuth.

    Each target's range rows are rolled along the angle axis by the bin
    offset between its old and new azimuth. The angle spectrum is periodic in
    the bin index, so the roll leaves no vacated cells and the returned blank
    mask is all False.
    """
    _check_cube(cube, cfg)
    if len(target_ranges) != len(target_angles):
        raise ConfigError("need one range per target angle")
    gain = gain or GainProfile.uniform()
    tmax = max_angle(cfg)
    for th in target_angles:
        if not abs(th + dtheta) < tmax:
            raise DomainError(f"target at {math.degrees(th):.2f} deg rotated by "
                              f"{math.degrees(dtheta):.2f} deg leaves the field of view")
    out = cube.copy()
    blank = np.zeros(cube.shape, dtype=bool)
    if dtheta == 0:
        return out, blank
    centres = [_nearest_range_bin(cfg, r) for r in target_ranges]
    for j, rows in _row_owners(centres, cube.shape[0]).items():
        if not rows:
            continue
        th = target_angles[j]
        shift = angle_shift_cells(cfg, th, th + dtheta)
        g = gain(th + dtheta) / gain(th)
        out[rows] = g * np.roll(cube[rows], -shift, axis=-1)
    return out, blank


def interpolate_blanks(
    x: np.ndarray,
    blank: np.ndarray,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Fill blank cells with environment noise.

    Magnitudes are drawn with replacement from the weakest 5 % of the
    non-blank cells; complex tensors get a uniformly random phase.
    """
    blank = np.broadcast_to(np.asarray(blank, dtype=bool), x.shape)
    out = x.copy()
    if not blank.any():
        return out
    mags = np.abs(x[~blank])
    k = int(math.floor(NOISE_FRACTION * mags.size))
    if k == 0:
        raise DomainError("too few cells to form a noise pool (need at least 20 non-blank cells)")
    pool = np.partition(mags, k - 1)[:k]
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = int(blank.sum())
    fill = gen.choice(pool, size=n, replace=True)
    if np.iscomplexobj(x):
        fill = fill * np.exp(1j * gen.uniform(0.0, 2 * math.pi, size=n))
    out[blank] = fill
    return out


def mix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeError(f"cannot mix shapes {a.shape} and {b.shape}")
    return a + b


def _check_cube(cube: np.ndarray, cfg: RadarConfig) -> None:
    if cube.ndim != 3 or cube.shape[0] != cfg.range_fft_points or cube.shape[2] != cfg.angle_fft_points:
        raise ShapeError(f"expected a [range, velocity, angle] cube, got {cube.shape}")


# -- recipes -----------------------------------------------------------------

def moved_by_range(target: PointTarget, dr: float) -> PointTarget:
    """Target after a range shift that keeps its cross-range offset ``x`` fixed."""
    r_new = target.r + dr
    s = target.r * math.sin(target.theta) / r_new if r_new > 0 else math.inf
    if not abs(s) < 1:
        raise DomainError(f"target at {target.r:.3f} m, {math.degrees(target.theta):.2f} deg cannot move "
                          f"{dr:.3f} m in range with fixed cross-range offset")
    return replace(target, r=r_new, theta=math.asin(s))


def apply_recipe(
    cube: np.ndarray,
    cfg: RadarConfig,
    ops: Sequence[AugmentOp],
    targets: Sequence[PointTarget],
    rng: np.random.Generator | int | None = None,
    others: dict[str, np.ndarray] | None = None,
    gain: GainProfile | None = None,
) -> tuple[np.ndarray, list[PointTarget]]:
    """Apply a recipe to one frame's cube, tracking where the targets end up."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    targets = list(targets)
    blank = np.zeros(cube.shape, dtype=bool)
    for op in ops:
        p = op.params
        if op.variant == "flip":
            cube = flip_angle(cube)
            blank = flip_angle(blank)
            targets = [replace(t, theta=-t.theta) for t in targets]
        elif op.variant == "translate_range":
            dr = float(p["dr"])
            cube, vacated = translate_range(cube, cfg, dr, [t.r for t in targets],
                                            phase_mode=p.get("phase_mode", "steering"))
            moved = np.zeros_like(blank)
            offset = -range_shift_cells(cfg, dr)
            mr = cube.shape[0]
            if abs(offset) < mr:
                moved[max(0, offset): mr - max(0, -offset)] = blank[max(0, -offset): mr - max(0, offset)]
            blank = moved | vacated
            targets = [moved_by_range(t, dr) for t in targets]
        elif op.variant == "translate_angle":
            dth = float(p["dtheta"])
            cube, vacated = translate_angle(cube, cfg, dth, [t.r for t in targets], [t.theta for t in targets], gain)
            blank |= vacated
            targets = [replace(t, theta=t.theta + dth) for t in targets]
        elif op.variant == "interpolate":
            cube = interpolate_blanks(cube, blank, gen)
            blank = np.zeros_like(blank)
        elif op.variant == "mix":
            key = p.get("other")
            if others is None or key not in others:
                raise ConfigError(f"mix needs the cube {key!r}")
            cube = mix(cube, others[key])
    return cube, targets
