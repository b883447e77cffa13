"""Heatmap rendering to binary PPM (P6)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError

COLORMAPS = ("gray", "jet")


def to_db(x: np.ndarray, floor_db: float = -60.0) -> np.ndarray:
    """Power in dB relative to the peak, clipped at ``floor_db``. All-zero input maps to the floor."""
    p = np.abs(np.asarray(x)) ** 2
    peak = p.max() if p.size else 0.0
    if peak <= 0:
        return np.full(p.shape, float(floor_db))
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(p / peak)
    return np.maximum(db, floor_db)


def _jet(u: np.ndarray) -> np.ndarray:
    r = np.clip(1.5 - np.abs(4 * u - 3), 0, 1)
    g = np.clip(1.5 - np.abs(4 * u - 2), 0, 1)
    b = np.clip(1.5 - np.abs(4 * u - 1), 0, 1)
    return np.stack([r, g, b], axis=-1)


def colorize(image: np.ndarray, colormap: str = "jet", floor_db: float = -60.0) -> np.ndarray:
    """Map a 2-D magnitude image to ``uint8 [rows, cols, 3]``."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ShapeError(f"render needs a 2-D image, got {image.shape}")
    if floor_db >= 0:
        raise ConfigError("dB floor must be negative")
    u = 1 - to_db(image, floor_db) / floor_db
    if colormap == "gray":
        rgb = np.repeat(u[..., None], 3, axis=-1)
    elif colormap == "jet":
        rgb = _jet(u)
    else:
        raise ConfigError(f"colormap must be one of {COLORMAPS}")
    return np.round(rgb * 255).astype(np.uint8)


def ppm_bytes(rgb: np.ndarray) -> bytes:
    rows, cols, _ = rgb.shape
    return f"P6\n{cols} {rows}\n255\n".encode("ascii") + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def write_ppm(path: str | Path, image: np.ndarray, colormap: str = "jet", floor_db: float = -60.0) -> None:
    # row 0 is the nearest range bin; flip so near range sits at the bottom
    Path(path).write_bytes(ppm_bytes(colorize(image, colormap, floor_db)[::-1]))
