"""FMCW radar cube synthesis and processing, radar-aware augmentation,
center-point labels and loss, detection evaluation and CNN complexity."""
from .errors import ConfigError, ContainerError, DomainError, RadarCubeError, ShapeError
from .kernels import BACKEND
from .radar_model import CLASSES, PointTarget, RadarConfig, RawFrame, Scene, TargetClass, synthesize_frame
from .pipeline import CfarParams, ProcessedFrame, ProcessingOptions, process_frame, process_sequence
from .rcube import read_rcube, write_rcube

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CLASSES",
    "CfarParams",
    "ConfigError",
    "ContainerError",
    "DomainError",
    "PointTarget",
    "ProcessedFrame",
    "ProcessingOptions",
    "RadarConfig",
    "RadarCubeError",
    "RawFrame",
    "Scene",
    "ShapeError",
    "TargetClass",
    "process_frame",
    "process_sequence",
    "read_rcube",
    "synthesize_frame",
    "write_rcube",
]
