"""FLOPs and memory of convolutional layer stacks.

Per layer with output feature-map size ``I`` and kernel size ``K`` (both
already multiplied out over their axes)::

    flops    = I * K * C_in * C_out
    params   = K * C_in * C_out
    features = I * C_out

Pooling and fully-connected layers are not modelled.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from .errors import ConfigError

KINDS = ("conv", "transposed_conv")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    n: int
    I: tuple[int, ...]
    K: tuple[int, ...]
    c_in: int
    c_out: int
    dilation: tuple[int, ...] | None = None
    stride: tuple[int, ...] | None = None
    name: str = ""
    new_branch: bool = False
    group: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"layer kind must be one of {KINDS}")
        if self.n not in (1, 2, 3, 4):
            raise ConfigError("layer dimensionality n must be 1..4")
        object.__setattr__(self, "I", _counts(self.I, "I"))
        object.__setattr__(self, "K", _counts(self.K, "K"))
        if len(self.K) != self.n:
            raise ConfigError(f"kernel {self.K} does not have n={self.n} axes")
        if self.c_in < 1 or self.c_out < 1:
            raise ConfigError("channel counts must be >= 1")

    @property
    def feature_size(self) -> int:
        return math.prod(self.I)

    @property
    def kernel_size(self) -> int:
        return math.prod(self.K)

    @property
    def flops(self) -> int:
        return self.feature_size * self.kernel_size * self.c_in * self.c_out

    @property
    def params(self) -> int:
        return self.kernel_size * self.c_in * self.c_out

    @property
    def features(self) -> int:
        return self.feature_size * self.c_out

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "LayerSpec":
        try:
            return cls(
                kind=doc["kind"],
                n=int(doc["n"]),
                I=tuple(doc["I"]) if isinstance(doc["I"], list) else (doc["I"],),
                K=tuple(doc["K"]) if isinstance(doc["K"], list) else (doc["K"],),
                c_in=int(doc["c_in"]),
                c_out=int(doc["c_out"]),
                dilation=tuple(doc["dilation"]) if doc.get("dilation") else None,
                stride=tuple(doc["stride"]) if doc.get("stride") else None,
                name=doc.get("name", ""),
                new_branch=bool(doc.get("new_branch", False)),
                group=doc.get("group", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad layer record {doc!r}: {exc}") from None


def _counts(values, label) -> tuple[int, ...]:
    out = tuple(int(v) for v in values)
    if not out or min(out) < 1:
        raise ConfigError(f"{label} entries must be >= 1")
    return out


@dataclass(frozen=True)
class ModelSpec:
    name: str
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if not nxt.new_branch and prev.c_out != nxt.c_in:
                raise ConfigError(f"{self.name}: layer {nxt.name or nxt} takes {nxt.c_in} channels, "
                                  f"previous layer gives {prev.c_out}")

    def __add__(self, other: "ModelSpec") -> "ModelSpec":
        first = other.layers[:1]
        if first:
            first = (LayerSpec(**{**first[0].__dict__, "new_branch": True}),)
        return ModelSpec(f"{self.name}+{other.name}", self.layers + first + other.layers[1:])

    @property
    def layer_counts(self) -> tuple[int, int]:
        """``(conv, transposed conv)`` layers; branches sharing a group count once."""
        seen = set()
        counts = {k: 0 for k in KINDS}
        for i, l in enumerate(self.layers):
            key = (l.kind, l.group) if l.group else (l.kind, i)
            if key not in seen:
                seen.add(key)
                counts[l.kind] += 1
        return counts["conv"], counts["transposed_conv"]

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ModelSpec":
        if not isinstance(doc, dict) or "layers" not in doc:
            raise ConfigError('model document needs "name" and "layers"')
        return cls(doc.get("name", "model"), tuple(LayerSpec.from_dict(l) for l in doc["layers"]))


def flops(model: ModelSpec) -> int:
    return sum(l.flops for l in model.layers)


def space(model: ModelSpec) -> tuple[int, int]:
    """``(parameter count, feature-map cells)``."""
    return sum(l.params for l in model.layers), sum(l.features for l in model.layers)


def compare(models: Sequence[ModelSpec]) -> dict[tuple[str, str], dict[str, float]]:
    """Pairwise ratios ``a / b`` of FLOPs, parameters and feature-map cells."""
    if len(models) < 2:
        raise ConfigError("compare needs at least two models")
    stats = {m.name: (flops(m), *space(m)) for m in models}
    table = {}
    for a, b in itertools.permutations(stats, 2):
        fa, pa, sa = stats[a]
        fb, pb, sb = stats[b]
        table[(a, b)] = {"flops": fa / fb, "params": pa / pb, "features": sa / sb}
    return table


def bundled_models() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("radarcube.models").iterdir() if p.name.endswith(".json"))


def load_model(source: str | Path) -> ModelSpec:
    """Load a model from a JSON path or a bundled name such as ``ramp_cnn``."""
    path = Path(source)
    try:
        if path.exists():
            doc = json.loads(path.read_text())
        else:
            name = str(source)
            name = name[:-5] if name.endswith(".json") else name
            doc = json.loads(resources.files("radarcube.models").joinpath(f"{name}.json").read_text())
    except FileNotFoundError:
        raise ConfigError(f"no model file or bundled model named {source!r}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model {source}: {exc}") from None
    return ModelSpec.from_dict(doc)
