"""RCUBE binary tensor container.

Layout (little-endian)::

    b"RCUB" | u32 version | u32 dtype | u32 rank | u32 dims[rank]
    | u32 tag length | tag (UTF-8) | payload

``dtype`` 0 stores complex values as interleaved float32 (re, im) pairs,
1 stores float32. The payload is row-major with the last axis fastest.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContainerError

MAGIC = b"RCUB"
VERSION = 1
COMPLEX_F32 = 0
REAL_F32 = 1


@dataclass
class Rcube:
    data: np.ndarray
    tag: str = ""


def encode(data: np.ndarray, tag: str = "") -> bytes:
    data = np.asarray(data)
    if np.iscomplexobj(data):
        flag, payload = COMPLEX_F32, np.ascontiguousarray(data, dtype="<c8")
    else:
        flag, payload = REAL_F32, np.ascontiguousarray(data, dtype="<f4")
    if data.ndim == 0:
        raise ContainerError("cannot store a 0-d tensor")
    tag_bytes = tag.encode("utf-8")
    head = struct.pack(f"<4sIII{data.ndim}I", MAGIC, VERSION, flag, data.ndim, *data.shape)
    return head + struct.pack("<I", len(tag_bytes)) + tag_bytes + payload.tobytes()


def decode(buf: bytes) -> Rcube:
    try:
        magic, version, flag, rank = struct.unpack_from("<4sIII", buf, 0)
        if magic != MAGIC:
            raise ContainerError("not an RCUBE file (bad magic)")
        if version != VERSION:
            raise ContainerError(f"unsupported RCUBE version {version}")
        if flag not in (COMPLEX_F32, REAL_F32):
            raise ContainerError(f"unknown dtype flag {flag}")
        pos = 16
        dims = struct.unpack_from(f"<{rank}I", buf, pos)
        pos += 4 * rank
        (tag_len,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        tag = buf[pos:pos + tag_len].decode("utf-8")
        pos += tag_len
    except (struct.error, UnicodeDecodeError) as exc:
        raise ContainerError(f"truncated or corrupt RCUBE header: {exc}") from None
    dtype = np.dtype("<c8") if flag == COMPLEX_F32 else np.dtype("<f4")
    need = math.prod(dims) * dtype.itemsize
    if len(buf) - pos != need:
        raise ContainerError(f"payload holds {len(buf) - pos} bytes, dims {dims} need {need}")
    data = np.frombuffer(buf, dtype=dtype, offset=pos).reshape(dims).copy()
    return Rcube(data, tag)


def write_rcube(path: str | Path, data: np.ndarray, tag: str = "") -> None:
    Path(path).write_bytes(encode(data, tag))


def read_rcube(path: str | Path) -> Rcube:
    return decode(Path(path).read_bytes())
