"""Flat binary records for noise realizations, gauge fields and frames.

Layout (all little-endian)::

    offset  size  field
    0       4     magic  b"NLSW"
    4       2     version (uint16, currently 1)
    6       2     kind    (uint16: 1 noise, 2 gauge, 3 frames)
    8       4     size    (uint32: K for noise, N otherwise)
    12      8     seed    (uint64)
    20      8     epsilon (float64)
    28      8     aux     (float64: C_eps for gauge, noise amplitude otherwise)
    36      4     planes  (uint32)
    40      ...   payload: ``planes`` row-major float64 planes, then for
                  kind 3 one float64 time per frame

Plane contents per kind:

* noise:  side ``2K+1``; plane 0 = Re g, plane 1 = Im g, index ``[n1+K, n2+K]``
* gauge:  side N; Y, dY/dx1, dY/dx2, wick square, xi
* frames: side N; Re/Im pairs, one pair per frame
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .noise import GaugeData, NoiseRealization
from .spectral import GridField

__all__ = [
    "MAGIC",
    "VERSION",
    "noise_to_bytes",
    "noise_from_bytes",
    "gauge_to_bytes",
    "gauge_from_bytes",
    "frames_to_bytes",
    "frames_from_bytes",
    "write_record",
    "read_record",
    "checksum",
]

MAGIC = b"NLSW"
VERSION = 1
KIND_NOISE, KIND_GAUGE, KIND_FRAMES = 1, 2, 3
_HEADER = struct.Struct("<4sHHIQddI")


def _pack(kind, size, seed, epsilon, aux, planes: np.ndarray, tail: np.ndarray | None = None) -> bytes:
    head = _HEADER.pack(MAGIC, VERSION, kind, size, seed, epsilon, aux, planes.shape[0])
    body = np.ascontiguousarray(planes, dtype="<f8").tobytes()
    if tail is not None:
        body += np.ascontiguousarray(tail, dtype="<f8").tobytes()
    return head + body


def _unpack(data: bytes, expect_kind: int):
    if len(data) < _HEADER.size:
        raise ValueError("record shorter than its header")
    magic, version, kind, size, seed, eps, aux, nplanes = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported record version {version}")
    if kind != expect_kind:
        raise ValueError(f"record kind {kind}, expected {expect_kind}")
    side = 2 * size + 1 if kind == KIND_NOISE else size
    n = nplanes * side * side
    payload = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    tail_len = nplanes // 2 if kind == KIND_FRAMES else 0
    if payload.size != n + tail_len:
        raise ValueError(f"payload has {payload.size} values, header implies {n + tail_len}")
    planes = payload[:n].reshape(nplanes, side, side).astype(float)
    return size, seed, eps, aux, planes, payload[n:].astype(float)


def noise_to_bytes(noise: NoiseRealization) -> bytes:
    planes = np.stack([noise.coeffs.real, noise.coeffs.imag])
    return _pack(KIND_NOISE, noise.K, noise.seed, 0.0, 1.0, planes)


def noise_from_bytes(data: bytes) -> NoiseRealization:
    K, seed, _, _, planes, _ = _unpack(data, KIND_NOISE)
    coeffs = planes[0] + 1j * planes[1]
    coeffs.setflags(write=False)
    return NoiseRealization(int(seed), int(K), coeffs)


def gauge_to_bytes(gauge: GaugeData, seed: int = 0) -> bytes:
    planes = np.stack([gauge.Y.values, gauge.grad_Y[0].values, gauge.grad_Y[1].values,
                       gauge.wick_square.values, gauge.xi.values])
    return _pack(KIND_GAUGE, gauge.N, seed, gauge.epsilon, gauge.C_eps, planes)


def gauge_from_bytes(data: bytes) -> GaugeData:
    N, _, eps, C, planes, _ = _unpack(data, KIND_GAUGE)
    Y, d1, d2, wick, xi = (GridField(p) for p in planes)
    return GaugeData(Y, (d1, d2), wick, float(C), float(eps), xi)


def frames_to_bytes(frames, times, seed: int = 0, epsilon: float = 0.0) -> bytes:
    planes = []
    for f in frames:
        vals = np.asarray(f.values, dtype=complex)
        planes += [vals.real, vals.imag]
    N = frames[0].N
    return _pack(KIND_FRAMES, N, seed, epsilon, 0.0, np.stack(planes), np.asarray(times, float))


def frames_from_bytes(data: bytes) -> tuple[list[GridField], np.ndarray]:
    _, _, _, _, planes, times = _unpack(data, KIND_FRAMES)
    frames = [GridField(planes[2 * i] + 1j * planes[2 * i + 1]) for i in range(len(planes) // 2)]
    return frames, times


def write_record(path, data: bytes) -> None:
    """Write atomically: temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def read_record(path) -> bytes:
    return Path(path).read_bytes()


def checksum(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
