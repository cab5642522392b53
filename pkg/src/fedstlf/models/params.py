"""ParameterSet: the ordered, named weight bundle exchanged between clients and server.

Binary layout (``FCP1``)::

    b"FCP1"
    repeated per layer:
        u32 name_len | name (UTF-8) | u32 rank | u32 dims[rank] | f64 values[prod(dims)]

All integers and floats are little-endian.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

MAGIC = b"FCP1"
_U32 = struct.Struct("<I")


class ParameterTransportError(ValueError):
    pass


class ParameterSet:
    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[str, np.ndarray]] = ()):
        self._entries: list[tuple[str, np.ndarray]] = []
        seen = set()
        for name, arr in entries:
            if name in seen:
                raise ParameterTransportError(f"duplicate layer name {name!r}")
            seen.add(name)
            self._entries.append((name, np.array(arr, dtype=np.float64, copy=True)))

    def __iter__(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, name: str) -> np.ndarray:
        for n, a in self._entries:
            if n == name:
                return a
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self._entries]

    def manifest(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(n, a.shape) for n, a in self._entries]

    @property
    def size(self) -> int:
        return sum(a.size for _, a in self._entries)

    def arrays(self) -> list[np.ndarray]:
        return [a for _, a in self._entries]

    def copy(self) -> "ParameterSet":
        return ParameterSet(self._entries)

    def flat(self) -> np.ndarray:
        if not self._entries:
            return np.zeros(0)
        return np.concatenate([a.reshape(-1) for _, a in self._entries])

    def bitwise_equal(self, other: "ParameterSet") -> bool:
        if self.manifest() != other.manifest():
            return False
        return all(a.tobytes() == b.tobytes() for (_, a), (_, b) in zip(self, other))

    def check_manifest(self, expected: list[tuple[str, tuple[int, ...]]]) -> None:
        mine = self.manifest()
        for i, want in enumerate(expected):
            if i >= len(mine):
                raise ParameterTransportError(f"missing layer {want[0]!r} (expected shape {want[1]})")
            if mine[i] != want:
                raise ParameterTransportError(
                    f"layer {i}: got {mine[i][0]!r} {mine[i][1]}, expected {want[0]!r} {want[1]}")
        if len(mine) > len(expected):
            raise ParameterTransportError(f"unexpected extra layer {mine[len(expected)][0]!r}")

    def to_bytes(self) -> bytes:
        parts = [MAGIC]
        for name, arr in self._entries:
            raw = name.encode("utf-8")
            parts.append(_U32.pack(len(raw)))
            parts.append(raw)
            parts.append(_U32.pack(arr.ndim))
            parts.extend(_U32.pack(d) for d in arr.shape)
            parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ParameterSet":
        if blob[:4] != MAGIC:
            raise ParameterTransportError(f"bad magic {blob[:4]!r}")
        pos, end = 4, len(blob)
        entries = []

        def u32():
            nonlocal pos
            if pos + 4 > end:
                raise ParameterTransportError("truncated parameter stream")
            (v,) = _U32.unpack_from(blob, pos)
            pos += 4
            return v

        while pos < end:
            n = u32()
            name = blob[pos:pos + n].decode("utf-8")
            pos += n
            rank = u32()
            dims = tuple(u32() for _ in range(rank))
            count = int(np.prod(dims, dtype=np.int64)) if dims else 1
            nbytes = 8 * count
            if pos + nbytes > end:
                raise ParameterTransportError(f"truncated values for layer {name!r}")
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).reshape(dims)
            pos += nbytes
            entries.append((name, arr.astype(np.float64)))
        return cls(entries)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ParameterSet":
        return cls.from_bytes(Path(path).read_bytes())

    def __repr__(self) -> str:
        return f"ParameterSet({len(self)} layers, {self.size} values)"
