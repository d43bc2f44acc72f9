"""Bit-exact serialization of frame filter parameters.

Wire layout per frame, MSB-first within each byte, final byte zero-padded:

    frame_flag                                u(1)
    if frame_flag, per plane (Y, Cb, Cr):
      enable                                  u(1)
      if enable:
        bo_only                               u(1)
        max_band_log2                         u(3) if bo_only else u(2)
        if not bo_only:
          quant_step_idx                      u(2)
          filter_shape_idx                    u(3)
          edge_clf                            u(1)
        offset index per (d0, d1, band),      tu, alphabet position,
          d0 outer, d1 middle, band inner       <= 7 bits each
        unit flag per grid cell, raster       u(1)

The offset loop covers d0, d1 in [0, intervals) and band in [0, num_bands),
writing the LUT entry at packed index (band << 4) | (d0 << 2) | d1; in
band-only mode intervals is 1 so only the band stride is populated. Unit
flag grids have ceil(height/256) x ceil(width/256) cells regardless of
plane (chroma units are 128x128 chroma samples).

The .ccso file container is: magic "CCSO", one version byte (1), big-endian
u16 luma width and height, one bit-depth byte, then one record per frame: a
big-endian u32 frame index followed by that frame's zero-padded payload.
Payloads self-delimit given the geometry, so records carry no length field.
"""

from __future__ import annotations

import dataclasses
import struct

import numpy as np

from .constants import (
    MAX_BAND_LOG2_BAND_ONLY,
    MAX_BAND_LOG2_COMBINED,
    MAX_TU_INDEX,
    OFFSET_ALPHABET,
    QUANT_STEP_SIZES,
    FILTER_SHAPE_TAPS,
    interval_count,
    tu_code_length,
)
from .filtering import unit_grid_shape

MAGIC = b"CCSO"
CONTAINER_VERSION = 1
HEADER_LEN = 10  # magic + version + width + height + bit depth

_OFFSET_TO_INDEX = {v: i for i, v in enumerate(OFFSET_ALPHABET)}


class ParseError(ValueError):
    """Malformed parameter buffer; bit_offset points at the failing read."""

    def __init__(self, message: str, bit_offset: int):
        super().__init__(f"{message} (bit {bit_offset})")
        self.message = message
        self.bit_offset = bit_offset


class BitWriter:
    def __init__(self):
        self._buf = bytearray()
        self._nbits = 0

    @property
    def bit_count(self) -> int:
        return self._nbits

    def write_bit(self, b: int) -> None:
        if self._nbits % 8 == 0:
            self._buf.append(0)
        if b:
            self._buf[-1] |= 0x80 >> (self._nbits % 8)
        self._nbits += 1

    def write_bits(self, value: int, n: int) -> None:
        if not 0 <= value < (1 << n):
            raise ValueError(f"value {value} does not fit in {n} bits")
        for shift in range(n - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def to_bytes(self) -> bytes:
        return bytes(self._buf)


class BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    @property
    def bit_pos(self) -> int:
        return self._pos

    @property
    def bytes_consumed(self) -> int:
        return (self._pos + 7) // 8

    def read_bit(self) -> int:
        byte = self._pos >> 3
        if byte >= len(self._data):
            raise ParseError("read past end of buffer", self._pos)
        bit = (self._data[byte] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, n: int) -> int:
        v = 0
        for _ in range(n):
            v = (v << 1) | self.read_bit()
        return v


def write_tu(writer: BitWriter, idx: int) -> None:
    """Truncated-unary code: idx ones then a zero, terminator dropped at 7."""
    if not 0 <= idx <= MAX_TU_INDEX:
        raise ValueError(f"tu index out of range: {idx}")
    for _ in range(idx):
        writer.write_bit(1)
    if idx < MAX_TU_INDEX:
        writer.write_bit(0)


def read_tu(reader: BitReader) -> int:
    idx = 0
    while idx < MAX_TU_INDEX and reader.read_bit():
        idx += 1
    return idx


@dataclasses.dataclass(eq=False)
class PlaneParams:
    """Filter parameters of one color plane, the unit of per-plane syntax.

    `lut` spans num_bands << 4 int32 slots (zeros where no class can land);
    `unit_flags` is the boolean on/off grid. Both must be present when
    `enabled`; neither is serialized when not.
    """

    enabled: bool = False
    bo_only: bool = False
    max_band_log2: int = 0
    quant_step_idx: int = 0
    filter_shape_idx: int = 0
    edge_clf: int = 0
    lut: np.ndarray | None = None
    unit_flags: np.ndarray | None = None

    @property
    def num_bands(self) -> int:
        return 1 << self.max_band_log2

    @property
    def intervals(self) -> int:
        return 1 if self.bo_only else interval_count(self.edge_clf)

    def serialized_class_indices(self) -> list[int]:
        """Packed LUT indices in signaling order (d0 outer, band inner)."""
        return [
            (band << 4) | (d0 << 2) | d1
            for d0 in range(self.intervals)
            for d1 in range(self.intervals)
            for band in range(self.num_bands)
        ]

    def validate(self, grid_shape: tuple[int, int]) -> None:
        if not self.enabled:
            return
        limit = MAX_BAND_LOG2_BAND_ONLY if self.bo_only else MAX_BAND_LOG2_COMBINED
        if not 0 <= self.max_band_log2 <= limit:
            raise ValueError(f"max_band_log2 {self.max_band_log2} out of range 0..{limit}")
        if not 0 <= self.quant_step_idx < len(QUANT_STEP_SIZES):
            raise ValueError(f"quant_step_idx out of range: {self.quant_step_idx}")
        if not 0 <= self.filter_shape_idx < len(FILTER_SHAPE_TAPS):
            raise ValueError(f"filter_shape_idx out of range: {self.filter_shape_idx}")
        if self.edge_clf not in (0, 1):
            raise ValueError(f"edge_clf must be 0 or 1: {self.edge_clf}")
        if self.lut is None or len(self.lut) != self.num_bands << 4:
            raise ValueError(
                f"LUT must span {self.num_bands << 4} slots for {self.num_bands} bands"
            )
        serialized = set(self.serialized_class_indices())
        for i, v in enumerate(int(v) for v in self.lut):
            if v not in _OFFSET_TO_INDEX:
                raise ValueError(f"LUT value {v} not in the offset alphabet")
            if v != 0 and i not in serialized:
                raise ValueError(f"unreachable LUT slot {i} holds nonzero offset {v}")
        if self.unit_flags is None or self.unit_flags.shape != grid_shape:
            raise ValueError(
                f"unit flag grid must be {grid_shape}, got "
                f"{None if self.unit_flags is None else self.unit_flags.shape}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlaneParams):
            return NotImplemented
        if self.enabled != other.enabled:
            return False
        if not self.enabled:
            return True
        same_mode = self.bo_only == other.bo_only and self.max_band_log2 == other.max_band_log2
        if not same_mode:
            return False
        if not self.bo_only:
            if (
                self.quant_step_idx != other.quant_step_idx
                or self.filter_shape_idx != other.filter_shape_idx
                or self.edge_clf != other.edge_clf
            ):
                return False
        return np.array_equal(self.lut, other.lut) and np.array_equal(
            self.unit_flags, other.unit_flags
        )


@dataclasses.dataclass(eq=False)
class FrameParams:
    """Per-frame filter parameters: one PlaneParams per Y, Cb, Cr."""

    planes: list[PlaneParams] = dataclasses.field(
        default_factory=lambda: [PlaneParams(), PlaneParams(), PlaneParams()]
    )

    @property
    def frame_flag(self) -> bool:
        return any(p.enabled for p in self.planes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameParams):
            return NotImplemented
        return self.planes == other.planes


def _write_plane(writer: BitWriter, p: PlaneParams) -> None:
    writer.write_bit(int(p.enabled))
    if not p.enabled:
        return
    writer.write_bit(int(p.bo_only))
    writer.write_bits(p.max_band_log2, 3 if p.bo_only else 2)
    if not p.bo_only:
        writer.write_bits(p.quant_step_idx, 2)
        writer.write_bits(p.filter_shape_idx, 3)
        writer.write_bit(p.edge_clf)
    for idx in p.serialized_class_indices():
        write_tu(writer, _OFFSET_TO_INDEX[int(p.lut[idx])])
    for flag in p.unit_flags.reshape(-1):
        writer.write_bit(int(flag))


def write_params_to(writer: BitWriter, params: FrameParams, width: int, height: int) -> None:
    grid = unit_grid_shape(width, height)
    if len(params.planes) != 3:
        raise ValueError("frame params must carry exactly three planes")
    for p in params.planes:
        p.validate(grid)
    writer.write_bit(int(params.frame_flag))
    if params.frame_flag:
        for p in params.planes:
            _write_plane(writer, p)


def write_params(params: FrameParams, width: int, height: int) -> bytes:
    """Serialize one frame's parameters; final byte zero-padded."""
    writer = BitWriter()
    write_params_to(writer, params, width, height)
    return writer.to_bytes()


def _read_plane(reader: BitReader, grid_shape: tuple[int, int]) -> PlaneParams:
    p = PlaneParams()
    p.enabled = bool(reader.read_bit())
    if not p.enabled:
        return p
    p.bo_only = bool(reader.read_bit())
    p.max_band_log2 = reader.read_bits(3 if p.bo_only else 2)
    if not p.bo_only:
        p.quant_step_idx = reader.read_bits(2)
        pos = reader.bit_pos
        p.filter_shape_idx = reader.read_bits(3)
        if p.filter_shape_idx >= len(FILTER_SHAPE_TAPS):
            raise ParseError(f"filter_shape_idx {p.filter_shape_idx} out of range", pos)
        p.edge_clf = reader.read_bit()
    p.lut = np.zeros(p.num_bands << 4, dtype=np.int32)
    for idx in p.serialized_class_indices():
        p.lut[idx] = OFFSET_ALPHABET[read_tu(reader)]
    n_units = grid_shape[0] * grid_shape[1]
    flags = np.fromiter((reader.read_bit() for _ in range(n_units)), dtype=bool, count=n_units)
    p.unit_flags = flags.reshape(grid_shape)
    return p


def read_params_from(reader: BitReader, width: int, height: int) -> FrameParams:
    grid = unit_grid_shape(width, height)
    params = FrameParams()
    if reader.read_bit():
        params.planes = [_read_plane(reader, grid) for _ in range(3)]
    return params


def read_params(data: bytes, width: int, height: int) -> FrameParams:
    """Parse one frame's parameters from the start of `data`.

    Raises ParseError (with the failing bit offset) on truncated or
    out-of-range input; trailing bytes beyond the payload are ignored.
    """
    return read_params_from(BitReader(data), width, height)


def plane_bit_cost(p: PlaneParams, n_units: int) -> int:
    """Exact serialized size of one plane section, in bits."""
    if not p.enabled:
        return 1
    bits = 2  # enable + bo_only
    bits += 3 if p.bo_only else 2 + 2 + 3 + 1
    bits += sum(tu_code_length(_OFFSET_TO_INDEX[int(p.lut[i])]) for i in p.serialized_class_indices())
    return bits + n_units


def params_bit_cost(params: FrameParams, width: int, height: int) -> int:
    """Exact pre-padding length of write_params output, in bits."""
    if not params.frame_flag:
        return 1
    rows, cols = unit_grid_shape(width, height)
    return 1 + sum(plane_bit_cost(p, rows * cols) for p in params.planes)


def write_params_file(
    path, width: int, height: int, bit_depth: int,
    frame_params: list[FrameParams], frame_indices: list[int] | None = None,
) -> None:
    """Write a .ccso container holding one parameter record per frame."""
    if frame_indices is None:
        frame_indices = list(range(len(frame_params)))
    if len(frame_indices) != len(frame_params):
        raise ValueError("one frame index required per parameter record")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack(">BHHB", CONTAINER_VERSION, width, height, bit_depth))
        for idx, params in zip(frame_indices, frame_params):
            f.write(struct.pack(">I", idx))
            f.write(write_params(params, width, height))


def read_params_file(path) -> tuple[int, int, int, list[tuple[int, FrameParams]]]:
    """Read a .ccso container: (width, height, bit_depth, [(frame_index, params)])."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < HEADER_LEN or data[:4] != MAGIC:
        raise ParseError("not a CCSO parameter file", 0)
    version, width, height, bit_depth = struct.unpack(">BHHB", data[4:HEADER_LEN])
    if version != CONTAINER_VERSION:
        raise ParseError(f"unsupported container version {version}", 32)
    if bit_depth not in (8, 10):
        raise ParseError(f"unsupported bit depth {bit_depth}", (HEADER_LEN - 1) * 8)
    records = []
    off = HEADER_LEN
    while off < len(data):
        if off + 4 > len(data):
            raise ParseError("truncated frame record header", off * 8)
        (frame_index,) = struct.unpack(">I", data[off : off + 4])
        off += 4
        reader = BitReader(data[off:])
        try:
            params = read_params_from(reader, width, height)
        except ParseError as e:
            raise ParseError(e.message, off * 8 + e.bit_offset) from None
        records.append((frame_index, params))
        off += reader.bytes_consumed
    return width, height, bit_depth, records
