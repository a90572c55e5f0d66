"""Minimal NIfTI-1 single-file reader/writer plus a raw f32 sidecar format.

Only the little-endian single-file flavor is handled: 348-byte header,
magic "n+1\\0", datatypes u8 (2), i16 (4), f32 (16). Everything is
converted to float32 on load with scl_slope/scl_inter applied.
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, IoError, TruncatedFile, UnsupportedDatatype
from .volume import VoxelGrid

HEADER_SIZE = 348
DATA_OFFSET = 352

DT_UINT8 = 2
DT_INT16 = 4
DT_FLOAT32 = 16

_DTYPES = {
    DT_UINT8: np.dtype("<u1"),
    DT_INT16: np.dtype("<i2"),
    DT_FLOAT32: np.dtype("<f4"),
}
_BITPIX = {DT_UINT8: 8, DT_INT16: 16, DT_FLOAT32: 32}


@dataclass
class NiftiHeader:
    magic: bytes
    datatype: int
    dims: tuple[int, ...]
    pixdim: tuple[float, ...]
    scl_slope: float
    scl_inter: float
    vox_offset: float

    @classmethod
    def parse(cls, raw: bytes) -> "NiftiHeader":
        if len(raw) < HEADER_SIZE:
            raise TruncatedFile(f"header is {len(raw)} bytes, need {HEADER_SIZE}")
        magic = raw[344:348]
        if magic != b"n+1\x00":
            raise FormatError(f"bad magic {magic!r}, expected b'n+1\\x00'")
        ndim = struct.unpack_from("<h", raw, 40)[0]
        dim = struct.unpack_from("<7h", raw, 42)
        if not 1 <= ndim <= 7:
            raise FormatError(f"dim[0] = {ndim} outside 1..7")
        datatype = struct.unpack_from("<h", raw, 70)[0]
        if datatype not in _DTYPES:
            raise UnsupportedDatatype(f"datatype code {datatype} not supported")
        pixdim = struct.unpack_from("<8f", raw, 76)
        vox_offset = struct.unpack_from("<f", raw, 108)[0]
        if vox_offset < DATA_OFFSET:
            raise FormatError(f"vox_offset {vox_offset} < {DATA_OFFSET}")
        scl_slope = struct.unpack_from("<f", raw, 112)[0]
        scl_inter = struct.unpack_from("<f", raw, 116)[0]
        return cls(magic, datatype, dim[:ndim], pixdim[1:ndim + 1],
                   scl_slope, scl_inter, vox_offset)

    def pack(self) -> bytes:
        raw = bytearray(HEADER_SIZE)
        struct.pack_into("<i", raw, 0, HEADER_SIZE)  # sizeof_hdr
        ndim = len(self.dims)
        struct.pack_into("<h", raw, 40, ndim)
        struct.pack_into(f"<{ndim}h", raw, 42, *self.dims)
        for i in range(ndim, 7):
            struct.pack_into("<h", raw, 42 + 2 * i, 1)
        struct.pack_into("<h", raw, 70, self.datatype)
        struct.pack_into("<h", raw, 72, _BITPIX[self.datatype])
        struct.pack_into("<f", raw, 76, 1.0)  # pixdim[0] (qfac)
        for i, p in enumerate(self.pixdim[:7]):
            struct.pack_into("<f", raw, 80 + 4 * i, p)
        struct.pack_into("<f", raw, 108, self.vox_offset)
        struct.pack_into("<f", raw, 112, self.scl_slope)
        struct.pack_into("<f", raw, 116, self.scl_inter)
        raw[344:348] = b"n+1\x00"
        return bytes(raw)


def _decode_nifti(raw: bytes) -> VoxelGrid:
    hdr = NiftiHeader.parse(raw)
    dims = tuple(hdr.dims[:3]) + (1,) * (3 - min(len(hdr.dims), 3))
    if any(d < 1 for d in dims):
        raise FormatError(f"non-positive dims {dims}")
    dtype = _DTYPES[hdr.datatype]
    count = int(np.prod(dims))
    start = int(hdr.vox_offset)
    payload = raw[start:start + count * dtype.itemsize]
    if len(payload) < count * dtype.itemsize:
        raise TruncatedFile(
            f"payload has {len(payload)} bytes, need {count * dtype.itemsize}"
        )
    stored = np.frombuffer(payload, dtype=dtype).astype(np.float32)
    slope = hdr.scl_slope if hdr.scl_slope != 0 else 1.0
    data = slope * stored + hdr.scl_inter
    spacing = tuple(hdr.pixdim[:3]) + (1.0,) * (3 - min(len(hdr.pixdim), 3))
    # NIfTI stores x-fastest, which matches the canonical layout directly.
    return VoxelGrid(dims, data.reshape(dims, order="F"), spacing)


def load_volume(path: str | Path) -> VoxelGrid:
    """Load .nii, .nii.gz, or .raw (+ .dims sidecar) into a float32 VoxelGrid."""
    path = Path(path)
    name = path.name.lower()
    try:
        if name.endswith(".nii.gz"):
            with gzip.open(path, "rb") as f:
                return _decode_nifti(f.read())
        if name.endswith(".nii"):
            return _decode_nifti(path.read_bytes())
        if name.endswith(".raw"):
            return _load_raw(path)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    raise FormatError(f"unrecognized extension on {path}")


def _load_raw(path: Path) -> VoxelGrid:
    sidecar = path.with_suffix(".dims")
    if not sidecar.exists():
        raise FormatError(f"missing sidecar {sidecar}")
    parts = sidecar.read_text().split()
    if len(parts) != 3:
        raise FormatError(f"sidecar {sidecar} must contain 'x y z'")
    dims = tuple(int(p) for p in parts)
    payload = path.read_bytes()
    count = int(np.prod(dims))
    if len(payload) < count * 4:
        raise TruncatedFile(f"raw payload {len(payload)} bytes, need {count * 4}")
    data = np.frombuffer(payload[:count * 4], dtype="<f4")
    return VoxelGrid(dims, data.reshape(dims, order="F"))


def save_volume(grid: VoxelGrid, path: str | Path, datatype: int = DT_FLOAT32) -> None:
    """Write a volume; format chosen by extension as in load_volume.

    NIfTI output uses slope 1 / inter 0 so load(save(g)) is bit-exact for f32.
    """
    path = Path(path)
    name = path.name.lower()
    try:
        if name.endswith(".raw"):
            path.write_bytes(grid.ravel().astype("<f4").tobytes())
            path.with_suffix(".dims").write_text(" ".join(str(d) for d in grid.dims))
            return
        hdr = NiftiHeader(
            magic=b"n+1\x00",
            datatype=datatype,
            dims=grid.dims,
            pixdim=grid.spacing,
            scl_slope=1.0,
            scl_inter=0.0,
            vox_offset=float(DATA_OFFSET),
        )
        out_dtype = _DTYPES[datatype]
        payload = grid.ravel().astype(out_dtype).tobytes()
        blob = hdr.pack() + b"\x00" * (DATA_OFFSET - HEADER_SIZE) + payload
        if name.endswith(".nii.gz"):
            # mtime pinned so identical volumes produce identical bytes
            with gzip.GzipFile(path, "wb", mtime=0) as f:
                f.write(blob)
        elif name.endswith(".nii"):
            path.write_bytes(blob)
        else:
            raise FormatError(f"unrecognized extension on {path}")
    except OSError as exc:
        raise IoError(str(exc)) from exc
