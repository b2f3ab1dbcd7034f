"""Binary container formats for Mueller cubes and parameter planes.

Both formats are little-endian, fixed-layout, and fully specified by
their headers; round trips are bit-for-bit.

Cube container (.mmc)::

    offset  size  field
    0       4     magic "MMC1"
    4       4     format version, u32 = 1
    8       4     height (rows), u32
    12      4     width (cols), u32
    16      4     n_wavelengths, u32
    20      4     dtype code, u32 (0 = f32, 1 = f64)
    24      4     flags, u32 (bit 0 normalized, bit 1 m00 plane
                  appended, bit 2 element mask present)
    28      4*L   wavelengths in nm, f32 each, strictly increasing
    [+2]          element-mask bit word, u16 (only when flag bit 2)
    ...           matrix data: L*H*W*16 values, C order (lam, row,
                  col, i, j), in the header dtype
    ...           m00 plane: L*H*W values, same dtype (only bit 1)

Plane container (.mmp)::

    offset  size  field
    0       4     magic "MMP1"
    4       4     format version, u32 = 1
    8       4     height, u32
    12      4     width, u32
    16      4     plane kind, u32 (see PlaneKind)
    20      4     dtype code, u32 (0 = f32, 1 = f64, 2 = u8)
    24      4     wavelength in nm, f32
    28      4     reserved, u32 = 0
    32      ...   H*W values, C order (row, col)

Files must contain exactly the bytes the header implies; anything
shorter or longer raises Truncated.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import (
    BadHeaderError,
    BadMagicError,
    DimensionMismatchError,
    MissingPlaneError,
    TruncatedError,
)
from .polcore import ElementMask, LuChipmanMaps, MuellerCube
from .realizability import TOL_PHYS, scan_cube

MMC_MAGIC = b"MMC1"
MMP_MAGIC = b"MMP1"
FORMAT_VERSION = 1

FLAG_NORMALIZED = 1
FLAG_M00_PLANE = 2
FLAG_MASK = 4

_MAX_DIM = 1 << 31  # dimensions beyond this are header corruption

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("u1")}
_CODE_FOR_DTYPE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1,
                   np.dtype(np.uint8): 2}

_MMC_FIXED = struct.Struct("<4sIIIIII")
_MMP_HEADER = struct.Struct("<4sIIIIIfI")


class PlaneKind(IntEnum):
    DEPOLARIZATION = 0
    RETARDANCE = 1
    DIATTENUATION = 2
    STATUS = 3
    M00 = 4
    LABEL = 5


# file-name stems used by write_maps / read_maps
_KIND_STEMS = {
    PlaneKind.DEPOLARIZATION: "delta",
    PlaneKind.RETARDANCE: "ret",
    PlaneKind.DIATTENUATION: "diat",
    PlaneKind.STATUS: "status",
    PlaneKind.M00: "m00",
    PlaneKind.LABEL: "label",
}
_MAP_KINDS = (
    PlaneKind.DEPOLARIZATION,
    PlaneKind.RETARDANCE,
    PlaneKind.DIATTENUATION,
    PlaneKind.STATUS,
)


def _format_wavelength(lam: float) -> str:
    return f"{lam:g}"


def _cube_dtype_code(dtype: np.dtype) -> int:
    code = _CODE_FOR_DTYPE.get(np.dtype(dtype))
    if code is None or code == 2:
        raise BadHeaderError(f"cube dtype must be float32 or float64, got {dtype}")
    return code


# ---------------------------------------------------------------------------
# cube files
# ---------------------------------------------------------------------------

def write_cube(cube: MuellerCube, path: str | Path) -> None:
    """Serialize a cube; the stored dtype is the array dtype."""
    cube.validate()
    dtype_code = _cube_dtype_code(cube.data.dtype)
    dtype = _DTYPE_CODES[dtype_code]
    flags = 0
    if cube.normalized:
        flags |= FLAG_NORMALIZED
    if cube.m00_plane is not None:
        flags |= FLAG_M00_PLANE
    if cube.mask is not None:
        flags |= FLAG_MASK
    lam_f32 = np.asarray(cube.wavelengths, dtype="<f4")
    if np.any(np.diff(lam_f32) <= 0):
        raise BadHeaderError(
            "wavelengths collide after f32 rounding; cannot store"
        )
    header = _MMC_FIXED.pack(
        MMC_MAGIC,
        FORMAT_VERSION,
        cube.height,
        cube.width,
        cube.n_wavelengths,
        dtype_code,
        flags,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(lam_f32.tobytes())
        if cube.mask is not None:
            fh.write(struct.pack("<H", cube.mask.bits))
        fh.write(np.ascontiguousarray(cube.data, dtype=dtype).tobytes())
        if cube.m00_plane is not None:
            fh.write(np.ascontiguousarray(cube.m00_plane, dtype=dtype).tobytes())


def read_cube(path: str | Path) -> MuellerCube:
    """Parse a cube file; inverse of :func:`write_cube` bit-for-bit."""
    size = os.stat(path).st_size
    with open(path, "rb") as fh:
        fixed = fh.read(_MMC_FIXED.size)
        if len(fixed) < 4 or fixed[:4] != MMC_MAGIC:
            raise BadMagicError(
                f"{path}: expected magic {MMC_MAGIC!r}, got {fixed[:4]!r}"
            )
        if len(fixed) < _MMC_FIXED.size:
            raise TruncatedError(f"{path}: header cut short at {len(fixed)} bytes")
        _, version, height, width, n_lam, dtype_code, flags = _MMC_FIXED.unpack(fixed)
        if version != FORMAT_VERSION:
            raise BadHeaderError(f"{path}: unsupported format version {version}")
        if dtype_code not in (0, 1):
            raise BadHeaderError(f"{path}: unknown cube dtype code {dtype_code}")
        if min(height, width, n_lam) == 0 or max(height, width, n_lam) > _MAX_DIM:
            raise BadHeaderError(
                f"{path}: bad dimensions {n_lam}x{height}x{width}"
            )
        if flags & ~(FLAG_NORMALIZED | FLAG_M00_PLANE | FLAG_MASK):
            raise BadHeaderError(f"{path}: unknown flag bits 0x{flags:X}")
        dtype = _DTYPE_CODES[dtype_code]

        expected = _MMC_FIXED.size + 4 * n_lam
        if flags & FLAG_MASK:
            expected += 2
        n_px = n_lam * height * width
        expected += n_px * 16 * dtype.itemsize
        if flags & FLAG_M00_PLANE:
            expected += n_px * dtype.itemsize
        if size != expected:
            raise TruncatedError(
                f"{path}: file is {size} bytes, header implies {expected}"
            )

        lam = np.frombuffer(fh.read(4 * n_lam), dtype="<f4")
        wavelengths = [float(v) for v in lam]
        mask = None
        if flags & FLAG_MASK:
            (bits,) = struct.unpack("<H", fh.read(2))
            mask = ElementMask(bits)
        data = np.fromfile(fh, dtype=dtype, count=n_px * 16).reshape(
            n_lam, height, width, 4, 4
        )
        m00 = None
        if flags & FLAG_M00_PLANE:
            m00 = np.fromfile(fh, dtype=dtype, count=n_px).reshape(
                n_lam, height, width
            )
    cube = MuellerCube(
        data=data,
        wavelengths=wavelengths,
        normalized=bool(flags & FLAG_NORMALIZED),
        m00_plane=m00,
        mask=mask,
    )
    cube.validate()
    return cube


# ---------------------------------------------------------------------------
# plane files
# ---------------------------------------------------------------------------

def write_plane(
    plane: np.ndarray, kind: PlaneKind, wavelength: float, path: str | Path
) -> None:
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise DimensionMismatchError(f"plane must be 2-d, got {plane.shape}")
    code = _CODE_FOR_DTYPE.get(plane.dtype)
    if code is None:
        raise BadHeaderError(f"plane dtype {plane.dtype} not storable")
    header = _MMP_HEADER.pack(
        MMP_MAGIC,
        FORMAT_VERSION,
        plane.shape[0],
        plane.shape[1],
        int(kind),
        code,
        float(wavelength),
        0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(plane, dtype=_DTYPE_CODES[code]).tobytes())


def read_plane(path: str | Path) -> tuple[np.ndarray, PlaneKind, float]:
    """Returns (plane, kind, wavelength)."""
    size = os.stat(path).st_size
    with open(path, "rb") as fh:
        raw = fh.read(_MMP_HEADER.size)
        if len(raw) < 4 or raw[:4] != MMP_MAGIC:
            raise BadMagicError(
                f"{path}: expected magic {MMP_MAGIC!r}, got {raw[:4]!r}"
            )
        if len(raw) < _MMP_HEADER.size:
            raise TruncatedError(f"{path}: header cut short at {len(raw)} bytes")
        _, version, height, width, kind_code, dtype_code, lam, reserved = (
            _MMP_HEADER.unpack(raw)
        )
        if version != FORMAT_VERSION:
            raise BadHeaderError(f"{path}: unsupported format version {version}")
        if dtype_code not in _DTYPE_CODES:
            raise BadHeaderError(f"{path}: unknown dtype code {dtype_code}")
        try:
            kind = PlaneKind(kind_code)
        except ValueError:
            raise BadHeaderError(f"{path}: unknown plane kind {kind_code}") from None
        if reserved != 0:
            raise BadHeaderError(f"{path}: reserved field must be 0, got {reserved}")
        if min(height, width) == 0 or max(height, width) > _MAX_DIM:
            raise BadHeaderError(f"{path}: bad dimensions {height}x{width}")
        dtype = _DTYPE_CODES[dtype_code]
        expected = _MMP_HEADER.size + height * width * dtype.itemsize
        if size != expected:
            raise TruncatedError(
                f"{path}: file is {size} bytes, header implies {expected}"
            )
        plane = np.fromfile(fh, dtype=dtype, count=height * width).reshape(
            height, width
        )
    return plane, kind, float(lam)


# ---------------------------------------------------------------------------
# parameter-map directories
# ---------------------------------------------------------------------------

def map_plane_path(outdir: str | Path, kind: PlaneKind, wavelength: float) -> Path:
    return Path(outdir) / f"{_KIND_STEMS[kind]}_{_format_wavelength(wavelength)}.mmp"


def write_maps(maps: LuChipmanMaps, outdir: str | Path) -> list[Path]:
    """One plane file per (kind, wavelength); returns the paths written."""
    maps.validate()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    arrays = {
        PlaneKind.DEPOLARIZATION: maps.depolarization,
        PlaneKind.RETARDANCE: maps.retardance,
        PlaneKind.DIATTENUATION: maps.diattenuation,
        PlaneKind.STATUS: maps.status,
    }
    written = []
    for li, lam in enumerate(maps.wavelengths):
        for kind in _MAP_KINDS:
            path = map_plane_path(outdir, kind, lam)
            write_plane(arrays[kind][li], kind, lam, path)
            written.append(path)
    return written


def read_maps(indir: str | Path) -> LuChipmanMaps:
    """Assemble maps from a directory written by :func:`write_maps`.

    Extra plane kinds (m00, labels) are ignored; a missing kind for any
    wavelength raises MissingPlane.
    """
    indir = Path(indir)
    found: dict[float, dict[PlaneKind, np.ndarray]] = {}
    for path in sorted(indir.glob("*.mmp")):
        plane, kind, lam = read_plane(path)
        if kind in _MAP_KINDS:
            found.setdefault(lam, {})[kind] = plane
    if not found:
        raise MissingPlaneError(f"{indir}: no parameter planes found")
    wavelengths = sorted(found)
    stacks: dict[PlaneKind, list[np.ndarray]] = {k: [] for k in _MAP_KINDS}
    shape = None
    for lam in wavelengths:
        planes = found[lam]
        for kind in _MAP_KINDS:
            if kind not in planes:
                raise MissingPlaneError(
                    f"{indir}: missing {_KIND_STEMS[kind]} plane for "
                    f"wavelength {_format_wavelength(lam)}"
                )
            if shape is None:
                shape = planes[kind].shape
            elif planes[kind].shape != shape:
                raise DimensionMismatchError(
                    f"{indir}: plane shapes disagree "
                    f"({planes[kind].shape} vs {shape})"
                )
            stacks[kind].append(planes[kind])
    maps = LuChipmanMaps(
        wavelengths=list(wavelengths),
        depolarization=np.stack(stacks[PlaneKind.DEPOLARIZATION]).astype(np.float64),
        retardance=np.stack(stacks[PlaneKind.RETARDANCE]).astype(np.float64),
        diattenuation=np.stack(stacks[PlaneKind.DIATTENUATION]).astype(np.float64),
        status=np.stack(stacks[PlaneKind.STATUS]).astype(np.uint8),
    )
    maps.validate()
    return maps


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    """Structural and physical health of one container file."""

    path: str
    kind: str  # "cube" or "plane"
    height: int
    width: int
    wavelengths: list[float]
    dtype: str
    normalized: bool = False
    mask_bits: int | None = None
    nan_count: int = 0
    inf_count: int = 0
    n_pixels: int = 0
    n_physical: int | None = None
    fraction_physical: float | None = None
    min_eigenvalue: float | None = None
    clean: bool = False
    issues: list[str] = field(default_factory=list)


def validate_file(
    path: str | Path,
    tol_phys: float = TOL_PHYS,
    workers: int | None = None,
) -> ValidationReport:
    """Structural checks plus (for cubes) a per-pixel realizability scan.

    ``clean`` means: parses, finite everywhere, and every pixel physical.
    Header corruption still raises; this reports only data-level issues.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == MMP_MAGIC:
        plane, kind, lam = read_plane(path)
        nan = int(np.isnan(plane).sum()) if plane.dtype.kind == "f" else 0
        inf = int(np.isinf(plane).sum()) if plane.dtype.kind == "f" else 0
        issues = []
        if nan:
            issues.append(f"{nan} NaN values")
        if inf:
            issues.append(f"{inf} infinite values")
        return ValidationReport(
            path=str(path),
            kind=f"plane:{kind.name.lower()}",
            height=plane.shape[0],
            width=plane.shape[1],
            wavelengths=[lam],
            dtype=str(plane.dtype),
            nan_count=nan,
            inf_count=inf,
            n_pixels=plane.size,
            clean=not issues,
        )

    cube = read_cube(path)  # raises BadMagic for foreign files
    data = cube.data
    nan = int(np.isnan(data).sum())
    inf = int(np.isinf(data).sum())
    issues = []
    if nan:
        issues.append(f"{nan} NaN values")
    if inf:
        issues.append(f"{inf} infinite values")
    if cube.mask is not None and not cube.mask.is_full:
        issues.append(f"element mask 0x{cube.mask.bits:04X} hides elements")
    scan = scan_cube(cube, tol_phys=tol_phys, workers=workers)
    n_unphysical = scan.n_pixels - scan.n_physical
    if n_unphysical:
        issues.append(f"{n_unphysical} unphysical pixels")
    finite_min = scan.min_eigenvalue[np.isfinite(scan.min_eigenvalue)]
    return ValidationReport(
        path=str(path),
        kind="cube",
        height=cube.height,
        width=cube.width,
        wavelengths=list(cube.wavelengths),
        dtype=str(data.dtype),
        normalized=cube.normalized,
        mask_bits=None if cube.mask is None else cube.mask.bits,
        nan_count=nan,
        inf_count=inf,
        n_pixels=scan.n_pixels,
        n_physical=scan.n_physical,
        fraction_physical=scan.fraction_physical,
        min_eigenvalue=float(finite_min.min()) if finite_min.size else None,
        clean=not issues,
        issues=issues,
    )


def plane_to_png(plane: np.ndarray, path: str | Path) -> None:
    """Quick-look 8-bit grayscale preview (min-max stretched, NaN -> 0).

    For humans only; values are not recoverable from the image.
    """
    from PIL import Image

    arr = np.asarray(plane, dtype=np.float64)
    finite = np.isfinite(arr)
    out = np.zeros(arr.shape, dtype=np.uint8)
    if finite.any():
        lo = float(arr[finite].min())
        hi = float(arr[finite].max())
        if hi > lo:
            scaled = (arr - lo) / (hi - lo) * 255.0
            out[finite] = np.round(scaled[finite]).astype(np.uint8)
        else:
            out[finite] = 0
    Image.fromarray(out, mode="L").save(path)
