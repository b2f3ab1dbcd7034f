"""Exact polarimetric augmentation: right-angle rotations, mirror flips,
and element-mask dropout.

Rotating a polarimetric image is not just a pixel shuffle: the Stokes
reference frame rotates with it, so every Mueller matrix must be
conjugated by the matching frame operator.  For the eight square
symmetries the operators are signed diagonals:

    rotation  90 or 270 deg -> G = diag(1, -1, -1,  1)   (Q, U negate)
    rotation 180 deg        -> G = I
    one mirror flip         -> G = diag(1,  1, -1, -1)   (U, V negate)

Operators compose by multiplication (the group is Klein-four), every G
is its own inverse, and each 3x3 Q/U/V block is a proper rotation.
Consequently the scalar decomposition parameters (depolarization,
retardance, diattenuation, status) are untouched by the conjugation,
and augmenting a cube then decomposing equals decomposing then
shuffling the parameter planes.  That shortcut is `augment_params`.

Spatial conventions: rotations are counter-clockwise in (row, col)
image coordinates (numpy rot90), `flip_h` mirrors left-right (column
axis), `flip_v` mirrors top-bottom (row axis), applied in the order
rotate, then flip_h, then flip_v.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .polcore import (
    ElementMask,
    LuChipmanMaps,
    MASK_PRESETS,
    MuellerCube,
    make_rotator,
)

_FLIP_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])
_QUARTER_TURN_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


@dataclass(frozen=True)
class SpatialTransform:
    """One of the eight square symmetries."""

    rotation_deg: int = 0
    flip_h: bool = False
    flip_v: bool = False

    def __post_init__(self) -> None:
        if self.rotation_deg not in (0, 90, 180, 270):
            raise ValueError(
                f"rotation must be one of 0/90/180/270, got {self.rotation_deg}"
            )

    def frame_signs(self) -> np.ndarray:
        """Diagonal of the net frame operator G for this transform."""
        signs = np.ones(4)
        if self.rotation_deg in (90, 270):
            signs = signs * _QUARTER_TURN_SIGNS
        if self.flip_h != self.flip_v:  # two flips cancel in the frame
            signs = signs * _FLIP_SIGNS
        return signs

    def swaps_axes(self) -> bool:
        return self.rotation_deg in (90, 270)


ALL_TRANSFORMS = tuple(
    SpatialTransform(rot, fh, fv)
    for rot in (0, 90, 180, 270)
    for fh in (False, True)
    for fv in (False, True)
)


def rotate_frame(m: np.ndarray, theta: float) -> np.ndarray:
    """Conjugate one Mueller matrix by a frame rotation of ``theta`` rad.

    Returns R(-theta) @ M @ R(theta): the matrix of the same element as
    seen from a frame whose axes are rotated by ``theta``, so a retarder
    with fast axis at 0 becomes one with fast axis at ``theta``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise DimensionMismatchError(f"expected a (4, 4) matrix, got {m.shape}")
    return make_rotator(-theta) @ m @ make_rotator(theta)


def _permute_plane(plane: np.ndarray, t: SpatialTransform) -> np.ndarray:
    """Apply the spatial part of a transform to (L, H, W, ...) data."""
    out = plane
    k = t.rotation_deg // 90
    if k:
        out = np.rot90(out, k=k, axes=(1, 2))
    if t.flip_h:
        out = np.flip(out, axis=2)
    if t.flip_v:
        out = np.flip(out, axis=1)
    return np.ascontiguousarray(out)


def rotate_cube(cube: MuellerCube, t: SpatialTransform) -> MuellerCube:
    """Geometrically transform a cube, conjugating every Mueller matrix
    by the matching frame operator.

    Sign flips and pixel moves only: the operation is exact in floating
    point (no interpolation, no rounding), hence invertible bit-for-bit.
    """
    cube.validate()
    signs = t.frame_signs()
    scale = np.outer(signs, signs)  # G M G elementwise for diagonal G
    data = _permute_plane(cube.data, t) * scale
    data = data.astype(cube.data.dtype, copy=False)
    m00 = None
    if cube.m00_plane is not None:
        m00 = _permute_plane(cube.m00_plane, t)
    return MuellerCube(
        data=data,
        wavelengths=list(cube.wavelengths),
        normalized=cube.normalized,
        m00_plane=m00,
        mask=cube.mask,
    )


def augment_params(maps: LuChipmanMaps, t: SpatialTransform) -> LuChipmanMaps:
    """Shortcut: transform decomposition maps spatially without touching
    values.  augment_params(decompose(cube), t) == decompose(rotate_cube(cube, t)).
    """
    maps.validate()
    return LuChipmanMaps(
        wavelengths=list(maps.wavelengths),
        depolarization=_permute_plane(maps.depolarization, t),
        retardance=_permute_plane(maps.retardance, t),
        diattenuation=_permute_plane(maps.diattenuation, t),
        status=_permute_plane(maps.status, t),
    )


def parse_mask(spec: str | int | ElementMask) -> ElementMask:
    """Accept a preset name, an integer bit word, or a mask object."""
    if isinstance(spec, ElementMask):
        return spec
    if isinstance(spec, int):
        return ElementMask(spec)
    key = spec.strip().lower()
    if key in MASK_PRESETS:
        return MASK_PRESETS[key]
    try:
        bits = int(key, 0)  # accepts 0x..., 0b..., decimal
    except ValueError:
        raise ValueError(
            f"unknown mask {spec!r}; use one of {sorted(MASK_PRESETS)} "
            "or an integer bit word"
        ) from None
    return ElementMask(bits)


def apply_mask(
    cube: MuellerCube, mask: ElementMask | str | int, fill: float = 0.0
) -> MuellerCube:
    """Zero out (or fill) the Mueller elements a reduced polarimeter
    would not measure, recording the mask on the result.

    Masks accumulate with AND semantics: masking an already-masked cube
    keeps only elements present in both, so the operation is idempotent
    and order-independent for a fixed fill value.
    """
    cube.validate()
    mask = parse_mask(mask)
    if cube.mask is not None:
        mask = ElementMask(cube.mask.bits & mask.bits)
    keep = mask.to_bool4x4()
    data = cube.data.copy()
    data[..., ~keep] = fill
    return MuellerCube(
        data=data,
        wavelengths=list(cube.wavelengths),
        normalized=cube.normalized,
        m00_plane=None if cube.m00_plane is None else cube.m00_plane.copy(),
        mask=mask,
    )
