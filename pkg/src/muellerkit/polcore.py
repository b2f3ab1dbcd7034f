"""Core Mueller-matrix conventions, constructors, and container types.

Conventions (pinned; see docs/conventions.md for the full derivations):

* Stokes vectors are ordered (I, Q, U, V).  Mueller matrices are real
  4x4 arrays acting on column Stokes vectors, indexed m(i, j) with
  i the output component and j the input component.
* A rotation of the analysis frame by an angle theta (radians,
  counter-clockwise looking toward the source) is represented by

      R(theta) = [[1,      0,        0,       0],
                  [0,  cos 2t,   sin 2t,      0],
                  [0, -sin 2t,   cos 2t,      0],
                  [0,      0,        0,       1]]

* A linear retarder with fast axis at theta and retardance delta is
  R(-theta) @ retarder(0, delta) @ R(theta); the closed form is spelled
  out in :func:`make_linear_retarder`.
* Image cubes are stored wavelength-major: data[lam, row, col, i, j].

All constructors return newly allocated float64 arrays and never share
memory with their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DOutOfRangeError,
    M00NonPositiveError,
)

# Matrices with m(0,0) at or below this threshold carry no usable signal
# and are refused by normalize().
EPS_M00 = 1e-9


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

def normalize(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Divide a Mueller matrix by its m(0,0) element.

    Parameters
    ----------
    m : (4, 4) array_like
        Raw Mueller matrix.

    Returns
    -------
    normalized : (4, 4) ndarray
        ``m / m[0, 0]`` with the (0, 0) element forced to exactly 1.0.
    m00 : float
        The gain that was divided out.

    Raises
    ------
    M00NonPositiveError
        If ``m[0, 0] <= EPS_M00`` or the matrix contains non-finite values.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise DimensionMismatchError(f"expected a (4, 4) matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise M00NonPositiveError("matrix contains non-finite values")
    m00 = float(m[0, 0])
    if m00 <= EPS_M00:
        raise M00NonPositiveError(f"m(0,0) = {m00!r} is at or below {EPS_M00}")
    out = m / m00
    out[0, 0] = 1.0
    return out, m00


# ---------------------------------------------------------------------------
# element constructors
# ---------------------------------------------------------------------------

def make_diattenuator(d_vec: Sequence[float]) -> np.ndarray:
    """Pure diattenuator with diattenuation vector ``d_vec``.

    M_D = [[1, d^T], [d, m_D]] with
    m_D = sqrt(1 - D^2) I + (1 - sqrt(1 - D^2)) dhat dhat^T,
    D = |d_vec| <= 1.

    The inner block is evaluated as a*I + d d^T / (1 + a) with
    a = sqrt(1 - D^2), which is algebraically identical and stays exact
    as D -> 0 (no 0/0).
    """
    d = np.asarray(d_vec, dtype=np.float64).reshape(3)
    mag = float(np.linalg.norm(d))
    if mag > 1.0:
        raise DOutOfRangeError(f"|d_vec| = {mag!r} exceeds 1")
    a = float(np.sqrt(max(0.0, 1.0 - mag * mag)))
    inner = a * np.eye(3) + np.outer(d, d) / (1.0 + a)
    out = np.empty((4, 4), dtype=np.float64)
    out[0, 0] = 1.0
    out[0, 1:] = d
    out[1:, 0] = d
    out[1:, 1:] = inner
    return out


def make_linear_retarder(theta: float, delta: float) -> np.ndarray:
    """Linear retarder, fast axis at ``theta`` rad, retardance ``delta`` rad.

    With C = cos 2*theta and S = sin 2*theta:

        [[1,        0,              0,            0       ],
         [0,  C^2 + S^2 cos d,  S C (1 - cos d), -S sin d ],
         [0,  S C (1 - cos d),  S^2 + C^2 cos d,  C sin d ],
         [0,  S sin d,         -C sin d,          cos d   ]]
    """
    c = np.cos(2.0 * theta)
    s = np.sin(2.0 * theta)
    cd = np.cos(delta)
    sd = np.sin(delta)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c * c + s * s * cd, s * c * (1.0 - cd), -s * sd],
            [0.0, s * c * (1.0 - cd), s * s + c * c * cd, c * sd],
            [0.0, s * sd, -c * sd, cd],
        ],
        dtype=np.float64,
    )


def make_rotator(theta: float) -> np.ndarray:
    """Frame rotation by ``theta`` radians (acts on Q and U at 2*theta)."""
    c = np.cos(2.0 * theta)
    s = np.sin(2.0 * theta)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, s, 0.0],
            [0.0, -s, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
        dtype=np.float64,
    )


def make_diagonal_depolarizer(a: float, b: float, c: float) -> np.ndarray:
    """Diagonal depolarizer diag(1, a, b, c)."""
    return np.diag([1.0, float(a), float(b), float(c)]).astype(np.float64)


def compose(
    m_depolarizer: np.ndarray,
    m_retarder: np.ndarray,
    m_diattenuator: np.ndarray,
) -> np.ndarray:
    """Forward product M = M_depolarizer @ M_retarder @ M_diattenuator."""
    return np.asarray(m_depolarizer, dtype=np.float64) @ np.asarray(
        m_retarder, dtype=np.float64
    ) @ np.asarray(m_diattenuator, dtype=np.float64)


# ---------------------------------------------------------------------------
# element masks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ElementMask:
    """Which of the 16 Mueller elements were actually measured.

    Stored as a 16-bit word; element (i, j) lives at bit position 4*i + j
    (bit 0 = m(0,0), bit 15 = m(3,3)).  A set bit means "present".
    """

    bits: int
    # label only; masks with equal bits are the same mask
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.bits <= 0xFFFF:
            raise ValueError(f"mask bits {self.bits!r} outside [0, 0xFFFF]")

    @classmethod
    def from_indices(cls, pairs: Sequence[tuple[int, int]], name: str = "") -> "ElementMask":
        bits = 0
        for i, j in pairs:
            if not (0 <= i < 4 and 0 <= j < 4):
                raise ValueError(f"element index ({i}, {j}) outside the 4x4 grid")
            bits |= 1 << (4 * i + j)
        return cls(bits, name)

    def has(self, i: int, j: int) -> bool:
        return bool(self.bits >> (4 * i + j) & 1)

    def to_bool4x4(self) -> np.ndarray:
        out = np.zeros((4, 4), dtype=bool)
        for i in range(4):
            for j in range(4):
                out[i, j] = self.has(i, j)
        return out

    @property
    def is_full(self) -> bool:
        return self.bits == 0xFFFF

    def __and__(self, other: "ElementMask") -> "ElementMask":
        return ElementMask(self.bits & other.bits)


MASK_FULL = ElementMask(0xFFFF, "full")
# Upper-left 3x3 block only: what a linear-states-only polarimeter measures.
MASK_UL3X3 = ElementMask.from_indices(
    [(i, j) for i in range(3) for j in range(3)], "ul3x3"
)
# First row and first column: intensity-coupled elements only.
MASK_FIRST_ROW_COL = ElementMask.from_indices(
    [(0, j) for j in range(4)] + [(i, 0) for i in range(4)], "first_row_col"
)
# Everything except m(3,3): circular-to-circular coupling unmeasured.
MASK_LINEAR_ONLY = ElementMask(0x7FFF, "linear_only")

MASK_PRESETS = {
    "full": MASK_FULL,
    "ul3x3": MASK_UL3X3,
    "first_row_col": MASK_FIRST_ROW_COL,
    "linear_only": MASK_LINEAR_ONLY,
}


# ---------------------------------------------------------------------------
# image cube and parameter-map containers
# ---------------------------------------------------------------------------

class PixelStatus(IntEnum):
    """Per-pixel decomposition outcome, stored as u8 planes."""

    OK = 0
    DEGENERATE_DIATTENUATOR = 1
    SINGULAR_DEPOLARIZER = 2
    UNPHYSICAL_INPUT = 3


@dataclass
class MuellerCube:
    """A stack of per-wavelength Mueller-matrix images.

    Attributes
    ----------
    data : (L, H, W, 4, 4) ndarray, float32 or float64
        Per-pixel Mueller matrices, wavelength-major.
    wavelengths : list of float
        Strictly increasing wavelengths in nanometers, length L.
    normalized : bool
        True when every stored matrix has m(0,0) = 1 and the original
        gains live in ``m00_plane``.
    m00_plane : (L, H, W) ndarray or None
        Pre-normalization m(0,0) intensities; required when ``normalized``.
    mask : ElementMask or None
        Element mask that was applied to the data; None means all 16
        elements are authentic.
    """

    data: np.ndarray
    wavelengths: list[float]
    normalized: bool = False
    m00_plane: np.ndarray | None = None
    mask: ElementMask | None = None

    def validate(self) -> None:
        d = self.data
        if d.ndim != 5 or d.shape[3:] != (4, 4):
            raise DimensionMismatchError(
                f"cube data must be (L, H, W, 4, 4), got {d.shape}"
            )
        if d.dtype not in (np.float32, np.float64):
            raise DimensionMismatchError(
                f"cube dtype must be float32 or float64, got {d.dtype}"
            )
        if len(self.wavelengths) != d.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.wavelengths)} wavelengths for {d.shape[0]} planes"
            )
        if len(self.wavelengths) == 0:
            raise DimensionMismatchError("cube must hold at least one wavelength")
        if any(
            b <= a for a, b in zip(self.wavelengths[:-1], self.wavelengths[1:])
        ):
            raise DimensionMismatchError(
                f"wavelengths must be strictly increasing, got {self.wavelengths}"
            )
        if self.normalized and self.m00_plane is None:
            raise DimensionMismatchError(
                "normalized cube must carry its m00 plane"
            )
        if self.m00_plane is not None and self.m00_plane.shape != d.shape[:3]:
            raise DimensionMismatchError(
                f"m00 plane shape {self.m00_plane.shape} does not match "
                f"cube dimensions {d.shape[:3]}"
            )

    @property
    def n_wavelengths(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.data.shape[0] * self.data.shape[1] * self.data.shape[2]


def normalize_cube(cube: MuellerCube) -> MuellerCube:
    """Return a normalized copy of ``cube`` (m(0,0) divided out pixelwise).

    Raises M00NonPositiveError if any pixel has m(0,0) <= EPS_M00 or
    non-finite entries; partial normalization is never returned.
    Already-normalized cubes are returned unchanged (same object).
    """
    cube.validate()
    if cube.normalized:
        return cube
    if cube.mask is not None and not cube.mask.is_full:
        # Masked elements are fill values; normalizing them would launder
        # them into plausible-looking physics.
        from .errors import MaskedInputError

        raise MaskedInputError("cannot normalize a cube with missing elements")
    data = np.asarray(cube.data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise M00NonPositiveError("cube contains non-finite values")
    m00 = data[..., 0, 0]
    if np.any(m00 <= EPS_M00):
        lam, row, col = np.argwhere(m00 <= EPS_M00)[0]
        raise M00NonPositiveError(
            f"pixel (lambda={lam}, row={row}, col={col}) has "
            f"m(0,0) = {m00[lam, row, col]!r}"
        )
    out = data / m00[..., None, None]
    out[..., 0, 0] = 1.0
    return MuellerCube(
        data=out,
        wavelengths=list(cube.wavelengths),
        normalized=True,
        m00_plane=m00.copy(),
        mask=cube.mask,
    )


@dataclass
class LuChipmanPixel:
    """Single-pixel polar decomposition M = M_depolarizer @ M_retarder @ M_diattenuator."""

    depolarization: float
    retardance: float
    diattenuation: float
    diattenuation_vec: np.ndarray
    polarizance_vec: np.ndarray
    m_diattenuator: np.ndarray
    m_retarder: np.ndarray
    m_depolarizer: np.ndarray
    status: PixelStatus
    diattenuation_clamped: bool = False


@dataclass
class LuChipmanMaps:
    """Per-pixel scalar parameter planes for a whole cube.

    All planes are (L, H, W); depolarization/retardance/diattenuation are
    float64, status is u8 (:class:`PixelStatus` codes).
    """

    wavelengths: list[float]
    depolarization: np.ndarray
    retardance: np.ndarray
    diattenuation: np.ndarray
    status: np.ndarray

    def validate(self) -> None:
        shape = self.depolarization.shape
        if len(shape) != 3:
            raise DimensionMismatchError(
                f"parameter planes must be (L, H, W), got {shape}"
            )
        for name in ("retardance", "diattenuation", "status"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise DimensionMismatchError(
                    f"{name} plane shape {arr.shape} != {shape}"
                )
        if self.status.dtype != np.uint8:
            raise DimensionMismatchError(
                f"status plane must be uint8, got {self.status.dtype}"
            )
        if len(self.wavelengths) != shape[0]:
            raise DimensionMismatchError(
                f"{len(self.wavelengths)} wavelengths for {shape[0]} planes"
            )
