"""Physical-realizability testing and projection via the coherency matrix.

A Mueller matrix M maps Stokes vectors to Stokes vectors, but not every
real 4x4 matrix corresponds to a physically possible optical element.
The test is spectral: build the Hermitian coherency matrix

    H(M) = (1/4) * sum_ij m(i,j) * (sigma_i kron conj(sigma_j))

with the Pauli basis sigma_0 = I, sigma_1 = diag(1,-1),
sigma_2 = [[0,1],[1,0]], sigma_3 = [[0,-i],[i,0]].  M is physically
realizable iff every eigenvalue of H is >= 0.  The basis satisfies
tr(K_ij^H K_kl) = 4 delta_ik delta_jl, so the map inverts exactly:

    m(i,j) = tr((sigma_i kron conj(sigma_j))^H @ H)

and tr(H) = m(0,0).

Projection repairs an unphysical matrix by raising only its negative
eigenvalues to a small positive clip value and rebuilding M from the
modified spectrum.  The trace is deliberately not renormalized: the
resulting gain change is absorbed by whoever normalizes downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import run_chunked
from .errors import (
    DimensionMismatchError,
    NoConvergenceError,
    NotHermitianError,
)
from .polcore import MuellerCube

# Default tolerance below which a negative coherency eigenvalue is treated
# as a real violation rather than rounding noise.
TOL_PHYS = 1e-9
# Eigenvalue floor used when projecting unphysical matrices.
CLIP_EIGENVALUE = 1e-6
# Allowed asymmetry |H - H^H| in from_coherency.
TOL_HERMITIAN = 1e-10

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
    ],
    dtype=np.complex128,
)

# _KERNEL[i, j] = sigma_i kron conj(sigma_j); contracting a Mueller matrix
# against it (and dividing by 4) yields the coherency matrix in one einsum.
_KERNEL = np.empty((4, 4, 4, 4), dtype=np.complex128)
for _i in range(4):
    for _j in range(4):
        _KERNEL[_i, _j] = np.kron(_PAULI[_i], np.conj(_PAULI[_j]))
del _i, _j


@dataclass
class RealizabilityReport:
    """Spectral summary of one Mueller matrix."""

    eigenvalues: np.ndarray  # (4,) real, descending
    min_eigenvalue: float
    physical: bool


@dataclass
class CubeScanReport:
    """Realizability summary of a whole cube."""

    fraction_physical: float
    physical: np.ndarray  # (L, H, W) bool
    min_eigenvalue: np.ndarray  # (L, H, W) float64
    n_pixels: int
    n_physical: int


# ---------------------------------------------------------------------------
# batched kernels (flat (N, 4, 4) stacks)
# ---------------------------------------------------------------------------

def coherency_batch(m: np.ndarray) -> np.ndarray:
    """Coherency matrices for a stack of Mueller matrices, (N,4,4) complex."""
    return np.einsum("nij,ijkl->nkl", m, _KERNEL, optimize=True) / 4.0


def mueller_batch(h: np.ndarray) -> np.ndarray:
    """Inverse of :func:`coherency_batch`; real parts of exact traces."""
    # m(i,j) = tr(K_ij^H @ H) = sum_kl conj(K_ij)[k,l] * H[k,l]
    return np.real(np.einsum("ijkl,nkl->nij", np.conj(_KERNEL), h, optimize=True))


def eigh_desc_batch(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching column eigenvectors."""
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    return w[..., ::-1], v[..., ::-1]


def project_batch(
    m: np.ndarray, clip: float = CLIP_EIGENVALUE
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project a stack of Mueller matrices onto the physical set.

    Returns (projected, min_eigenvalue, clipped) where ``clipped`` marks
    rows whose spectrum actually contained a negative eigenvalue.  Rows
    that were already physical are copied through bit-for-bit; only
    violating rows are rebuilt from the clipped spectrum.
    """
    h = coherency_batch(m)
    w, v = eigh_desc_batch(h)
    min_eig = w[..., -1].copy()
    clipped = min_eig < 0.0
    out = m.astype(np.float64, copy=True)
    if np.any(clipped):
        w_fix = w[clipped]
        w_fix = np.where(w_fix < 0.0, clip, w_fix)
        v_fix = v[clipped]
        h_fix = (v_fix * w_fix[:, None, :]) @ np.conj(np.swapaxes(v_fix, -1, -2))
        out[clipped] = mueller_batch(h_fix)
    return out, min_eig, clipped


# ---------------------------------------------------------------------------
# single-matrix API
# ---------------------------------------------------------------------------

def _as_matrix(m: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    a = np.asarray(m)
    if a.shape != shape:
        raise DimensionMismatchError(f"expected shape {shape}, got {a.shape}")
    return a


def to_coherency(m: np.ndarray) -> np.ndarray:
    """Coherency matrix H(M); Hermitian (4, 4) complex, tr(H) = m(0,0)."""
    m = _as_matrix(m, (4, 4)).astype(np.float64)
    return coherency_batch(m[None])[0]


def from_coherency(h: np.ndarray) -> np.ndarray:
    """Mueller matrix of a Hermitian coherency matrix.

    Raises NotHermitianError when max|H - H^H| exceeds TOL_HERMITIAN.
    """
    h = _as_matrix(h, (4, 4)).astype(np.complex128)
    asym = float(np.max(np.abs(h - np.conj(h.T))))
    if asym > TOL_HERMITIAN:
        raise NotHermitianError(
            f"max |H - H^H| = {asym:.3e} exceeds {TOL_HERMITIAN}"
        )
    return mueller_batch(h[None])[0]


def hermitian_eigen(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns (w, v) with real w sorted descending and v[:, k] the unit
    eigenvector for w[k].
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {h.shape}")
    w, v = eigh_desc_batch(h[None])
    return w[0], v[0]


def is_physical(m: np.ndarray, tol_phys: float = TOL_PHYS) -> RealizabilityReport:
    """Spectral realizability test: physical iff min eigenvalue >= -tol_phys."""
    w, _ = hermitian_eigen(to_coherency(m))
    min_eig = float(w[-1])
    return RealizabilityReport(
        eigenvalues=w,
        min_eigenvalue=min_eig,
        physical=min_eig >= -tol_phys,
    )


def project_physical(
    m: np.ndarray, clip: float = CLIP_EIGENVALUE
) -> tuple[np.ndarray, RealizabilityReport]:
    """Clip negative coherency eigenvalues to ``clip`` and rebuild.

    Matrices with no strictly negative eigenvalue are returned unchanged
    (bit-for-bit).  The report describes the *input* spectrum.  The
    operation is idempotent: clipped eigenvalues are nonnegative, so a
    second pass finds nothing to fix.  clip = 0 is allowed (plain
    nearest-PSD projection).
    """
    if clip < 0.0:
        raise ValueError(f"clip must be >= 0, got {clip}")
    m = _as_matrix(m, (4, 4)).astype(np.float64)
    out, _, _ = project_batch(m[None], clip)
    # tol 0: the report flags exactly the matrices the projection rebuilt
    report = is_physical(m, tol_phys=0.0)
    return out[0], report


def project_cube(
    cube: MuellerCube,
    clip: float = CLIP_EIGENVALUE,
    workers: int | None = None,
) -> tuple[MuellerCube, int]:
    """Project every pixel onto the physical set; returns (cube, n_clipped).

    Pixels that are already physical keep their exact stored values (the
    output dtype matches the input, so a fully physical cube round-trips
    byte-identical).  Non-finite pixels are passed through untouched.
    """
    if clip < 0.0:
        raise ValueError(f"clip must be >= 0, got {clip}")
    cube.validate()
    flat = np.ascontiguousarray(cube.data, dtype=np.float64).reshape(-1, 4, 4)
    n = flat.shape[0]
    out = np.empty_like(flat)
    clipped = np.zeros(n, dtype=bool)

    def work(start: int, stop: int) -> None:
        block = flat[start:stop]
        finite = np.isfinite(block).all(axis=(1, 2))
        res = block.copy()
        if np.any(finite):
            proj, _, was_clipped = project_batch(block[finite], clip)
            res[finite] = proj
            sub = np.zeros(stop - start, dtype=bool)
            sub[finite] = was_clipped
            clipped[start:stop] = sub
        out[start:stop] = res

    run_chunked(n, work, workers)
    shape = cube.data.shape
    data = out.reshape(shape)
    if cube.data.dtype != np.float64:
        # untouched pixels round-trip exactly through the f64 detour
        data = data.astype(cube.data.dtype)
    n_clipped = int(clipped.sum())
    projected = MuellerCube(
        data=data,
        wavelengths=list(cube.wavelengths),
        # clipping raises m(0,0) of repaired pixels, so a normalized cube
        # only stays normalized when nothing was clipped
        normalized=cube.normalized and n_clipped == 0,
        m00_plane=None if cube.m00_plane is None else cube.m00_plane.copy(),
        mask=cube.mask,
    )
    return projected, n_clipped


def scan_cube(
    cube: MuellerCube,
    tol_phys: float = TOL_PHYS,
    workers: int | None = None,
) -> CubeScanReport:
    """Per-pixel realizability test over a whole cube.

    Non-finite pixels are reported as unphysical with min eigenvalue NaN.
    """
    cube.validate()
    flat = np.ascontiguousarray(cube.data, dtype=np.float64).reshape(-1, 4, 4)
    n = flat.shape[0]
    min_eig = np.empty(n, dtype=np.float64)
    physical = np.empty(n, dtype=bool)

    def work(start: int, stop: int) -> None:
        block = flat[start:stop]
        finite = np.isfinite(block).all(axis=(1, 2))
        w = np.full((stop - start,), np.nan)
        if np.any(finite):
            h = coherency_batch(block[finite])
            eig, _ = eigh_desc_batch(h)
            w[finite] = eig[:, -1]
        min_eig[start:stop] = w
        physical[start:stop] = finite & (w >= -tol_phys)

    run_chunked(n, work, workers)
    shape = cube.data.shape[:3]
    n_physical = int(physical.sum())
    return CubeScanReport(
        fraction_physical=n_physical / n,
        physical=physical.reshape(shape),
        min_eigenvalue=min_eig.reshape(shape),
        n_pixels=n,
        n_physical=n_physical,
    )
