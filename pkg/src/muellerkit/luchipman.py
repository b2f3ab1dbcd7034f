"""Polar decomposition of Mueller matrices into depolarizer, retarder,
and diattenuator factors, M = M_depolarizer @ M_retarder @ M_diattenuator,
with scalar parameter maps over image cubes.

Pipeline per pixel (after normalizing by m(0,0) and, by default,
projecting onto the physical set):

1. Diattenuation vector d = (m01, m02, m03), D = |d|.  If D >= 1 the
   matrix is a (near-)ideal polarizer: the remaining factors are not
   identifiable and the pixel is flagged DEGENERATE_DIATTENUATOR.
2. Peel off the diattenuator: M' = M @ M_D^{-1}, using the closed form

       M_D^{-1} = 1/(1 - D^2) * [[1, -d^T], [-d, m_D]]

   (the inverse of [[1, d^T], [d, m_D]] works out to have the same inner
   block m_D = aI + d d^T/(1+a), a = sqrt(1-D^2), up to the scalar).
3. The depolarizer block is the symmetric square root
   m_depol = +/- (m' m'^T)^(1/2), evaluated spectrally as
   sum_k sqrt(lambda_k) u_k u_k^T with the sign of det(m').
   Depolarization = 1 - |tr(m_depol)| / 3.
4. If |det m'| is below threshold the retarder is not identifiable:
   flag SINGULAR_DEPOLARIZER, report retardance 0, m_retarder = I.
   Otherwise m_retarder = m_depol^{-1} m' and the retardance is
   arccos((tr(m_retarder) + 1) / 2 - 1), argument clamped to [-1, 1].

Parameters are invariant under scaling of the input (normalization
divides any gain out) and under the frame changes used for augmentation
(conjugation by proper rotations of the Q/U/V block preserves traces,
singular values, and |d|).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import run_chunked
from .errors import DegenerateNoReconstructionError, DimensionMismatchError
from .polcore import (
    EPS_M00,
    LuChipmanMaps,
    LuChipmanPixel,
    MuellerCube,
    PixelStatus,
)
from .realizability import CLIP_EIGENVALUE, project_batch

# D treated as 1 (ideal polarizer) at or above 1 - D_SINGULAR_EPS.
D_SINGULAR_EPS = 1e-9
# |det m'| below this means the depolarizer annihilates a direction.
DET_EPS = 1e-12
# Guard against overflow when inverting a barely-nonsingular square root.
_SQRT_FLOOR = 1e-150


@dataclass
class DecomposeOptions:
    """Knobs for the decomposition pipeline.

    project_unphysical: project each pixel onto the physical set before
    decomposing (recommended; the factor formulas assume a physical
    matrix).  Pixels with m(0,0) <= m00_eps or non-finite entries are
    flagged UNPHYSICAL_INPUT and skipped regardless.
    """

    project_unphysical: bool = True
    clip: float = CLIP_EIGENVALUE
    m00_eps: float = EPS_M00
    d_singular_eps: float = D_SINGULAR_EPS
    det_eps: float = DET_EPS
    wavelength_selection: list[int] | None = None

    def validate(self) -> None:
        for name in ("m00_eps", "d_singular_eps", "det_eps"):
            v = getattr(self, name)
            if not (v > 0.0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if not (self.clip >= 0.0):
            raise ValueError(f"clip must be >= 0, got {self.clip!r}")


def diattenuation(m: np.ndarray) -> tuple[float, np.ndarray, bool]:
    """Diattenuation scalar and vector of a normalized Mueller matrix.

    Returns (D, d_vec, clamped); D is clamped into [0, 1] and ``clamped``
    reports whether |d_vec| actually exceeded 1.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise DimensionMismatchError(f"expected a (4, 4) matrix, got {m.shape}")
    d_vec = m[0, 1:4].copy()
    raw = float(np.linalg.norm(d_vec))
    return min(raw, 1.0), d_vec, raw > 1.0


def polarizance(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Polarizance scalar and vector (first column) of a normalized matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise DimensionMismatchError(f"expected a (4, 4) matrix, got {m.shape}")
    p_vec = m[1:4, 0].copy()
    return min(float(np.linalg.norm(p_vec)), 1.0), p_vec


# ---------------------------------------------------------------------------
# batched kernel
# ---------------------------------------------------------------------------

def _decompose_batch(
    mats: np.ndarray, opts: DecomposeOptions, want_factors: bool = False
) -> dict[str, np.ndarray]:
    """Decompose a flat stack of raw Mueller matrices.

    Returns planes: depolarization, retardance, diattenuation (float64),
    status (u8); with ``want_factors`` also the per-pixel factor blocks
    and vectors needed to assemble full factor matrices.
    """
    n = mats.shape[0]
    delta = np.zeros(n, dtype=np.float64)
    ret = np.zeros(n, dtype=np.float64)
    diat = np.zeros(n, dtype=np.float64)
    status = np.full(n, PixelStatus.UNPHYSICAL_INPUT, dtype=np.uint8)
    clamped = np.zeros(n, dtype=bool)
    if want_factors:
        d_vec_out = np.zeros((n, 3), dtype=np.float64)
        p_vec_out = np.zeros((n, 3), dtype=np.float64)
        p_delta_out = np.zeros((n, 3), dtype=np.float64)
        m_depol_out = np.tile(np.eye(3), (n, 1, 1))
        m_ret_out = np.tile(np.eye(3), (n, 1, 1))

    finite = np.isfinite(mats).all(axis=(1, 2))
    m00 = np.where(finite, mats[:, 0, 0], 0.0)
    usable = finite & (m00 > opts.m00_eps)
    if not np.any(usable):
        out = {
            "depolarization": delta,
            "retardance": ret,
            "diattenuation": diat,
            "status": status,
            "clamped": clamped,
        }
        if want_factors:
            out.update(
                d_vec=d_vec_out,
                p_vec=p_vec_out,
                p_delta=p_delta_out,
                m_depol=m_depol_out,
                m_ret=m_ret_out,
            )
        return out

    idx = np.flatnonzero(usable)
    m = mats[idx].astype(np.float64) / m00[idx, None, None]
    m[:, 0, 0] = 1.0
    if opts.project_unphysical:
        m, _, was_clipped = project_batch(m, opts.clip)
        if np.any(was_clipped):
            # Clipping raises tr(H) = m(0,0); divide the gain back out so
            # the factor formulas see a normalized matrix again.
            sub = np.flatnonzero(was_clipped)
            m[sub] /= m[sub, 0, 0][:, None, None]
            m[sub, 0, 0] = 1.0

    status[idx] = PixelStatus.OK

    d_vec = m[:, 0, 1:4]
    d_raw = np.linalg.norm(d_vec, axis=1)
    clamped[idx] = d_raw > 1.0
    d = np.minimum(d_raw, 1.0)
    diat[idx] = d
    p_vec = m[:, 1:4, 0]

    degen = d_raw >= 1.0 - opts.d_singular_eps
    status[idx[degen]] = PixelStatus.DEGENERATE_DIATTENUATOR
    if want_factors:
        d_vec_out[idx] = d_vec
        p_vec_out[idx] = p_vec

    ok = ~degen
    if not np.any(ok):
        out = {
            "depolarization": delta,
            "retardance": ret,
            "diattenuation": diat,
            "status": status,
            "clamped": clamped,
        }
        if want_factors:
            out.update(
                d_vec=d_vec_out,
                p_vec=p_vec_out,
                p_delta=p_delta_out,
                m_depol=m_depol_out,
                m_ret=m_ret_out,
            )
        return out

    sidx = idx[ok]  # absolute indices of fully decomposable pixels
    mk = m[ok]
    dv = d_vec[ok]
    dk = d[ok]

    # closed-form inverse diattenuator, stable for all D in [0, 1)
    a = np.sqrt(1.0 - dk * dk)
    eye3 = np.eye(3)
    m_d = a[:, None, None] * eye3 + dv[:, :, None] * dv[:, None, :] / (
        1.0 + a
    )[:, None, None]
    inv_scale = 1.0 / (1.0 - dk * dk)
    md_inv = np.empty((mk.shape[0], 4, 4), dtype=np.float64)
    md_inv[:, 0, 0] = 1.0
    md_inv[:, 0, 1:] = -dv
    md_inv[:, 1:, 0] = -dv
    md_inv[:, 1:, 1:] = m_d
    md_inv *= inv_scale[:, None, None]

    mp = (mk @ md_inv)[:, 1:, 1:]

    # symmetric square root of m' m'^T via its spectrum
    s = mp @ np.swapaxes(mp, -1, -2)
    w, u = np.linalg.eigh(s)  # ascending, real symmetric
    w = np.maximum(w, 0.0)
    sq = np.sqrt(w)
    det_mp = np.linalg.det(mp)
    singular = np.abs(det_mp) < opts.det_eps
    sgn = np.where(det_mp < 0.0, -1.0, 1.0)
    sgn[singular] = 1.0

    ut = np.swapaxes(u, -1, -2)
    m_depol = sgn[:, None, None] * ((u * sq[:, None, :]) @ ut)
    tr_depol = np.trace(m_depol, axis1=-2, axis2=-1)
    delta[sidx] = np.clip(1.0 - np.abs(tr_depol) / 3.0, 0.0, 1.0)

    inv_sq = 1.0 / np.maximum(sq, _SQRT_FLOOR)
    m_depol_inv = sgn[:, None, None] * ((u * inv_sq[:, None, :]) @ ut)
    m_ret = m_depol_inv @ mp
    tr_ret = np.trace(m_ret, axis1=-2, axis2=-1)
    ret_all = np.arccos(np.clip((tr_ret + 1.0) / 2.0 - 1.0, -1.0, 1.0))
    ret_all[singular] = 0.0
    ret[sidx] = ret_all
    status[sidx[singular]] = PixelStatus.SINGULAR_DEPOLARIZER

    if want_factors:
        m_ret[singular] = eye3
        m_depol_out[sidx] = m_depol
        m_ret_out[sidx] = m_ret
        # depolarizer polarizance column: (p - m_small d) / (1 - D^2)
        m_small = mk[:, 1:, 1:]
        pv = p_vec[ok]
        p_delta_out[sidx] = (
            pv - np.einsum("nij,nj->ni", m_small, dv)
        ) * inv_scale[:, None]

    out = {
        "depolarization": delta,
        "retardance": ret,
        "diattenuation": diat,
        "status": status,
        "clamped": clamped,
    }
    if want_factors:
        out.update(
            d_vec=d_vec_out,
            p_vec=p_vec_out,
            p_delta=p_delta_out,
            m_depol=m_depol_out,
            m_ret=m_ret_out,
        )
    return out


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def decompose_pixel(
    m: np.ndarray, opts: DecomposeOptions | None = None
) -> LuChipmanPixel:
    """Full decomposition of a single Mueller matrix.

    The factors reconstruct the normalized (and, if enabled, projected)
    input when status is OK; degenerate pixels get identity placeholders
    for the unidentifiable factors.
    """
    opts = opts or DecomposeOptions()
    opts.validate()
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (4, 4):
        raise DimensionMismatchError(f"expected a (4, 4) matrix, got {m.shape}")
    r = _decompose_batch(m[None], opts, want_factors=True)

    d_vec = r["d_vec"][0]
    d = float(r["diattenuation"][0])
    # assemble the diattenuator from the (possibly clamped) vector
    raw = float(np.linalg.norm(d_vec))
    dv = d_vec if raw <= 1.0 else d_vec / raw
    a = float(np.sqrt(max(0.0, 1.0 - min(raw, 1.0) ** 2)))
    m_diat = np.empty((4, 4), dtype=np.float64)
    m_diat[0, 0] = 1.0
    m_diat[0, 1:] = dv
    m_diat[1:, 0] = dv
    m_diat[1:, 1:] = a * np.eye(3) + np.outer(dv, dv) / (1.0 + a)

    m_ret = np.eye(4)
    m_ret[1:, 1:] = r["m_ret"][0]
    m_depol = np.eye(4)
    m_depol[1:, 1:] = r["m_depol"][0]
    m_depol[1:, 0] = r["p_delta"][0]

    return LuChipmanPixel(
        depolarization=float(r["depolarization"][0]),
        retardance=float(r["retardance"][0]),
        diattenuation=d,
        diattenuation_vec=d_vec,
        polarizance_vec=r["p_vec"][0],
        m_diattenuator=m_diat,
        m_retarder=m_ret,
        m_depolarizer=m_depol,
        status=PixelStatus(int(r["status"][0])),
        diattenuation_clamped=bool(r["clamped"][0]),
    )


def reconstruct(px: LuChipmanPixel) -> np.ndarray:
    """Multiply the factors back together; only valid for OK pixels."""
    if px.status != PixelStatus.OK:
        raise DegenerateNoReconstructionError(
            f"cannot reconstruct a pixel with status {px.status.name}"
        )
    return px.m_depolarizer @ px.m_retarder @ px.m_diattenuator


def decompose_cube(
    cube: MuellerCube,
    opts: DecomposeOptions | None = None,
    workers: int | None = None,
    progress=None,
) -> LuChipmanMaps:
    """Scalar parameter maps (depolarization, retardance, diattenuation,
    status) for every pixel of a cube.

    Refuses cubes with element masks: decomposition on filled-in elements
    would silently produce garbage.  Results are byte-identical for every
    worker count; see _parallel for why.
    """
    opts = opts or DecomposeOptions()
    opts.validate()
    cube.validate()
    if cube.mask is not None and not cube.mask.is_full:
        from .errors import MaskedInputError

        raise MaskedInputError(
            "cube has missing elements "
            f"(mask bits 0x{cube.mask.bits:04X}); decomposition needs all 16"
        )
    data = cube.data
    wavelengths = list(cube.wavelengths)
    if opts.wavelength_selection is not None:
        sel = list(opts.wavelength_selection)
        if not sel or any(not 0 <= k < cube.n_wavelengths for k in sel):
            raise DimensionMismatchError(
                f"wavelength selection {sel} outside 0..{cube.n_wavelengths - 1}"
            )
        data = data[sel]
        wavelengths = [wavelengths[k] for k in sel]
    flat = np.ascontiguousarray(data, dtype=np.float64).reshape(-1, 4, 4)
    n = flat.shape[0]
    delta = np.empty(n, dtype=np.float64)
    ret = np.empty(n, dtype=np.float64)
    diat = np.empty(n, dtype=np.float64)
    status = np.empty(n, dtype=np.uint8)

    def work(start: int, stop: int) -> None:
        r = _decompose_batch(flat[start:stop], opts)
        delta[start:stop] = r["depolarization"]
        ret[start:stop] = r["retardance"]
        diat[start:stop] = r["diattenuation"]
        status[start:stop] = r["status"]

    run_chunked(n, work, workers, progress=progress)
    shape = data.shape[:3]
    return LuChipmanMaps(
        wavelengths=wavelengths,
        depolarization=delta.reshape(shape),
        retardance=ret.reshape(shape),
        diattenuation=diat.reshape(shape),
        status=status.reshape(shape),
    )
