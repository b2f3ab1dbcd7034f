"""Synthetic cube builders: known-answer inputs for tests, demos, and
pipeline smoke checks.

The ``composed`` cube uses one fixed parameter set whose decomposition
values are known in closed form (depolarization 0.4, retardance 1.0,
diattenuation sqrt(0.1)); ``random_physical`` draws element compositions
and rejects any that land outside the physical set, so every pixel is
strictly realizable.
"""

from __future__ import annotations

import numpy as np

from .polcore import (
    MuellerCube,
    compose,
    make_diagonal_depolarizer,
    make_diattenuator,
    make_linear_retarder,
)
from .realizability import TOL_PHYS, coherency_batch, eigh_desc_batch

DEFAULT_WAVELENGTHS = [550.0]

# fixed "composed" oracle: depolarization 1 - (0.7+0.6+0.5)/3 = 0.4,
# retardance 1.0, diattenuation |(0.3, 0.1, 0)| = sqrt(0.1)
COMPOSED_DEPOL = (0.7, 0.6, 0.5)
COMPOSED_RETARDER = (np.pi / 8, 1.0)
COMPOSED_DIATT = (0.3, 0.1, 0.0)

UNPHYSICAL_DIAG = (0.9, 0.9, -0.9)  # min coherency eigenvalue -0.425


def _tile(
    m: np.ndarray,
    height: int,
    width: int,
    wavelengths: list[float],
    dtype=np.float64,
) -> MuellerCube:
    data = np.broadcast_to(
        m, (len(wavelengths), height, width, 4, 4)
    ).astype(dtype)
    return MuellerCube(data=np.ascontiguousarray(data), wavelengths=list(wavelengths))


def identity_cube(
    height: int, width: int, wavelengths=None, dtype=np.float64
) -> MuellerCube:
    return _tile(np.eye(4), height, width, wavelengths or DEFAULT_WAVELENGTHS, dtype)


def depolarizer_cube(
    a: float, b: float, c: float, height: int, width: int, wavelengths=None,
    dtype=np.float64,
) -> MuellerCube:
    return _tile(
        make_diagonal_depolarizer(a, b, c),
        height, width, wavelengths or DEFAULT_WAVELENGTHS, dtype,
    )


def retarder_cube(
    theta: float, delta: float, height: int, width: int, wavelengths=None,
    dtype=np.float64,
) -> MuellerCube:
    return _tile(
        make_linear_retarder(theta, delta),
        height, width, wavelengths or DEFAULT_WAVELENGTHS, dtype,
    )


def diattenuator_cube(
    d_vec, height: int, width: int, wavelengths=None, dtype=np.float64
) -> MuellerCube:
    return _tile(
        make_diattenuator(d_vec),
        height, width, wavelengths or DEFAULT_WAVELENGTHS, dtype,
    )


def composed_cube(
    height: int, width: int, wavelengths=None, dtype=np.float64
) -> MuellerCube:
    m = compose(
        make_diagonal_depolarizer(*COMPOSED_DEPOL),
        make_linear_retarder(*COMPOSED_RETARDER),
        make_diattenuator(COMPOSED_DIATT),
    )
    return _tile(m, height, width, wavelengths or DEFAULT_WAVELENGTHS, dtype)


def unphysical_tile_cube(
    height: int, width: int, wavelengths=None, dtype=np.float64
) -> MuellerCube:
    """Top half unphysical diag(1, 0.9, 0.9, -0.9), bottom half identity."""
    cube = identity_cube(height, width, wavelengths, dtype)
    bad = np.diag([1.0, *UNPHYSICAL_DIAG])
    cube.data[:, : max(1, height // 2)] = bad.astype(dtype)
    return cube


def random_physical_matrices(
    n: int,
    rng: np.random.Generator,
    depol_range: tuple[float, float] = (0.3, 1.0),
    d_max: float = 0.8,
    margin: float = TOL_PHYS,
    return_params: bool = False,
):
    """Draw n strictly physical compositions depolarizer @ retarder @
    diattenuator; unphysical draws are rejected and redrawn.

    Diagonal depolarizer entries are uniform in ``depol_range``, the
    retarder axis/retardance uniform over [0, pi) x [0, pi], and the
    diattenuation vector uniform in direction with |d| uniform in
    [0, d_max].  With ``return_params`` the generating (depolarization,
    retardance, diattenuation) scalars are returned alongside.
    """
    out = np.empty((n, 4, 4), dtype=np.float64)
    params = np.empty((n, 3), dtype=np.float64)
    filled = 0
    while filled < n:
        # cap the draw so transient buffers stay modest for huge cubes
        want = min(n - filled, 1 << 18)
        abc = rng.uniform(depol_range[0], depol_range[1], size=(want, 3))
        theta = rng.uniform(0.0, np.pi, size=want)
        delta = rng.uniform(0.0, np.pi, size=want)
        direction = rng.normal(size=(want, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        mag = rng.uniform(0.0, d_max, size=want)

        dep = np.zeros((want, 4, 4))
        dep[:, 0, 0] = 1.0
        dep[:, 1, 1] = abc[:, 0]
        dep[:, 2, 2] = abc[:, 1]
        dep[:, 3, 3] = abc[:, 2]

        c = np.cos(2.0 * theta)
        s = np.sin(2.0 * theta)
        cd = np.cos(delta)
        sd = np.sin(delta)
        ret = np.zeros((want, 4, 4))
        ret[:, 0, 0] = 1.0
        ret[:, 1, 1] = c * c + s * s * cd
        ret[:, 1, 2] = s * c * (1.0 - cd)
        ret[:, 1, 3] = -s * sd
        ret[:, 2, 1] = ret[:, 1, 2]
        ret[:, 2, 2] = s * s + c * c * cd
        ret[:, 2, 3] = c * sd
        ret[:, 3, 1] = s * sd
        ret[:, 3, 2] = -c * sd
        ret[:, 3, 3] = cd

        dv = direction * mag[:, None]
        a = np.sqrt(1.0 - mag * mag)
        dia = np.zeros((want, 4, 4))
        dia[:, 0, 0] = 1.0
        dia[:, 0, 1:] = dv
        dia[:, 1:, 0] = dv
        dia[:, 1:, 1:] = a[:, None, None] * np.eye(3) + dv[:, :, None] * dv[
            :, None, :
        ] / (1.0 + a)[:, None, None]

        batch = dep @ ret @ dia
        w, _ = eigh_desc_batch(coherency_batch(batch))
        good = w[:, -1] >= margin
        n_good = int(good.sum())
        out[filled : filled + n_good] = batch[good]
        params[filled : filled + n_good, 0] = 1.0 - abc[good].sum(axis=1) / 3.0
        params[filled : filled + n_good, 1] = delta[good]
        params[filled : filled + n_good, 2] = mag[good]
        filled += n_good
    if return_params:
        return out, params
    return out


def random_physical_cube(
    height: int,
    width: int,
    seed: int,
    wavelengths=None,
    dtype=np.float64,
) -> MuellerCube:
    wavelengths = wavelengths or DEFAULT_WAVELENGTHS
    rng = np.random.default_rng(seed)
    n = len(wavelengths) * height * width
    mats = random_physical_matrices(n, rng)
    data = mats.reshape(len(wavelengths), height, width, 4, 4).astype(dtype)
    return MuellerCube(data=data, wavelengths=list(wavelengths))
