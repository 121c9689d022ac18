"""Deterministic random constructions used by the verification suites.

Everything is driven by a counter-based Philox generator so that reports are
reproducible from the recorded seed.  Fields are gentle band-limited
perturbations: the dual-pair residuals are then limited by Fourier
truncation, not by roughness of the test data.
"""

import numpy as np

from .bases import make_ambient_basis, random_left_element
from .grid import GridDiffeo, PeriodicGrid, PointCloud
from .phase import (AmbientManifold, CotangentState, ExpGauge, IdentityMap,
                    LeftTransformer, RightTransformer, Translation,
                    VectorFieldFlow)

RNG_NAME = "philox"


def rng_from_seed(seed):
    return np.random.Generator(np.random.Philox(np.uint64(seed)))


def spawn(rng, n):
    """Independent child generators (stable fan-out for sweeps)."""
    return [np.random.Generator(np.random.Philox(s)) for s in rng.bit_generator.seed_seq.spawn(n)]


def band_limited(rng, grid, kmax, amp, width=1, mean=0.0):
    """Random trigonometric polynomial field, coefficients decaying in k."""
    shape = (width,) if width > 1 else ()
    out = np.full((grid.n,) + shape, float(mean))
    for k in range(1, kmax + 1):
        ak = rng.normal(size=shape) * amp / k
        bk = rng.normal(size=shape) * amp / k
        out += np.multiply.outer(np.cos(k * grid.x), ak) + np.multiply.outer(np.sin(k * grid.x), bk)
    return out


def random_state(group, ambient, grid, rng, kmax=2, q_amp=0.05, p_amp=0.5,
                 s_amp=0.4, g_amp=0.4, gamma_winding=0):
    """Gentle random regular state on a periodic grid source."""
    n, d, k = grid.n, ambient.d, group.dim_o
    if ambient.kind == "torus":
        Q = np.column_stack(
            [grid.x + band_limited(rng, grid, kmax, q_amp)]
            + [band_limited(rng, grid, kmax, q_amp, mean=rng.uniform(0, 2 * np.pi))
               for _ in range(d - 1)]
        )
        winding = np.zeros(d)
        winding[0] = 1.0
    else:
        if d < 2:
            raise ValueError("the circle does not embed in R^1")
        radius = 1.0 + band_limited(rng, grid, kmax, q_amp)
        Q = np.column_stack(
            [radius * np.cos(grid.x), radius * np.sin(grid.x)]
            + [band_limited(rng, grid, kmax, q_amp) for _ in range(d - 2)]
        )
        winding = np.zeros(d)
    # momenta kept away from zero by a random constant part
    P = band_limited(rng, grid, kmax, p_amp, width=d)
    P += rng.uniform(0.3, 0.7, size=d) * np.where(rng.uniform(size=d) < 0.5, -1, 1)
    sigma = band_limited(rng, grid, kmax, s_amp, width=k)
    sigma += rng.uniform(0.3, 0.7, size=k) * np.where(rng.uniform(size=k) < 0.5, -1, 1)
    if group.kind == "circle":
        angles = band_limited(rng, grid, kmax, g_amp) + gamma_winding * grid.x
        gamma = angles
    else:
        gamma = group.exp(band_limited(rng, grid, kmax, g_amp, width=k))
    state = CotangentState(grid, group, ambient, Q, P, gamma, sigma, q_winding=winding)
    state.require_regular()
    return state


def random_cloud_state(group, rng, n=5, d=1, spread=1.5, p_amp=0.4, s_amp=0.5):
    """Point-cloud (dim-0 source) ensemble in R^d for peakon dynamics."""
    ambient = AmbientManifold("euclidean", d)
    positions = np.sort(rng.uniform(-spread, spread, size=n))
    cloud = PointCloud(positions, np.ones(n))
    Q = positions[:, None] if d == 1 else rng.uniform(-spread, spread, size=(n, d))
    sign = rng.choice([-1.0, 1.0])
    P = sign * rng.uniform(0.1, p_amp, size=(n, d))
    sigma = rng.normal(size=(n, group.dim_o)) * s_amp
    gamma = group.identity((n,)) if group.kind != "circle" else np.zeros(n)
    return CotangentState(cloud, group, ambient, Q, P, gamma, sigma)


def conservation_ensemble(group, rng, n=5):
    """Gentle peakon ensemble for long conservation runs.

    Amplitudes are kept moderate: the exponential gauge update drifts the
    Noether charge at O(dt^3 |xi|^3) per step, so |xi| ~ 0.2 keeps the
    drift orders of magnitude under the acceptance budget at dt = 1e-3.
    """
    ambient = AmbientManifold("euclidean", 1)
    positions = np.sort(rng.uniform(-2.0, 2.0, size=n))
    positions += 0.4 * np.arange(n)  # guarantee separation
    positions -= positions.mean()
    cloud = PointCloud(positions, np.ones(n))
    P = rng.uniform(0.1, 0.25, size=(n, 1))
    sigma = rng.normal(size=(n, group.dim_o)) * 0.15
    sigma += np.sign(sigma) * 0.05
    gamma = group.identity((n,)) if group.kind != "circle" else np.zeros(n)
    return CotangentState(cloud, group, ambient, positions[:, None], P, gamma, sigma)


def random_vol_state(group, grid, rng, dbar=1, kmax=2, q_amp=0.05, p_amp=0.4,
                     s_amp=0.3, g_amp=0.4):
    """Gentle random embedding of the source circle into T*T^dbar x o*."""
    from .yangmills import VolState

    ambient = AmbientManifold("torus", dbar)
    k = group.dim_o
    q = np.column_stack(
        [grid.x + band_limited(rng, grid, kmax, q_amp)]
        + [band_limited(rng, grid, kmax, q_amp, mean=rng.uniform(0, 2 * np.pi))
           for _ in range(dbar - 1)]
    )
    winding = np.zeros(dbar)
    winding[0] = 1.0
    p = band_limited(rng, grid, kmax, p_amp, width=dbar)
    p += rng.uniform(0.2, 0.5, size=dbar)
    sigma = band_limited(rng, grid, kmax, s_amp, width=k)
    sigma += rng.uniform(0.2, 0.5, size=k)
    if group.kind == "circle":
        gamma = band_limited(rng, grid, kmax, g_amp)
    else:
        gamma = group.exp(band_limited(rng, grid, kmax, g_amp, width=k))
    if p.ndim == 1:
        p = p[:, None]
    return VolState(grid, group, ambient, q, p, gamma, sigma, q_winding=winding)


def random_left_transformer(group, ambient, rng, kmax=2, amp=0.25, kind=None, check=True):
    """Random bundle automorphism over M: translation or a vector-field flow,
    combined with an exponential gauge with exact derivative."""
    basis = make_ambient_basis(ambient, kmax)
    kind = kind or rng.choice(["translation", "flow"])
    if kind == "translation":
        phi = Translation(rng.normal(size=ambient.d) * 0.5)
    elif kind == "identity":
        phi = IdentityMap()
    else:
        el = random_left_element(basis, group.dim_o, rng, amp=amp)
        phi = VectorFieldFlow(el, t=1.0)
    gauge = ExpGauge(group, random_left_element(basis, group.dim_o, rng, amp=amp, gauge_only=True))
    pts = (rng.uniform(0, 2 * np.pi, size=(4, ambient.d)) if ambient.kind == "torus"
           else rng.normal(size=(4, ambient.d)))
    return LeftTransformer(group, phi, gauge, check_points=pts if check else None)


def random_right_transformer(group, grid, rng, amp=0.25, kmax=2, rotation_only=False):
    """Random reparametrization (psi, b) with exact Jacobian samples."""
    if rotation_only:
        psi = GridDiffeo.rotation(grid, rng.uniform(0, 2 * np.pi))
    else:
        coeffs = rng.normal(size=(kmax, 2)) * amp / np.arange(1, kmax + 1)[:, None]

        def lift(x):
            out = np.asarray(x, float).copy()
            for k in range(1, kmax + 1):
                out += coeffs[k - 1, 0] * np.cos(k * x) / k + coeffs[k - 1, 1] * np.sin(k * x) / k
            return out

        def dlift(x):
            out = np.ones_like(np.asarray(x, float))
            for k in range(1, kmax + 1):
                out += -coeffs[k - 1, 0] * np.sin(k * x) + coeffs[k - 1, 1] * np.cos(k * x)
            return out

        psi = GridDiffeo.from_callable(grid, lift, dlift)
    if group.kind == "circle":
        b = band_limited(rng, grid, kmax, amp)
    else:
        b = group.exp(band_limited(rng, grid, kmax, amp, width=group.dim_o))
    return RightTransformer(psi, b)
