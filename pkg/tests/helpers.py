"""Shared constructors for the test suite."""

import numpy as np

from epaut.grid import PeriodicGrid
from epaut.groups import make_group
from epaut.phase import AmbientManifold, StateTangent
from epaut.sampling import band_limited, random_state, rng_from_seed


def make_state(group_kind="rotation3", ambient_kind="torus", d=1, n=32, seed=3, **kw):
    group = make_group(group_kind)
    if ambient_kind == "euclidean" and d == 1:
        d = 2
    ambient = AmbientManifold(ambient_kind, d)
    grid = PeriodicGrid(n)
    return random_state(group, ambient, grid, rng_from_seed(seed), **kw)


def random_tangent(state, rng, kmax=3, amp=0.4):
    """Gentle band-limited phase-space tangent at a grid state."""
    g = state.source
    return StateTangent(
        band_limited(rng, g, kmax, amp, width=state.d),
        band_limited(rng, g, kmax, amp, width=state.d),
        band_limited(rng, g, kmax, amp, width=state.dim_o),
        band_limited(rng, g, kmax, amp, width=state.dim_o),
    )


def tangent_lift_left(t, state, tangent):
    """Pushforward of a base tangent (dQ, eta) by the left base action."""
    grp = state.group
    a = t.gauge(state.Q)
    ad_a = grp.adjoint_matrix(a)
    dl = t.gauge.left_logderiv(state.Q)  # (n, d, k)
    gauge_rate = np.einsum("njk,nj->nk", dl, tangent.dQ)
    eta_new = np.einsum("nab,nb->na", ad_a, tangent.eta + gauge_rate)
    dQ_new = np.einsum("nij,nj->ni", t.phi.jac(state.Q), tangent.dQ)
    return StateTangent(dQ_new, None, eta_new, None)


def tangent_lift_right(state, rt, tangent):
    """Pushforward of a base tangent by the right base action (resampling)."""
    from epaut.grid import resample

    g = state.source
    return StateTangent(
        resample(g, tangent.dQ, rt.psi), None, resample(g, tangent.eta, rt.psi), None
    )


__all__ = ["make_state", "random_tangent", "tangent_lift_left", "tangent_lift_right",
           "make_group", "rng_from_seed"]
