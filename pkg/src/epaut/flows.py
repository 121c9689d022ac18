"""One-parameter flows used as oracles: right-transformer flows on the source
circle and finite-difference tangent lifts."""

import numpy as np

from .grid import GridDiffeo
from .phase import RightTransformer


def right_flow_transformer(group, grid, el, t, steps=40):
    """Time-t point of the one-parameter subgroup generated by (v, zeta).

    psi_t is the flow of v (fixed-step RK4 on spectrally interpolated samples,
    with the variational equation for the Jacobian); b_t integrates
    db/ds = zeta(psi_s(x)) b with midpoint exponential updates.
    """
    n = grid.n
    v = el.v if el.v is not None else np.zeros(n)
    dv = grid.deriv(v)
    zeta = el.zeta if el.zeta is not None else np.zeros((n, group.dim_o))

    y = grid.x.copy()
    J = np.ones(n)
    b = group.identity((n,))
    h = t / steps

    def vel(pos):
        return grid.interpolate(v, pos)

    def dvel(pos):
        return grid.interpolate(dv, pos)

    for _ in range(steps):
        # RK4 on (y, J)
        k1, l1 = vel(y), dvel(y) * J
        k2, l2 = vel(y + 0.5 * h * k1), dvel(y + 0.5 * h * k1) * (J + 0.5 * h * l1)
        k3, l3 = vel(y + 0.5 * h * k2), dvel(y + 0.5 * h * k2) * (J + 0.5 * h * l2)
        k4, l4 = vel(y + h * k3), dvel(y + h * k3) * (J + h * l3)
        y_new = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        J = J + h * (l1 + 2 * l2 + 2 * l3 + l4) / 6.0
        # midpoint exponential update for the gauge factor
        zeta_mid = grid.interpolate(zeta, y + 0.5 * h * k1)
        b = group.compose(group.exp(h * zeta_mid), b)
        y = y_new

    return RightTransformer(GridDiffeo(grid, y, J), b)
