"""Pure-numpy pairwise kernel sums for the collective peakon dynamics.

This is the fallback twin of the compiled extension `_pairwise`; both expose
the same functions and must agree to roundoff.  Kernel kinds: 0 = exponential
on the line, 1 = periodic (circle of circumference 2*pi).
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def _kernel_d1(kind, alpha, x):
    """Even Green's kernel and its derivative at signed separations x.

    The derivative at coincidence is set to zero (symmetric peak convention).
    """
    if kind == 0:
        ax = np.abs(x)
        g = np.exp(-ax / alpha) / (2.0 * alpha)
        dg = -np.sign(x) * g / alpha
    elif kind == 1:
        r = np.mod(x + np.pi, TWO_PI) - np.pi
        ar = np.abs(r)
        den = 2.0 * alpha * np.sinh(np.pi / alpha)
        g = np.cosh((ar - np.pi) / alpha) / den
        dg = np.sign(r) * np.sinh((ar - np.pi) / alpha) / (den * alpha)
    else:
        raise ValueError(f"unknown 1-d kernel kind {kind}")
    return g, dg


def hamiltonian_d1(Q, P, sigma, w, c, kind1, a1, kind2, a2):
    """1/2 sum_ij w_i w_j (P_i P_j G1(Q_ij) + c sigma_i.sigma_j G2(Q_ij))."""
    diff = Q[:, None] - Q[None, :]
    g1, _ = _kernel_d1(kind1, a1, diff)
    g2, _ = _kernel_d1(kind2, a2, diff)
    ww = np.outer(w, w)
    pp = np.outer(P, P)
    ss = sigma @ sigma.T
    return 0.5 * float(np.sum(ww * (pp * g1 + c * ss * g2)))


def rhs_d1(Q, P, sigma, w, c, kind1, a1, kind2, a2):
    """Pairwise right-hand side: returns (dQ, dP, xi).

    dQ_i = sum_j w_j P_j G1(Q_ij)
    dP_i = -sum_j w_j (P_i P_j G1'(Q_ij) + c sigma_i.sigma_j G2'(Q_ij))
    xi_i = sum_j w_j G2(Q_ij) sigma_j        (the algebra velocity)
    """
    diff = Q[:, None] - Q[None, :]
    g1, dg1 = _kernel_d1(kind1, a1, diff)
    g2, dg2 = _kernel_d1(kind2, a2, diff)
    wP = w * P
    dQ = g1 @ wP
    dP = -(P * (dg1 @ wP) + c * np.einsum("ik,ij,jk->i", sigma, dg2 * w[None, :], sigma))
    xi = (g2 * w[None, :]) @ sigma
    return dQ, dP, xi
