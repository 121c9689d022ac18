"""The two momentum maps of the cotangent phase space and their Jacobians.

The left momentum is distribution-valued (weighted Dirac functionals at the
embedded points); it is stored extensionally and evaluated against ambient
test pairs (u, nu).  The right momentum is a regular pair: one-form samples
alpha = P.DQ + <sigma, delta^r gamma> on the source and the charge field
nu = coAd(gamma, sigma).

Jacobians are analytic in the chart coordinates [dQ, dP, eta, dsigma]
(eta right-trivialized), with columns matching StateTangent.pack().
"""

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid
from .phase import pairing


@dataclass
class DiracMomentum:
    """Weighted point momenta (Q_i, w_i P_i, w_i sigma_i)."""

    points: np.ndarray             # (n, d)
    weighted_covectors: np.ndarray  # (n, d)
    weighted_charges: np.ndarray    # (n, dim_o)
    group: object

    def eval(self, el):
        """Pair against an ambient test element (u, nu)."""
        total = float(np.sum(self.weighted_covectors * el.u(self.points)))
        nu = el.nu(self.points)
        if nu is not None:
            total += float(np.sum(self.group.pair(self.weighted_charges, nu)))
        return total

    def eval_many(self, tests):
        return np.array([self.eval(el) for el in tests])


@dataclass
class RightMomentum:
    """One-form samples (modulo exact forms when quotiented) plus the charge field."""

    alpha: np.ndarray   # (n,) or None for dim-0 sources
    nu: np.ndarray      # (n, dim_o)
    weights: np.ndarray
    group: object

    @property
    def alpha_mean(self):
        """Quadrature mean: the class of [alpha] in Omega^1(S^1)/dF."""
        return float(np.dot(self.weights, self.alpha)) if self.alpha is not None else 0.0

    @property
    def alpha_meanfree(self):
        total_w = float(np.sum(self.weights))
        return self.alpha - self.alpha_mean / total_w

    def eval(self, el):
        """Pair against a source test element (v, zeta)."""
        total = 0.0
        if el.v is not None and np.any(el.v != 0):
            if self.alpha is None:
                raise ValueError("dim-0 right momentum has no one-form component")
            total += float(np.dot(self.weights, self.alpha * el.v))
        if el.zeta is not None:
            total += float(np.dot(self.weights, self.group.pair(self.nu, el.zeta)))
        return total

    def eval_many(self, tests):
        return np.array([self.eval(el) for el in tests])


def left_momentum(state):
    w = state.source.w
    return DiracMomentum(state.Q.copy(), w[:, None] * state.P, w[:, None] * state.sigma,
                         state.group)


def right_momentum(state):
    grp = state.group
    nu = grp.coAd(state.gamma, state.sigma)
    if isinstance(state.source, PeriodicGrid):
        alpha = np.einsum("nj,nj->n", state.P, state.DQ()) \
            + grp.pair(state.sigma, state.gamma_logderiv())
    else:
        alpha = None
    return RightMomentum(alpha, nu, state.source.w.copy(), grp)


def generic_momentum_eval(state, tangent):
    """Cotangent momentum pairing <J(z), xi> = <z, xi_Q(z)> for a generator tangent."""
    return pairing(state, tangent)


# ------------------------------------------------------------------ Jacobians


def left_momentum_jacobian(state, tests):
    """Rows: d/d(state) of eval(left_momentum, test), columns in chart order."""
    n, d, k = state.n, state.d, state.dim_o
    w, c = state.source.w, state.group.tau_scale
    rows = np.zeros((len(tests), state.chart_dim))
    for r, el in enumerate(tests):
        u, du = el.u(state.Q), el.du(state.Q)
        dQ = np.einsum("ni,nij->nj", state.P, du)
        nu, dnu = el.nu(state.Q), el.dnu(state.Q)
        dsig = np.zeros((n, k))
        if nu is not None:
            dQ = dQ + c * np.einsum("na,nja->nj", state.sigma, dnu)
            dsig = c * nu
        rows[r] = np.concatenate([
            (w[:, None] * dQ).ravel(),
            (w[:, None] * u).ravel(),
            np.zeros(n * k),
            (w[:, None] * dsig).ravel(),
        ])
    return rows


def left_momentum_jacobian_basis(state, basis):
    """Fast assembly for the full truncated left basis.

    Row order matches bases.left_basis_elements: u-components (i, mode) first,
    then gauge components (a, mode).
    """
    n, d, k = state.n, state.d, state.dim_o
    w, c = state.source.w, state.group.tau_scale
    B = basis.eval(state.Q)        # (n, m)
    G = basis.grad(state.Q)        # (n, d, m)
    m = basis.size
    rows_u = d * m
    rows_nu = k * m
    out = np.zeros((rows_u + rows_nu, state.chart_dim))

    # u-element (i, mode): dQ-block w_n P_ni G_njm, dP-block w_n B delta_i
    dQ_u = np.einsum("n,ni,njm->imnj", w, state.P, G).reshape(rows_u, n * d)
    out[:rows_u, : n * d] = dQ_u
    dP_u = np.zeros((d, m, n, d))
    for i in range(d):
        dP_u[i, :, :, i] = (w[None, :] * B.T)
    out[:rows_u, n * d: 2 * n * d] = dP_u.reshape(rows_u, n * d)

    # nu-element (a, mode): dQ-block w c sigma_na G_njm, dsigma-block w c B delta_a
    dQ_nu = c * np.einsum("n,na,njm->amnj", w, state.sigma, G).reshape(rows_nu, n * d)
    out[rows_u:, : n * d] = dQ_nu
    dS_nu = np.zeros((k, m, n, k))
    for a in range(k):
        dS_nu[a, :, :, a] = c * (w[None, :] * B.T)
    out[rows_u:, 2 * n * d + n * k:] = dS_nu.reshape(rows_nu, n * k)
    return out


def _eta_alpha_pointwise(state):
    """Pointwise eta-derivative factors of alpha: bracket and charge terms."""
    grp = state.group
    C = grp.structure_constants
    dlog = state.gamma_logderiv()
    # d alpha_i / d eta_(i,a) (diagonal part): c * sum_bc C_abc dlog_b sigma_c
    diag = grp.tau_scale * np.einsum("abc,nb,nc->na", C, dlog, state.sigma)
    return diag


def right_momentum_jacobian(state, tests):
    """Rows: d/d(state) of eval(right_momentum, test) for source tests (v, zeta)."""
    n, d, k = state.n, state.d, state.dim_o
    grid = state.source
    w, c = grid.w, state.group.tau_scale
    grp = state.group
    C = grp.structure_constants
    D = grid.deriv_matrix() if isinstance(grid, PeriodicGrid) else None
    DQ = state.DQ() if D is not None else None
    dlog = state.gamma_logderiv() if D is not None else None
    R = grp.adjoint_matrix(state.gamma)
    bracket_diag = _eta_alpha_pointwise(state) if D is not None else None

    rows = np.zeros((len(tests), state.chart_dim))
    for r, el in enumerate(tests):
        v = el.v if el.v is not None else np.zeros(n)
        zeta = el.zeta if el.zeta is not None else np.zeros((n, k))
        blk_Q = np.zeros((n, d))
        blk_P = np.zeros((n, d))
        blk_eta = np.zeros((n, k))
        blk_sig = np.zeros((n, k))
        if D is not None and np.any(v != 0):
            wv = w * v
            blk_Q = -(D @ (wv[:, None] * state.P))      # D^T = -D
            blk_P = wv[:, None] * DQ
            blk_sig += c * wv[:, None] * dlog
            blk_eta += -c * (D @ (wv[:, None] * state.sigma)) + wv[:, None] * bracket_diag
        # charge part: <coAd(gamma, sigma), zeta>
        Rzeta = np.einsum("nab,nb->na", R, zeta)
        blk_sig += c * w[:, None] * Rzeta
        blk_eta += c * w[:, None] * np.einsum("abc,nb,nc->na", C, Rzeta, state.sigma)
        rows[r] = np.concatenate([blk_Q.ravel(), blk_P.ravel(), blk_eta.ravel(), blk_sig.ravel()])
    return rows


def right_momentum_jacobian_nodal(state):
    """Full nodal Jacobian: rows are the alpha samples then the nu components.

    This represents dJ_R without test-basis truncation and is the operator
    whose null space realizes ker TJ_R on the grid.
    """
    n, d, k = state.n, state.d, state.dim_o
    grp = state.group
    c = grp.tau_scale
    C = grp.structure_constants
    grid = state.source
    R = grp.adjoint_matrix(state.gamma)
    n_rows_alpha = n if isinstance(grid, PeriodicGrid) else 0
    out = np.zeros((n_rows_alpha + n * k, state.chart_dim))

    if n_rows_alpha:
        D = grid.deriv_matrix()
        DQ = state.DQ()
        dlog = state.gamma_logderiv()
        bracket_diag = _eta_alpha_pointwise(state)
        idx = np.arange(n)
        blk_Q = np.einsum("nj,nm->nmj", state.P, D).reshape(n, n * d)
        blk_P = np.zeros((n, n, d))
        blk_P[idx, idx] = DQ
        blk_sig = np.zeros((n, n, k))
        blk_sig[idx, idx] = c * dlog
        blk_eta = c * np.einsum("na,nm->nma", state.sigma, D)
        blk_eta[idx, idx] += bracket_diag
        out[:n] = np.concatenate(
            [blk_Q, blk_P.reshape(n, n * d), blk_eta.reshape(n, n * k), blk_sig.reshape(n, n * k)],
            axis=1,
        )

    # nu rows: nu_(i, a) = (R^T sigma)_(i, a)
    idx = np.arange(n)
    blk_sig = np.zeros((n, k, n, k))
    blk_eta = np.zeros((n, k, n, k))
    # d nu_a / d sigma_b = R_ba;  d nu_a / d eta_b = sum_mc R_ma C_bmc sigma_c
    blk_sig[idx, :, idx, :] = np.swapaxes(R, -1, -2)
    blk_eta[idx, :, idx, :] = np.einsum("nma,bmc,nc->nab", R, C, state.sigma)
    out[n_rows_alpha:, 2 * n * d: 2 * n * d + n * k] = blk_eta.reshape(n * k, n * k)
    out[n_rows_alpha:, 2 * n * d + n * k:] = blk_sig.reshape(n * k, n * k)
    return out
