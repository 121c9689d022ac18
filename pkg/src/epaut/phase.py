"""Discretized cotangent phase space of equivariant embeddings, the
semidirect-product transformers, and the four (co)tangent actions.

A state holds the right-trivialized coordinates (Q, P, gamma, sigma):
base embedding Q: S -> M, momentum covector P per unit source volume, the
gauge field gamma: S -> O, and the trivialized fiber momentum
sigma = kappa gamma^{-1}.  kappa itself is never stored.

Tangent vectors are always stored with the gamma-slot right-trivialized
(eta = delta gamma . gamma^{-1}), packed in the chart order
[dQ, dP, eta, dsigma].
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NotRegularError, PointCloudHasNoDerivativeError
from .grid import (PeriodicGrid, resample, resample_group_diffeo,
                   resample_lifted, logderiv_right)

TWO_PI = 2.0 * np.pi


class AmbientManifold:
    """Flat ambient space: Euclidean R^d or the flat torus T^d."""

    def __init__(self, kind, d):
        if kind not in ("euclidean", "torus"):
            raise ValueError(f"unknown ambient kind {kind!r}")
        if d < 1:
            raise ValueError("ambient dimension must be >= 1")
        self.kind = kind
        self.d = d

    def displacement(self, a, b):
        """Shortest displacement a - b (wrapped on the torus)."""
        diff = np.asarray(a, float) - np.asarray(b, float)
        if self.kind == "torus":
            diff = np.mod(diff + np.pi, TWO_PI) - np.pi
        return diff

    def distance(self, a, b):
        return np.linalg.norm(self.displacement(a, b), axis=-1)

    def to_dict(self):
        return {"kind": self.kind, "d": self.d}


@dataclass
class CotangentState:
    """Point of the discretized T*Emb_O(S x O, M x O) in trivialized coordinates."""

    source: object
    group: object
    ambient: AmbientManifold
    Q: np.ndarray          # (n, d); continuous lift samples on the torus
    P: np.ndarray          # (n, d)
    gamma: np.ndarray      # (n,) + group.element_shape
    sigma: np.ndarray      # (n, dim_o)
    q_winding: np.ndarray = None  # (d,) ints, torus winding of Q
    eps_emb: float = 1e-6
    eps_reg: float = 1e-8

    def __post_init__(self):
        def col(a):
            a = np.asarray(a, float)
            return a[:, None] if a.ndim == 1 else a

        self.Q = col(self.Q)
        self.P = col(self.P)
        self.sigma = col(self.sigma)
        self.gamma = np.asarray(self.gamma, float)
        if self.q_winding is None:
            self.q_winding = np.zeros(self.ambient.d)
        self.q_winding = np.asarray(self.q_winding, float)

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def d(self):
        return self.ambient.d

    @property
    def dim_o(self):
        return self.group.dim_o

    @property
    def chart_dim(self):
        return self.n * (2 * self.d + 2 * self.dim_o)

    def with_fields(self, **kw):
        return replace(self, **kw)

    # -- predicates ---------------------------------------------------------

    def embedding_margin(self):
        """min over node pairs of dist_M(Q_i, Q_j) / dist_S(x_i, x_j)."""
        dist_s = self.source.pairwise_distance()
        disp = self.ambient.displacement(self.Q[:, None, :], self.Q[None, :, :])
        dist_m = np.linalg.norm(disp, axis=-1)
        iu = np.triu_indices(self.n, k=1)
        denom = np.where(dist_s[iu] > 0, dist_s[iu], 1.0)
        return float(np.min(dist_m[iu] / denom))

    def regularity_margin(self):
        """min over nodes of sqrt(|P_i|^2 + |sigma_i|^2)."""
        return float(np.sqrt(np.min(np.sum(self.P**2, axis=1) + np.sum(self.sigma**2, axis=1))))

    @property
    def is_regular(self):
        return self.regularity_margin() >= self.eps_reg

    def require_regular(self):
        if not self.is_regular:
            raise NotRegularError(
                f"momentum pair vanishes somewhere: margin {self.regularity_margin():.3e}"
            )

    # -- derived fields ------------------------------------------------------

    def DQ(self):
        """Spectral derivative of the embedding (winding-aware on the torus)."""
        return self.source.deriv(self.Q) if self.ambient.kind == "euclidean" \
            else self.source.deriv_lifted(self.Q, self.q_winding)

    def gamma_logderiv(self):
        return logderiv_right(self.group, self.source, self.gamma)


@dataclass
class StateTangent:
    """Phase-space tangent vector in trivialized slots [dQ, dP, eta, dsigma]."""

    dQ: np.ndarray
    dP: np.ndarray
    eta: np.ndarray
    dsigma: np.ndarray

    def __post_init__(self):
        def col(a):
            if a is None:
                return None
            a = np.asarray(a, float)
            return a[:, None] if a.ndim == 1 else a

        self.dQ, self.dP = col(self.dQ), col(self.dP)
        self.eta, self.dsigma = col(self.eta), col(self.dsigma)

    def pack(self):
        return np.concatenate([self.dQ.ravel(), self.dP.ravel(), self.eta.ravel(), self.dsigma.ravel()])

    @classmethod
    def unpack(cls, vec, n, d, dim_o):
        vec = np.asarray(vec, float)
        nd, nk = n * d, n * dim_o
        return cls(
            vec[:nd].reshape(n, d),
            vec[nd:2 * nd].reshape(n, d),
            vec[2 * nd:2 * nd + nk].reshape(n, dim_o),
            vec[2 * nd + nk:].reshape(n, dim_o),
        )

    @classmethod
    def zero(cls, n, d, dim_o):
        return cls(np.zeros((n, d)), np.zeros((n, d)), np.zeros((n, dim_o)), np.zeros((n, dim_o)))


# ---------------------------------------------------------------- maps on M


class IdentityMap:
    def __call__(self, x):
        return np.asarray(x, float).copy()

    def jac(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(np.eye(x.shape[-1]), x.shape + (x.shape[-1],)).copy()

    def inverse(self, x):
        return np.asarray(x, float).copy()


class Translation:
    def __init__(self, v):
        self.v = np.asarray(v, float)

    def __call__(self, x):
        return np.asarray(x, float) + self.v

    def jac(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(np.eye(self.v.size), x.shape + (self.v.size,)).copy()

    def inverse(self, x):
        return np.asarray(x, float) - self.v


class LinearMap:
    """Invertible linear map of R^d (Euclidean ambient only)."""

    def __init__(self, A):
        self.A = np.asarray(A, float)
        self.Ainv = np.linalg.inv(self.A)

    def __call__(self, x):
        return np.asarray(x, float) @ self.A.T

    def jac(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(self.A, x.shape + (self.A.shape[0],)).copy()

    def inverse(self, x):
        return np.asarray(x, float) @ self.Ainv.T


class VectorFieldFlow:
    """Time-t flow of a closed-form vector field, with the variational equation.

    The Jacobian is integrated alongside the point so the derivative is exact
    up to the integrator tolerance (dense high-order Runge-Kutta).
    """

    def __init__(self, element, t=1.0, rtol=1e-12):
        self.element = element
        self.t = float(t)
        self.rtol = rtol

    def _flow(self, x, t):
        x = np.asarray(x, float)
        pts = np.atleast_2d(x)
        m, d = pts.shape
        y0 = np.concatenate([pts.ravel(), np.broadcast_to(np.eye(d), (m, d, d)).ravel()])

        def rhs(_, y):
            p = y[: m * d].reshape(m, d)
            J = y[m * d:].reshape(m, d, d)
            dp = self.element.u(p)
            dJ = np.einsum("nij,njk->nik", self.element.du(p), J)
            return np.concatenate([dp.ravel(), dJ.ravel()])

        sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=self.rtol, atol=self.rtol)
        if not sol.success:
            raise RuntimeError(f"flow integration failed: {sol.message}")
        yf = sol.y[:, -1]
        out = yf[: m * d].reshape(m, d)
        jac = yf[m * d:].reshape(m, d, d)
        if x.ndim == 1:
            return out[0], jac[0]
        return out, jac

    def __call__(self, x):
        return self._flow(x, self.t)[0]

    def jac(self, x):
        return self._flow(x, self.t)[1]

    def inverse(self, x):
        return self._flow(x, -self.t)[0]


class InverseMap:
    def __init__(self, phi):
        self.phi = phi

    def __call__(self, x):
        return self.phi.inverse(x)

    def jac(self, x):
        y = self.phi.inverse(x)
        return np.linalg.inv(self.phi.jac(y))

    def inverse(self, x):
        return self.phi(x)


class ComposedMap:
    """phi1 o phi2 with chain-rule Jacobian."""

    def __init__(self, phi1, phi2):
        self.phi1 = phi1
        self.phi2 = phi2

    def __call__(self, x):
        return self.phi1(self.phi2(x))

    def jac(self, x):
        y = self.phi2(x)
        return np.einsum("...ij,...jk->...ik", self.phi1.jac(y), self.phi2.jac(x))

    def inverse(self, x):
        return self.phi2.inverse(self.phi1.inverse(x))


# ------------------------------------------------------------------- gauges


class ConstantGauge:
    def __init__(self, group, g0):
        self.group = group
        self.g0 = np.asarray(g0, float)

    def __call__(self, x):
        x = np.asarray(x, float)
        shape = x.shape[:-1]
        return np.broadcast_to(self.g0, shape + self.group.element_shape).copy()

    def left_logderiv(self, x):
        x = np.asarray(x, float)
        return np.zeros(x.shape[:-1] + (x.shape[-1], self.group.dim_o))


class ExpGauge:
    """Gauge a(x) = exp(xi(x)) for a closed-form algebra-valued function xi.

    The left logarithmic derivative is exact through the closed-form
    differential of the group exponential.
    """

    def __init__(self, group, element):
        self.group = group
        self.element = element  # provides nu(x) and dnu(x)

    def __call__(self, x):
        return self.group.exp(self.element.nu(x))

    def left_logderiv(self, x):
        """(..., d, dim_o): direction j -> dexp_left(xi(x), d_j xi(x))."""
        xi = self.element.nu(x)
        dxi = self.element.dnu(x)  # (..., d, dim_o)
        out = np.empty_like(dxi)
        for j in range(dxi.shape[-2]):
            out[..., j, :] = self.group.dexp_right(-xi, dxi[..., j, :])
        return out


class ComposedGauge:
    """(a1 o phi2) * a2 for semidirect composition."""

    def __init__(self, group, gauge1, phi2, gauge2):
        self.group = group
        self.gauge1 = gauge1
        self.phi2 = phi2
        self.gauge2 = gauge2

    def __call__(self, x):
        return self.group.compose(self.gauge1(self.phi2(x)), self.gauge2(x))

    def left_logderiv(self, x):
        # delta^l(b c) = Ad_{c^-1} delta^l b + delta^l c, with b = a1 o phi2
        y = self.phi2(x)
        dl1 = self.gauge1.left_logderiv(y)          # (..., d, k) at y
        J2 = self.phi2.jac(x)                       # (..., d, d)
        pulled = np.einsum("...ji,...jk->...ik", J2, dl1)
        c = self.gauge2(x)
        ad_inv = self.group.adjoint_matrix(self.group.inverse(c))
        term1 = np.einsum("...ab,...ib->...ia", ad_inv, pulled)
        return term1 + self.gauge2.left_logderiv(x)


class InverseGauge:
    """a^-1 o phi^-1 for the semidirect inverse."""

    def __init__(self, group, gauge, phi):
        self.group = group
        self.gauge = gauge
        self.phi = phi

    def __call__(self, x):
        return self.group.inverse(self.gauge(self.phi.inverse(x)))

    def left_logderiv(self, x):
        # delta^l(a^-1) = -delta^r a = -Ad_a delta^l a, pulled back through phi^-1
        y = self.phi.inverse(x)
        dl = self.gauge.left_logderiv(y)
        Jinv = np.linalg.inv(self.phi.jac(y))
        pulled = np.einsum("...ji,...jk->...ik", Jinv, dl)
        ad_a = self.group.adjoint_matrix(self.gauge(y))
        return -np.einsum("...ab,...ib->...ia", ad_a, pulled)


class LeftTransformer:
    """Automorphism (phi, a) of the trivial bundle M x O acting on the left."""

    def __init__(self, group, phi, gauge, check_points=None, check_tol=1e-6):
        self.group = group
        self.phi = phi
        self.gauge = gauge
        if check_points is not None:
            self.check_derivatives(check_points, check_tol)

    def check_derivatives(self, pts, tol=1e-6, eps=1e-6):
        """Finite-difference consistency of the supplied exact derivatives."""
        pts = np.atleast_2d(np.asarray(pts, float))
        d = pts.shape[1]
        J = self.phi.jac(pts)
        dl = self.gauge.left_logderiv(pts)
        for j in range(d):
            e = np.zeros(d)
            e[j] = eps
            fd_phi = (self.phi(pts + e) - self.phi(pts - e)) / (2 * eps)
            if np.max(np.abs(fd_phi - J[:, :, j])) > tol * max(1.0, np.max(np.abs(J))):
                raise ValueError("map derivative inconsistent with finite differences")
            ap = self.gauge(pts + e)
            am = self.gauge(pts - e)
            a0inv = self.group.inverse(self.gauge(pts))
            fd_dl = self.group.log(
                self.group.compose(a0inv, ap)
            ) - self.group.log(self.group.compose(a0inv, am))
            fd_dl = fd_dl / (2 * eps)
            if np.max(np.abs(fd_dl - dl[:, j, :])) > tol * max(1.0, np.max(np.abs(dl))):
                raise ValueError("gauge derivative inconsistent with finite differences")

    def apply_point(self, x, g):
        """Automorphism action on one bundle point: (phi(x), a(x) g)."""
        return self.phi(x), self.group.compose(self.gauge(x), g)


def identity_left_transformer(group, d):
    return LeftTransformer(group, IdentityMap(), ConstantGauge(group, group.identity()))


def semidirect_compose(t1, t2):
    """(phi1, a1)(phi2, a2) = (phi1 o phi2, (a1 o phi2) a2)."""
    group = t1.group
    return LeftTransformer(
        group,
        ComposedMap(t1.phi, t2.phi),
        ComposedGauge(group, t1.gauge, t2.phi, t2.gauge),
    )


def semidirect_inverse(t):
    """(phi, a)^-1 = (phi^-1, a^-1 o phi^-1)."""
    return LeftTransformer(t.group, InverseMap(t.phi), InverseGauge(t.group, t.gauge, t.phi))


@dataclass
class RightTransformer:
    """Automorphism (psi, b) of S x O acting on the right."""

    psi: object  # GridDiffeo
    b: np.ndarray  # group field over the source


# ------------------------------------------------------------------- actions


def act_left(t, state):
    """Base action: (Q, gamma) -> (phi o Q, (a o Q) gamma)."""
    Q_new = t.phi(state.Q)
    gamma_new = t.group.compose(t.gauge(state.Q), state.gamma)
    return state.with_fields(Q=Q_new, gamma=gamma_new)


def act_right(state, rt):
    """Base action: (Q, gamma) -> (Q o psi, (gamma o psi) b)."""
    grid = state.source
    if not isinstance(grid, PeriodicGrid):
        raise PointCloudHasNoDerivativeError("right reparametrization needs a grid source")
    Q_new = resample_lifted(grid, state.Q, state.q_winding, rt.psi)
    gamma_new = state.group.compose(
        resample_group_diffeo(state.group, grid, state.gamma, rt.psi), rt.b
    )
    return state.with_fields(Q=Q_new, gamma=gamma_new)


def coact_left(t, state):
    """Cotangent-lifted left action.

    P' = T*phi^{-1} (P - <sigma, delta^l a o Q>), base moved by act_left,
    sigma' = coAd((a o Q)^{-1}, sigma).
    """
    grp = state.group
    a_at_q = t.gauge(state.Q)
    dl = t.gauge.left_logderiv(state.Q)           # (n, d, k)
    gauge_term = grp.tau_scale * np.einsum("nk,njk->nj", state.sigma, dl)
    p_shifted = state.P - gauge_term
    jac_inv = np.linalg.inv(t.phi.jac(state.Q))
    P_new = np.einsum("nk,nkj->nj", p_shifted, jac_inv)
    sigma_new = grp.coAd(grp.inverse(a_at_q), state.sigma)
    return state.with_fields(
        Q=t.phi(state.Q),
        P=P_new,
        gamma=grp.compose(a_at_q, state.gamma),
        sigma=sigma_new,
    )


def coact_right(state, rt):
    """Cotangent-lifted right action: fields compose, momenta pick up Jac_psi."""
    grid = state.source
    base = act_right(state, rt)
    jac = rt.psi.jac[:, None]
    P_new = resample(grid, state.P, rt.psi) * jac
    sigma_new = resample(grid, state.sigma, rt.psi) * jac
    return base.with_fields(P=P_new, sigma=sigma_new)


# ---------------------------------------------------------------- generators


def generator_left(el, state):
    """Infinitesimal left action on the base: (u o Q, nu o Q), right-trivialized."""
    dQ = el.u(state.Q)
    nu = el.nu(state.Q)
    eta = np.zeros((state.n, state.dim_o)) if nu is None else nu
    return dQ, eta


def generator_right(el, state):
    """Infinitesimal right action on the base: (DQ v, (delta^r gamma) v + Ad_gamma zeta)."""
    grp = state.group
    n, k = state.n, state.dim_o
    dQ = np.zeros((n, state.d))
    eta = np.zeros((n, k))
    if el.v is not None and np.any(el.v != 0):
        if not isinstance(state.source, PeriodicGrid):
            raise PointCloudHasNoDerivativeError("source vector fields need a grid source")
        dQ = state.DQ() * el.v[:, None]
        eta = state.gamma_logderiv() * el.v[:, None]
    if el.zeta is not None:
        eta = eta + grp.Ad(state.gamma, el.zeta)
    return dQ, eta


def pairing(state, tangent):
    """L^2 pairing of the state's momenta with a base tangent vector."""
    grp = state.group
    integrand = np.einsum("nj,nj->n", state.P, tangent.dQ) + grp.pair(state.sigma, tangent.eta)
    return float(np.dot(state.source.w, integrand))


def perturb(state, tangent, eps):
    """Finite displacement of a state along a chart tangent (gamma by exp)."""
    grp = state.group
    gamma_new = grp.compose(grp.exp(eps * tangent.eta), state.gamma)
    return state.with_fields(
        Q=state.Q + eps * tangent.dQ,
        P=state.P + eps * tangent.dP,
        sigma=state.sigma + eps * tangent.dsigma,
        gamma=gamma_new,
    )
