"""The incompressible case on the Yang-Mills phase space: trivialization of
T*Mbar x T*O, the weak symplectic form on embeddings, the momentum pair and
its derivative, Hamiltonian flows of invariant observables, the group
two-cocycle of the central extension, and the incompressible grid tendency.

Points of the phase space T*Mbar x o* are triples (q, p, sigma); states are
embeddings of the source circle into that space together with a gauge field
gamma.  The right-trivialized chart conventions of `dualpair` carry over
verbatim, so VolState reuses the cotangent-state machinery (with the
embedding predicate upgraded to the full triple).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from .errors import (ImagesDifferError, NonMonotoneError,
                     NotDivergenceFreeError, NotInLevelSetError,
                     NotVolumePreservingError, QuadratureNotConvergedError)
from .grid import GridDiffeo, resample, resample_group_diffeo, resample_lifted
from .momenta import RightMomentum, right_momentum
from .phase import CotangentState, StateTangent

TWO_PI = 2.0 * np.pi


class VolState(CotangentState):
    """Embedding of the source into T*Mbar x o* plus a gauge field.

    Field names match the cotangent case: Q holds the base point q (torus
    lift), P holds the fiber covector p.  The embedding predicate tests the
    full triple eta = (q, p, sigma).
    """

    def embedding_margin(self):
        dist_s = self.source.pairwise_distance()
        dq = self.ambient.displacement(self.Q[:, None, :], self.Q[None, :, :])
        dp = self.P[:, None, :] - self.P[None, :, :]
        ds = self.sigma[:, None, :] - self.sigma[None, :, :]
        dist = np.sqrt(np.sum(dq**2, -1) + np.sum(dp**2, -1) + np.sum(ds**2, -1))
        iu = np.triu_indices(self.n, k=1)
        denom = np.where(dist_s[iu] > 0, dist_s[iu], 1.0)
        return float(np.min(dist[iu] / denom))


# ------------------------------------------------------------- trivialization


def rho(group, alpha_q, g, m_body):
    """Right trivialization of T*Mbar x T*O.

    A covector at g is represented by its body (left-trivialized) coordinates
    m; rho sends it to the spatial momentum sigma = coAd(g^-1, m) and the
    group point: rho(alpha_q, (g, m)) = ((alpha_q, sigma), g).
    """
    return alpha_q, group.coAd(group.inverse(g), m_body), g


def rho_inverse(group, alpha_q, sigma, g):
    """Inverse trivialization: body coordinates m = coAd(g, sigma)."""
    return alpha_q, g, group.coAd(g, sigma)


def cotangent_right_translate(group, g, m_body, h):
    """The O-action on T*O in body coordinates: (g, m) . h = (gh, coAd(h, m))."""
    return group.compose(g, h), group.coAd(h, m_body)


# ----------------------------------------------------------------- observables


class Observable:
    """Function on T*Mbar x o* with closed-form first derivatives.

    Subclasses implement value/dq/dp/sigma_grad; the variational derivative
    with respect to sigma (an algebra element, canonically paired) is
    sigma_grad / tau_scale.
    """

    def __init__(self, group):
        self.group = group

    def value(self, q, p, s):
        raise NotImplementedError

    def dq(self, q, p, s):
        raise NotImplementedError

    def dp(self, q, p, s):
        raise NotImplementedError

    def sigma_grad(self, q, p, s):
        raise NotImplementedError

    def dsigma(self, q, p, s):
        """delta h / delta sigma as an algebra element."""
        return self.sigma_grad(q, p, s) / self.group.tau_scale

    def validate(self, rng, n_points=4, eps=1e-6, tol=1e-6):
        """Finite-difference consistency of the supplied partials."""
        d = getattr(self, "d", 2)
        k = self.group.dim_o
        q = rng.uniform(0, TWO_PI, size=(n_points, d))
        p = rng.normal(size=(n_points, d))
        s = rng.normal(size=(n_points, k))
        for arr, grad in ((q, self.dq), (p, self.dp), (s, self.sigma_grad)):
            g = grad(q, p, s)
            for j in range(arr.shape[1]):
                e = np.zeros(arr.shape[1])
                e[j] = eps
                if arr is q:
                    fd = (self.value(q + e, p, s) - self.value(q - e, p, s)) / (2 * eps)
                elif arr is p:
                    fd = (self.value(q, p + e, s) - self.value(q, p - e, s)) / (2 * eps)
                else:
                    fd = (self.value(q, p, s + e) - self.value(q, p, s - e)) / (2 * eps)
                scale = max(np.max(np.abs(g)), 1.0)
                if np.max(np.abs(fd - g[:, j])) > tol * scale:
                    raise ValueError("observable partial inconsistent with finite differences")
        return self


class ProductObservable(Observable):
    """h = f(q) * g(p) * r(sigma): Fourier mode x polynomial x linear/quadratic.

    f(q) = cos(kvec . q + phase); g(p) = prod p_j^{e_j} (or 1);
    r(sigma) = l . sigma + sigma^T A sigma / 2 + r0.
    """

    def __init__(self, group, d, kvec=None, phase=0.0, p_exp=None, s_lin=None,
                 s_quad=None, s_const=1.0):
        super().__init__(group)
        self.d = d
        k = group.dim_o
        self.kvec = np.zeros(d) if kvec is None else np.asarray(kvec, float)
        self.phase = phase
        self.p_exp = np.zeros(d, dtype=int) if p_exp is None else np.asarray(p_exp, int)
        self.s_lin = np.zeros(k) if s_lin is None else np.asarray(s_lin, float)
        self.s_quad = np.zeros((k, k)) if s_quad is None else np.asarray(s_quad, float)
        self.s_quad = 0.5 * (self.s_quad + self.s_quad.T)
        self.s_const = s_const

    def _fq(self, q):
        return np.cos(q @ self.kvec + self.phase)

    def _dfq(self, q):
        return -np.sin(q @ self.kvec + self.phase)[:, None] * self.kvec

    def _gp(self, p):
        return np.prod(p ** self.p_exp, axis=-1)

    def _dgp(self, p):
        out = np.zeros_like(p)
        for j in range(self.d):
            if self.p_exp[j] == 0:
                continue
            e = self.p_exp.copy()
            e[j] -= 1
            out[:, j] = self.p_exp[j] * np.prod(p**e, axis=-1)
        return out

    def _rs(self, s):
        return self.s_const + s @ self.s_lin + 0.5 * np.einsum("na,ab,nb->n", s, self.s_quad, s)

    def _drs(self, s):
        return self.s_lin + s @ self.s_quad

    def value(self, q, p, s):
        return self._fq(q) * self._gp(p) * self._rs(s)

    def dq(self, q, p, s):
        return self._dfq(q) * (self._gp(p) * self._rs(s))[:, None]

    def dp(self, q, p, s):
        return self._dgp(p) * (self._fq(q) * self._rs(s))[:, None]

    def sigma_grad(self, q, p, s):
        return self._drs(s) * (self._fq(q) * self._gp(p))[:, None]


class SumObservable(Observable):
    def __init__(self, group, terms, weights=None):
        super().__init__(group)
        self.terms = list(terms)
        self.d = terms[0].d
        self.weights = np.ones(len(terms)) if weights is None else np.asarray(weights, float)

    def value(self, q, p, s):
        return sum(w * t.value(q, p, s) for w, t in zip(self.weights, self.terms))

    def dq(self, q, p, s):
        return sum(w * t.dq(q, p, s) for w, t in zip(self.weights, self.terms))

    def dp(self, q, p, s):
        return sum(w * t.dp(q, p, s) for w, t in zip(self.weights, self.terms))

    def sigma_grad(self, q, p, s):
        return sum(w * t.sigma_grad(q, p, s) for w, t in zip(self.weights, self.terms))


def observable_basis(group, d, kmax_q=1, p_deg=1, include_sigma=True):
    """Modest shipped family: Fourier modes x momentum monomials x charge forms."""
    k = group.dim_o
    kvecs = [np.zeros(d)]
    for j in range(d):
        for m in range(1, kmax_q + 1):
            e = np.zeros(d)
            e[j] = m
            kvecs.append(e.copy())
    p_exps = [np.zeros(d, int)]
    for j in range(d):
        for m in range(1, p_deg + 1):
            e = np.zeros(d, int)
            e[j] = m
            p_exps.append(e.copy())
    out = []
    for kv in kvecs:
        for phase in ((0.0, np.pi / 2) if np.any(kv != 0) else (0.0,)):
            for pe in p_exps:
                out.append(ProductObservable(group, d, kvec=kv, phase=phase, p_exp=pe))
                if include_sigma:
                    for a in range(k):
                        lin = np.zeros(k)
                        lin[a] = 1.0
                        out.append(ProductObservable(group, d, kvec=kv, phase=phase,
                                                     p_exp=pe, s_lin=lin, s_const=0.0))
    return out


def random_observable(group, d, rng, kmax_q=1, amp=0.4, validate=True):
    k = group.dim_o
    terms, weights = [], []
    for _ in range(4):
        kv = rng.integers(-kmax_q, kmax_q + 1, size=d).astype(float)
        pe = rng.integers(0, 2, size=d)
        lin = rng.normal(size=k) * 0.5
        quad = rng.normal(size=(k, k)) * 0.3
        terms.append(ProductObservable(group, d, kvec=kv, phase=rng.uniform(0, TWO_PI),
                                       p_exp=pe, s_lin=lin, s_quad=quad, s_const=0.7))
        weights.append(amp * rng.normal())
    h = SumObservable(group, terms, weights)
    if validate:
        h.validate(rng)
    return h


# ------------------------------------------------- symplectic form, Hamiltonian


def omega_bar(state, t1, t2):
    """Weak symplectic pairing: quadrature of the pointwise canonical +
    right-trivialized fiber form."""
    grp = state.group
    w = state.source.w
    term = (np.einsum("nj,nj->n", t1.dQ, t2.dP) - np.einsum("nj,nj->n", t1.dP, t2.dQ)
            + grp.pair(t2.dsigma, t1.eta) - grp.pair(t1.dsigma, t2.eta)
            - grp.pair(state.sigma, grp.ad(t1.eta, t2.eta)))
    return float(np.dot(w, term))


def trivialized_hvf(group, h, q, p, s):
    """Hamiltonian field of an invariant observable in trivialized coordinates:
    (dq, dp, dsigma, eta) = (dh/dp, -dh/dq, -coad(dh/dsigma, sigma), dh/dsigma)."""
    xi = h.dsigma(q, p, s)
    return h.dp(q, p, s), -h.dq(q, p, s), -group.coad(xi, s), xi


def chromo_generator(h, state):
    """Infinitesimal action of the Hamiltonian automorphism generated by h."""
    dq, dp, ds, eta = trivialized_hvf(state.group, h, state.Q, state.P, state.sigma)
    return StateTangent(dq, dp, eta, ds)


def jl_vol(state, h):
    """Pushforward-distribution pairing: quadrature of h along the embedding."""
    return float(np.dot(state.source.w, h.value(state.Q, state.P, state.sigma)))


def jr_vol(state):
    """Right momentum ([p.Dq + <sigma, delta^r gamma>], coAd(gamma, sigma)).

    Same trivialized formula as the compressible case; the one-form component
    is compared modulo exact forms (its quadrature mean classifies the class).
    """
    return right_momentum(state)


def d_jr_vol(state, tangent):
    """Directional derivative of jr_vol: nodal (alpha_dot, nu_dot)."""
    grp = state.group
    grid = state.source
    j = tangent.eta
    dlog = state.gamma_logderiv()
    force = grp.coad(j, state.sigma) + tangent.dsigma
    alpha_dot = (np.einsum("nj,nj->n", tangent.dP, state.DQ())
                 + np.einsum("nj,nj->n", state.P, grid.deriv(tangent.dQ))
                 + grp.pair(force, dlog) + grp.pair(state.sigma, grid.deriv(j)))
    nu_dot = grp.coAd(state.gamma, force)
    return alpha_dot, nu_dot


def d_jr_vol_quotient(state, tangent):
    """Class representative of the derivative: (mean of alpha_dot, nu_dot)."""
    alpha_dot, nu_dot = d_jr_vol(state, tangent)
    return float(np.dot(state.source.w, alpha_dot)), nu_dot


def vol_right_generator(state, v_const, zeta):
    """Generator of the volume-preserving right action (v constant on the circle)."""
    grid = state.source
    v = float(v_const)
    eta = state.gamma_logderiv() * v
    if zeta is not None:
        eta = eta + state.group.Ad(state.gamma, zeta)
    return StateTangent(state.DQ() * v, grid.deriv(state.P) * v, eta,
                        grid.deriv(state.sigma) * v)


def vol_act_right(state, rt):
    """Right action on embeddings: eta o psi (no Jacobian weights), gauge composed."""
    grid = state.source
    q_new = resample_lifted(grid, state.Q, state.q_winding, rt.psi)
    p_new = resample(grid, state.P, rt.psi)
    s_new = resample(grid, state.sigma, rt.psi)
    gamma_new = state.group.compose(
        resample_group_diffeo(state.group, grid, state.gamma, rt.psi), rt.b)
    return state.with_fields(Q=q_new, P=p_new, sigma=s_new, gamma=gamma_new)


def reduced_poisson(f, g, q, p, s):
    """Reduced bracket: canonical in (q, p) plus the sigma Lie-Poisson summand
    + <sigma, [df/dsigma, dg/dsigma]> (sign fixed by the trivialization oracle)."""
    grp = f.group
    can = (np.einsum("nj,nj->n", f.dq(q, p, s), g.dp(q, p, s))
           - np.einsum("nj,nj->n", f.dp(q, p, s), g.dq(q, p, s)))
    lie = grp.pair(s, grp.ad(f.dsigma(q, p, s), g.dsigma(q, p, s)))
    return can + lie


# ------------------------------------------------------------ Hamiltonian flows


def _pack_points(q, p, s, gamma):
    return q.copy(), p.copy(), s.copy(), gamma.copy()


class HamiltonianFlow:
    """Time-t map of the trivialized Hamiltonian field of an observable.

    Applies to point batches (q, p, sigma, gamma) with a dense high-order
    adaptive integrator; the gauge component follows gdot = hat(eta) g and is
    re-projected onto the group at readout.
    """

    def __init__(self, h, group, time=1.0, rtol=1e-12):
        self.h = h
        self.group = group
        self.time = float(time)
        self.rtol = rtol

    def apply(self, pts):
        q, p, s, gamma = pts
        m, d = q.shape
        k = s.shape[1]
        gshape = gamma.shape[1:]
        gsize = int(np.prod(gshape)) if gshape else 1

        def rhs(_, y):
            off = 0
            qq = y[off:off + m * d].reshape(m, d); off += m * d
            pp = y[off:off + m * d].reshape(m, d); off += m * d
            ss = y[off:off + m * k].reshape(m, k); off += m * k
            gg = y[off:].reshape((m,) + gshape)
            dq, dp, ds, eta = trivialized_hvf(self.group, self.h, qq, pp, ss)
            if self.group.kind == "circle":
                dg = eta[:, 0]
            else:
                from .groups import hat
                dg = hat(eta) @ gg
            return np.concatenate([dq.ravel(), dp.ravel(), ds.ravel(), dg.ravel()])

        y0 = np.concatenate([q.ravel(), p.ravel(), s.ravel(), gamma.ravel()])
        sol = solve_ivp(rhs, (0.0, self.time), y0, method="DOP853",
                        rtol=self.rtol, atol=self.rtol)
        if not sol.success:
            raise RuntimeError(f"flow integration failed: {sol.message}")
        y = sol.y[:, -1]
        off = 0
        qq = y[off:off + m * d].reshape(m, d); off += m * d
        pp = y[off:off + m * d].reshape(m, d); off += m * d
        ss = y[off:off + m * k].reshape(m, k); off += m * k
        gg = self.group.project(y[off:].reshape((m,) + gshape))
        return qq, pp, ss, gg


class ComposedFlow:
    """Composition g o h of flow maps (apply h first)."""

    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner
        self.group = outer.group

    def apply(self, pts):
        return self.outer.apply(self.inner.apply(pts))


class IdentityFlow:
    def __init__(self, group):
        self.group = group

    def apply(self, pts):
        return _pack_points(*pts)


def flow_tangent(flow, pts, direction, eps=1e-6):
    """Pushforward of chart tangents by finite differences of the flow map.

    `direction` is (dq, dp, ds, eta) per point; the gamma perturbation moves
    through exp(+-eps eta) gamma and the image eta is read off from the
    group-logarithm difference of the two branches.
    """
    grp = flow.group
    q, p, s, gamma = pts
    dq, dp, ds, eta = direction
    gp = grp.compose(grp.exp(eps * eta), gamma)
    gm = grp.compose(grp.exp(-eps * eta), gamma)
    out_p = flow.apply((q + eps * dq, p + eps * dp, s + eps * ds, gp))
    out_m = flow.apply((q - eps * dq, p - eps * dp, s - eps * ds, gm))
    dq_o = (out_p[0] - out_m[0]) / (2 * eps)
    dp_o = (out_p[1] - out_m[1]) / (2 * eps)
    ds_o = (out_p[2] - out_m[2]) / (2 * eps)
    eta_o = grp.log(grp.compose(out_p[3], grp.inverse(out_m[3]))) / (2 * eps)
    mid = flow.apply(pts)
    return mid, (dq_o, dp_o, ds_o, eta_o)


def theta_pairing(group, pts, direction):
    """Canonical one-form theta(t) = p . dq + <sigma, eta> at each point."""
    q, p, s, _ = pts
    dq, _, _, eta = direction
    return np.einsum("nj,nj->n", p, dq) + group.pair(s, eta)


def symplectic_pairing(group, pts, d1, d2):
    """Pointwise symplectic form (canonical + trivialized fiber block)."""
    _, _, s, _ = pts
    val = (np.einsum("nj,nj->n", d1[0], d2[1]) - np.einsum("nj,nj->n", d1[1], d2[0])
           + group.pair(d2[2], d1[3]) - group.pair(d1[2], d2[3])
           - group.pair(s, group.ad(d1[3], d2[3])))
    return val


def check_flow_symplectic(flow, pts, rng, eps=1e-6):
    """Spot-check: omega(T phi u, T phi v) - omega(u, v), max over the batch."""
    grp = flow.group
    q, p, s, _ = pts
    m, d = q.shape
    k = s.shape[1]

    def rand_dir():
        return (rng.normal(size=(m, d)), rng.normal(size=(m, d)),
                rng.normal(size=(m, k)), rng.normal(size=(m, k)))

    u, v = rand_dir(), rand_dir()
    mid, Tu = flow_tangent(flow, pts, u, eps)
    _, Tv = flow_tangent(flow, pts, v, eps)
    before = symplectic_pairing(grp, pts, u, v)
    after = symplectic_pairing(grp, mid, Tu, Tv)
    return float(np.max(np.abs(after - before)))


# ------------------------------------------------------------------ the cocycle


def _chart_path(group, pts_a, pts_b, svals):
    """Straight chart line between two single points, gamma via the exponential."""
    qa, pa, sa, ga = pts_a
    qb, pb, sb, gb = pts_b
    delta = group.log(group.compose(gb, group.inverse(ga)))[0]
    q = qa + svals[:, None] * (qb - qa)
    p = pa + svals[:, None] * (pb - pa)
    s = sa + svals[:, None] * (sb - sa)
    gamma = group.compose(group.exp(np.outer(svals, delta)), ga)
    tangent = (np.broadcast_to(qb - qa, q.shape).copy(),
               np.broadcast_to(pb - pa, p.shape).copy(),
               np.broadcast_to(sb - sa, s.shape).copy(),
               np.broadcast_to(delta, s.shape[:1] + delta.shape).copy())
    return (q, p, s, gamma), tangent


def theta_path_integral(flow, pts_a, pts_b, order=24, fd_step=1e-6):
    """integral over the chart line from a to b of (theta - flow^* theta)."""
    group = flow.group
    nodes, weights = leggauss(order)
    svals = 0.5 * (nodes + 1.0)
    path, tangent = _chart_path(group, pts_a, pts_b, svals)
    base = theta_pairing(group, path, tangent)
    moved, pushed = flow_tangent(flow, path, tangent, eps=fd_step)
    pulled = theta_pairing(group, moved, pushed)
    return 0.5 * float(np.dot(weights, base - pulled))


def cocycle_B(flow1, flow2, p0, order=24, check_order=None, tol=1e-8):
    """Group two-cocycle B(phi1, phi2) = integral_{p0}^{phi2(p0)} (theta - phi1^* theta).

    p0 is a single phase-space point (q, p, sigma, gamma) with batch axis 1.
    The path is the straight chart line; refinement doubling guards the
    quadrature (QuadratureNotConverged on disagreement).
    """
    endpoint = flow2.apply(p0)
    val = theta_path_integral(flow1, p0, endpoint, order=order)
    if check_order is None:
        check_order = 2 * order
    val2 = theta_path_integral(flow1, p0, endpoint, order=check_order)
    if abs(val - val2) > tol * max(1.0, abs(val)):
        raise QuadratureNotConvergedError(
            f"path quadrature changed by {abs(val - val2):.3e} under refinement")
    return val2


def coboundary(flow, pts_a, pts_b, order=24):
    """C(phi) = integral_{a}^{b} (theta - phi^* theta): the base-point coboundary."""
    return theta_path_integral(flow, pts_a, pts_b, order=order)


# -------------------------------------------------------- chromo-flow marching


def _dexpinv(group, u, xi):
    """Truncated inverse differential of exp: enough terms for order 4."""
    br1 = group.ad(u, xi)
    return xi - 0.5 * br1 + group.ad(u, br1) / 12.0


def rkmk4_step(state, h, vf):
    """Fourth-order Munthe-Kaas step for a field vf: state -> StateTangent."""
    grp = state.group
    k1 = vf(state)

    def advance(coeff, k):
        u = h * coeff * k.eta
        return state.with_fields(
            Q=state.Q + h * coeff * k.dQ,
            P=state.P + h * coeff * k.dP,
            sigma=state.sigma + h * coeff * k.dsigma,
            gamma=grp.compose(grp.exp(u), state.gamma),
        ), u

    # stage 2
    z2, u2 = advance(0.5, k1)
    k2 = vf(z2)
    k2 = StateTangent(k2.dQ, k2.dP, _dexpinv(grp, u2, k2.eta), k2.dsigma)
    z3, u3 = advance(0.5, k2)
    k3 = vf(z3)
    k3 = StateTangent(k3.dQ, k3.dP, _dexpinv(grp, u3, k3.eta), k3.dsigma)
    z4, u4 = advance(1.0, k3)
    k4 = vf(z4)
    k4 = StateTangent(k4.dQ, k4.dP, _dexpinv(grp, u4, k4.eta), k4.dsigma)

    def combo(attr):
        return (getattr(k1, attr) + 2 * getattr(k2, attr)
                + 2 * getattr(k3, attr) + getattr(k4, attr)) / 6.0

    v = h * combo("eta")
    return state.with_fields(
        Q=state.Q + h * combo("dQ"),
        P=state.P + h * combo("dP"),
        sigma=state.sigma + h * combo("dsigma"),
        gamma=grp.compose(grp.exp(v), state.gamma),
    )


def integrate_chromo(state, h_obs, t_final, dt):
    """March the chromomorphism flow with RKMK4, recording momentum drift."""
    steps = int(round(t_final / dt))
    alpha_means = np.empty(steps + 1)
    charges = np.empty((steps + 1,) + state.sigma.shape)
    z = state
    for m in range(steps + 1):
        jr = jr_vol(z)
        alpha_means[m] = jr.alpha_mean
        charges[m] = jr.nu
        if m < steps:
            z = rkmk4_step(z, dt, lambda zz: chromo_generator(h_obs, zz))
    drift = max(float(np.max(np.abs(alpha_means - alpha_means[0]))),
                float(np.max(np.abs(charges - charges[0]))))
    return z, drift


# ----------------------------------------------------------- grid incompressible


class TorusFields:
    """Spectral helpers for vector/charge fields sampled on a uniform T^d grid."""

    def __init__(self, ng, d):
        self.ng = ng
        self.d = d
        k1 = np.fft.fftfreq(ng, d=1.0 / ng)
        self.k = np.meshgrid(*([k1] * d), indexing="ij")
        self.k2 = sum(kk**2 for kk in self.k)
        self.k2inv = np.where(self.k2 > 0, 1.0 / np.where(self.k2 > 0, self.k2, 1.0), 0.0)
        xs = TWO_PI * np.arange(ng) / ng
        self.x = np.meshgrid(*([xs] * d), indexing="ij")

    def deriv(self, f, axis):
        fh = np.fft.fftn(f, axes=tuple(range(self.d)))
        shape = self.k[axis].shape + (1,) * (f.ndim - self.d)
        return np.real(np.fft.ifftn(1j * self.k[axis].reshape(shape) * fh,
                                    axes=tuple(range(self.d))))

    def divergence(self, u):
        return sum(self.deriv(u[..., j], j) for j in range(self.d))

    def grad(self, f):
        return np.stack([self.deriv(f, j) for j in range(self.d)], axis=-1)

    def solve_poisson(self, f):
        fh = np.fft.fftn(f, axes=tuple(range(self.d)))
        return np.real(np.fft.ifftn(-fh * self.k2inv, axes=tuple(range(self.d))))

    def leray(self, F):
        """Project a covector field onto divergence-free fields; returns (proj, p)."""
        p = self.solve_poisson(self.divergence(F))
        return F - self.grad(p), p


def epautvol_rhs(torus, group, u, nu, div_tol=1e-10):
    """Tendency of the incompressible equations for the quadratic Lagrangian
    l = 1/2 |u|^2 + 1/2 |nu|^2 (L^2 norms with the metric tau on charges).

    Returns (du/dt momentum, dnu/dt, pressure).  The velocity tendency is
    Leray-projected; the input must be divergence-free.
    """
    div = torus.divergence(u)
    if np.max(np.abs(div)) > div_tol:
        raise NotDivergenceFreeError(f"div u = {np.max(np.abs(div)):.3e}")
    c = group.tau_scale
    d = torus.d
    # Lie derivative of the one-form u-flat: u.grad(u)_j + u_k grad_j(u_k)
    adv = np.zeros_like(u)
    for j in range(d):
        adv[..., j] = sum(u[..., m] * torus.deriv(u[..., j], m) for m in range(d))
        adv[..., j] += sum(u[..., m] * torus.deriv(u[..., m], j) for m in range(d))
    charge_force = c * sum(
        nu[..., a][..., None] * torus.grad(nu[..., a]) for a in range(nu.shape[-1])
    )
    F = -(adv + charge_force)
    proj, p = torus.leray(F)
    # charge equation: dn/dt = -grad(n).u - coad(nu, n), with n = nu in flat coords
    ndot = np.zeros_like(nu)
    for a in range(nu.shape[-1]):
        ndot[..., a] = -sum(u[..., m] * torus.deriv(nu[..., a], m) for m in range(d))
    ndot -= group.coad(nu, nu)
    return proj, ndot, p


# --------------------------------------------------------------- reconstruction


def reconstruct_vol(z1, z2, observables=None, level_tol=1e-6, verify_tol=1e-6,
                    jac_tol=1e-6):
    """Recover a volume-preserving (psi, b) with z2 = z1 . (psi, b).

    psi comes from arc-length matching of the phase-space embeddings; its
    Jacobian must be one up to jac_tol (the circle has only rotations).
    """
    grp = z1.group
    grid = z1.source
    if observables is None:
        observables = observable_basis(grp, z1.d, kmax_q=1, p_deg=1)
    f1 = np.array([jl_vol(z1, h) for h in observables])
    f2 = np.array([jl_vol(z2, h) for h in observables])
    if np.max(np.abs(f1 - f2)) > level_tol * max(1.0, np.max(np.abs(f1))):
        raise NotInLevelSetError(
            f"distribution pairings differ by {np.max(np.abs(f1 - f2)):.3e}")

    # project each eta2 node onto the eta1 curve in T*Mbar x o*
    n_dense = 16 * grid.n
    s_dense = TWO_PI * np.arange(n_dense) / n_dense
    q1 = grid.interpolate_lifted(z1.Q, z1.q_winding, s_dense)
    p1 = grid.interpolate(z1.P, s_dense)
    s1 = grid.interpolate(z1.sigma, s_dense)
    dq = z1.ambient.displacement(z2.Q[:, None, :], q1[None, :, :])
    dp = z2.P[:, None, :] - p1[None, :, :]
    ds = z2.sigma[:, None, :] - s1[None, :, :]
    dist2 = np.sum(dq**2, -1) + np.sum(dp**2, -1) + np.sum(ds**2, -1)
    idx = np.argmin(dist2, axis=1)
    s = s_dense[idx]

    # Newton refinement on the squared distance in the product space
    dQ1 = grid.deriv_lifted(z1.Q, z1.q_winding)
    dP1 = grid.deriv(z1.P)
    dS1 = grid.deriv(z1.sigma)
    for _ in range(40):
        qs = grid.interpolate_lifted(z1.Q, z1.q_winding, s)
        ps = grid.interpolate(z1.P, s)
        ss = grid.interpolate(z1.sigma, s)
        tq = grid.interpolate(dQ1 - z1.q_winding, s) + z1.q_winding
        tp = grid.interpolate(dP1, s)
        ts = grid.interpolate(dS1, s)
        rq = z1.ambient.displacement(z2.Q, qs)
        rp, rs = z2.P - ps, z2.sigma - ss
        g = -(np.sum(rq * tq, 1) + np.sum(rp * tp, 1) + np.sum(rs * ts, 1))
        gp = np.sum(tq**2, 1) + np.sum(tp**2, 1) + np.sum(ts**2, 1)
        step = g / gp
        s = s - step
        if np.max(np.abs(step)) < 1e-13:
            break
    qs = grid.interpolate_lifted(z1.Q, z1.q_winding, s)
    ps = grid.interpolate(z1.P, s)
    ss = grid.interpolate(z1.sigma, s)
    resid = np.sqrt(np.sum(z1.ambient.displacement(z2.Q, qs)**2, 1)
                    + np.sum((z2.P - ps)**2, 1) + np.sum((z2.sigma - ss)**2, 1))
    if np.max(resid) > 1e-6 * max(1.0, float(np.max(np.abs(z1.P)))):
        raise ImagesDifferError(f"embedding images differ by {np.max(resid):.3e}")

    s = np.unwrap(s)
    s -= np.round((s[0] - grid.x[0]) / TWO_PI) * TWO_PI
    if np.any(np.diff(np.append(s, s[0] + TWO_PI)) <= 0):
        raise NonMonotoneError("recovered reparametrization is not monotone")
    psi = GridDiffeo.from_samples(grid, s)
    if np.max(np.abs(psi.jac - 1.0)) > jac_tol:
        raise NotVolumePreservingError(
            f"Jacobian deviates from one by {np.max(np.abs(psi.jac - 1.0)):.3e}")

    gamma1_at_psi = resample_group_diffeo(grp, grid, z1.gamma, psi)
    b = grp.compose(grp.inverse(gamma1_at_psi), z2.gamma)
    from .phase import RightTransformer

    rt = RightTransformer(psi, b)
    check = vol_act_right(z1, rt)
    errs = {
        "q": float(np.max(np.abs(z1.ambient.displacement(check.Q, z2.Q)))),
        "p": float(np.max(np.abs(check.P - z2.P))),
        "gamma": float(np.max(np.abs(check.gamma - z2.gamma))),
        "sigma": float(np.max(np.abs(check.sigma - z2.sigma))),
    }
    if max(errs.values()) > verify_tol:
        raise ImagesDifferError(f"verification failed: {errs}")
    return rt, errs
