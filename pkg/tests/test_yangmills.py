"""Yang-Mills phase space: trivialization, flows, momentum pair, cocycle,
incompressible tendency, reconstruction."""

import numpy as np
import pytest

from epaut.bases import RightAlgebraElement
from epaut.dualpair import SymplecticChart
from epaut.errors import (ImagesDifferError, NotDivergenceFreeError,
                          NotInLevelSetError, NotVolumePreservingError,
                          QuadratureNotConvergedError)
from epaut.grid import GridDiffeo, PeriodicGrid
from epaut.momenta import RightMomentum
from epaut.phase import RightTransformer, StateTangent, perturb
from epaut.sampling import band_limited, random_vol_state, rng_from_seed
from epaut.yangmills import (ComposedFlow, HamiltonianFlow, IdentityFlow,
                             ProductObservable, SumObservable, TorusFields,
                             check_flow_symplectic, chromo_generator,
                             coboundary, cocycle_B, d_jr_vol,
                             d_jr_vol_quotient, epautvol_rhs, flow_tangent,
                             integrate_chromo, jl_vol, jr_vol,
                             observable_basis, omega_bar, random_observable,
                             reconstruct_vol, reduced_poisson, rho,
                             rho_inverse, cotangent_right_translate,
                             trivialized_hvf, vol_act_right,
                             vol_right_generator)

from helpers import make_group

SO3 = make_group("so3")
U1 = make_group("u1")


def vol_state(seed=101, n=32, group=SO3, dbar=1):
    return random_vol_state(group, PeriodicGrid(n), rng_from_seed(seed), dbar=dbar)


def random_tangent(state, rng, amp=0.4):
    return StateTangent(
        band_limited(rng, state.source, 2, amp, width=state.d),
        band_limited(rng, state.source, 2, amp, width=state.d),
        band_limited(rng, state.source, 2, amp, width=state.dim_o),
        band_limited(rng, state.source, 2, amp, width=state.dim_o),
    )


# -------------------------------------------------------------- trivialization


def test_rho_round_trip_and_equivariance():
    rng = rng_from_seed(102)
    g = SO3.random(rng, (20,))
    m = rng.normal(size=(20, 3))
    aq = rng.normal(size=(20, 2))
    aq2, sigma, g2 = rho(SO3, aq, g, m)
    assert np.allclose(g2, g) and aq2 is aq
    _, g3, m3 = rho_inverse(SO3, aq2, sigma, g2)
    assert np.max(np.abs(m3 - m)) < 1e-12
    # identity group point: sigma equals the body coordinates
    _, sig_e, _ = rho(SO3, aq, SO3.identity((20,)), m)
    assert np.allclose(sig_e, m)
    # equivariance: rho(z . h) = (rho_1(z), g h)
    h = SO3.random(rng, (20,))
    gh, mh = cotangent_right_translate(SO3, g, m, h)
    _, sigma_h, g_h = rho(SO3, aq, gh, mh)
    assert np.max(np.abs(sigma_h - sigma)) < 1e-12
    assert np.allclose(g_h, SO3.compose(g, h))


# ------------------------------------------------------------- symplectic form


def test_omega_bar_matches_chart_and_antisymmetry():
    state = vol_state()
    rng = rng_from_seed(103)
    t1, t2 = random_tangent(state, rng), random_tangent(state, rng)
    chart = SymplecticChart(state)
    assert np.isclose(omega_bar(state, t1, t2), chart.pairing(t1, t2), rtol=1e-12)
    assert np.isclose(omega_bar(state, t1, t2), -omega_bar(state, t2, t1), rtol=1e-12)
    zero = StateTangent.zero(state.n, state.d, state.dim_o)
    assert omega_bar(state, t1, zero) == 0.0


# ------------------------------------------------------------------ observables


def test_observable_validation():
    rng = rng_from_seed(104)
    random_observable(SO3, 2, rng)  # validates at construction

    class Broken(ProductObservable):
        def dq(self, q, p, s):
            return 1.5 * super().dq(q, p, s)

    bad = Broken(SO3, 2, kvec=[1.0, 0.0], p_exp=[1, 0])
    with pytest.raises(ValueError):
        bad.validate(rng)


def test_trivialized_hvf_special_cases():
    rng = rng_from_seed(105)
    q = rng.uniform(0, 2 * np.pi, size=(6, 2))
    p = rng.normal(size=(6, 2))
    s = rng.normal(size=(6, 3))
    # h independent of sigma: pure canonical field
    h = ProductObservable(SO3, 2, kvec=[1.0, 0.0], p_exp=[0, 1])
    dq, dp, ds, eta = trivialized_hvf(SO3, h, q, p, s)
    assert np.allclose(dq, h.dp(q, p, s)) and np.allclose(dp, -h.dq(q, p, s))
    assert np.max(np.abs(ds)) == 0.0 and np.max(np.abs(eta)) == 0.0
    # h = <sigma, xi0>: sigma rotates about xi0, gauge velocity xi0
    xi0 = np.array([0.3, -0.2, 0.5])
    h2 = ProductObservable(SO3, 2, s_lin=SO3.tau_scale * xi0, s_const=0.0)
    dq, dp, ds, eta = trivialized_hvf(SO3, h2, q, p, s)
    assert np.max(np.abs(dq)) == 0.0 and np.max(np.abs(dp)) == 0.0
    assert np.allclose(eta, np.broadcast_to(xi0, (6, 3)))
    assert np.allclose(ds, -SO3.coad(np.broadcast_to(xi0, (6, 3)), s))


def test_trivialized_hvf_matches_canonical_chart_oracle():
    """Push the canonical Hamiltonian field through the trivialization by
    finite differences in a cotangent chart of T*O."""
    rng = rng_from_seed(106)
    h = random_observable(SO3, 2, rng)
    q0 = rng.uniform(0, 2 * np.pi, size=(1, 2))
    p0 = rng.normal(size=(1, 2))
    s0 = rng.normal(size=(1, 3))
    c = SO3.tau_scale
    pi0 = c * s0[0]  # at a = 0 the chart momentum is c J(0)^T sigma = c sigma

    def htilde(q, p, a, pi):
        J = SO3.dexp_right_matrix(a)
        sigma = np.linalg.solve(J.T, pi) / c
        return h.value(q[None, :], p[None, :], sigma[None, :])[0]

    eps = 1e-6
    grad = {}
    for name, dim in (("q", 2), ("p", 2), ("a", 3), ("pi", 3)):
        g = np.zeros(dim)
        for j in range(dim):
            args_p = {"q": q0[0].copy(), "p": p0[0].copy(), "a": np.zeros(3), "pi": pi0.copy()}
            args_m = {k: v.copy() for k, v in args_p.items()}
            args_p[name][j] += eps
            args_m[name][j] -= eps
            g[j] = (htilde(**args_p) - htilde(**args_m)) / (2 * eps)
        grad[name] = g

    qdot, pdot = grad["p"], -grad["q"]
    adot, pidot = grad["pi"], -grad["a"]
    eta_oracle = adot  # J(0) = identity
    # sigma(a, pi) = J(a)^{-T} pi / c: differentiate along (adot, pidot)
    dJT = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = eps
        dJT += adot[j] * (SO3.dexp_right_matrix(e).T - SO3.dexp_right_matrix(-e).T) / (2 * eps)
    sdot_oracle = (-dJT @ pi0 + pidot) / c  # d(J^{-T})|_0 = -dJ^T

    dq, dp, ds, eta = trivialized_hvf(SO3, h, q0, p0, s0)
    for fd, an in ((qdot, dq[0]), (pdot, dp[0]), (eta_oracle, eta[0]), (sdot_oracle, ds[0])):
        assert np.max(np.abs(fd - an)) / max(np.max(np.abs(an)), 1e-9) < 1e-5


# -------------------------------------------------------------- momentum maps


def test_jl_vol_cases_and_invariance():
    state = vol_state(107)
    one = ProductObservable(SO3, 1)
    assert np.isclose(jl_vol(state, one), 2 * np.pi)
    h_p = ProductObservable(SO3, 1, p_exp=[1])
    assert np.isclose(jl_vol(state, h_p), float(np.dot(state.source.w, state.P[:, 0])))
    # invariance under a volume-preserving right transformer (rotation + gauge)
    rng = rng_from_seed(107)
    rt = RightTransformer(
        GridDiffeo.rotation(state.source, rng.uniform(0, 2 * np.pi)),
        SO3.exp(band_limited(rng, state.source, 2, 0.3, width=3)),
    )
    moved = vol_act_right(state, rt)
    h = random_observable(SO3, 1, rng)
    assert abs(jl_vol(moved, h) - jl_vol(state, h)) < 1e-8


def test_jr_vol_against_omega_bar_line_integral():
    """dJ_xi = i_xi omega_bar integrated along a chart line reproduces the
    difference of the momentum pairings."""
    state = vol_state(108)
    rng = rng_from_seed(108)
    tan = random_tangent(state, rng, amp=0.15)
    el = RightAlgebraElement(np.full(state.n, 0.7),
                             band_limited(rng, state.source, 2, 0.4, width=3))

    def eval_jr(z):
        return jr_vol(z).eval(el)

    from numpy.polynomial.legendre import leggauss

    nodes, weights = leggauss(32)
    total = 0.0
    for t, wq in zip(0.5 * (nodes + 1), weights):
        z_t = perturb(state, tan, t)
        gen = vol_right_generator(z_t, el.v[0], el.zeta)
        total += 0.5 * wq * omega_bar(z_t, gen, tan)
    diff = eval_jr(perturb(state, tan, 1.0)) - eval_jr(state)
    assert abs(total - diff) / max(abs(diff), 1e-12) < 1e-6


def test_d_jr_vol_matches_finite_differences():
    state = vol_state(109)
    rng = rng_from_seed(109)
    tan = random_tangent(state, rng)
    zero = StateTangent.zero(state.n, state.d, state.dim_o)
    a0, n0 = d_jr_vol(state, zero)
    assert np.max(np.abs(a0)) == 0.0 and np.max(np.abs(n0)) == 0.0
    eps = 1e-5
    jp, jm = jr_vol(perturb(state, tan, eps)), jr_vol(perturb(state, tan, -eps))
    fd_alpha = (jp.alpha - jm.alpha) / (2 * eps)
    fd_nu = (jp.nu - jm.nu) / (2 * eps)
    alpha_dot, nu_dot = d_jr_vol(state, tan)
    assert np.max(np.abs(fd_alpha - alpha_dot)) / np.max(np.abs(fd_alpha)) < 1e-6
    assert np.max(np.abs(fd_nu - nu_dot)) / np.max(np.abs(fd_nu)) < 1e-6


def test_chromo_generators_in_momentum_kernel():
    state = vol_state(110)
    rng = rng_from_seed(110)
    for _ in range(3):
        h = random_observable(SO3, 1, rng)
        gen = chromo_generator(h, state)
        mean_dot, nu_dot = d_jr_vol_quotient(state, gen)
        scale = max(np.max(np.abs(gen.pack())), 1.0)
        assert abs(mean_dot) / scale < 1e-8
        assert np.max(np.abs(nu_dot)) / scale < 1e-8


def test_chromo_generator_matches_flow():
    state = vol_state(111)
    rng = rng_from_seed(111)
    h = random_observable(SO3, 1, rng)
    gen = chromo_generator(h, state)
    eps = 1e-6
    flow_p = HamiltonianFlow(h, SO3, time=eps)
    flow_m = HamiltonianFlow(h, SO3, time=-eps)
    pts = (state.Q, state.P, state.sigma, state.gamma)
    out_p, out_m = flow_p.apply(pts), flow_m.apply(pts)
    assert np.max(np.abs((out_p[0] - out_m[0]) / (2 * eps) - gen.dQ)) < 1e-6
    assert np.max(np.abs((out_p[1] - out_m[1]) / (2 * eps) - gen.dP)) < 1e-6
    assert np.max(np.abs((out_p[2] - out_m[2]) / (2 * eps) - gen.dsigma)) < 1e-6
    eta_fd = SO3.log(SO3.compose(out_p[3], SO3.inverse(out_m[3]))) / (2 * eps)
    assert np.max(np.abs(eta_fd - gen.eta)) < 1e-6


def test_omega_orthogonality_of_the_two_families():
    state = vol_state(112)
    rng = rng_from_seed(112)
    chromos = [chromo_generator(random_observable(SO3, 1, rng), state) for _ in range(4)]
    rights = []
    for _ in range(4):
        zeta = band_limited(rng, state.source, 2, 0.4, width=3)
        rights.append(vol_right_generator(state, rng.normal() * 0.5, zeta))
    worst = 0.0
    for a in chromos:
        for b in rights:
            num = abs(omega_bar(state, a, b))
            den = max(np.linalg.norm(a.pack()) * np.linalg.norm(b.pack()), 1e-12)
            worst = max(worst, num / den)
    assert worst < 1e-8


def test_noether_drift_along_chromo_flow():
    state = random_vol_state(SO3, PeriodicGrid(48), rng_from_seed(113),
                             s_amp=0.2, p_amp=0.3, g_amp=0.3)
    h = random_observable(SO3, 1, rng_from_seed(113), amp=0.1)
    _, drift = integrate_chromo(state, h, 0.2, 1e-3)
    assert drift < 1e-8


# ------------------------------------------------------------ reduced bracket


def test_reduced_poisson_canonical_and_abelian():
    rng = rng_from_seed(114)
    q = rng.uniform(0, 2 * np.pi, size=(5, 2))
    p = rng.normal(size=(5, 2))
    s = rng.normal(size=(5, 1))
    f = ProductObservable(U1, 2, kvec=[0, 0], p_exp=[0, 0], s_lin=[1.0], s_const=0.0)
    g = ProductObservable(U1, 2, kvec=[0, 0], p_exp=[0, 0], s_lin=[2.0], s_const=0.0)
    assert np.max(np.abs(reduced_poisson(f, g, q, p, s))) == 0.0  # abelian charge bracket


def test_reduced_poisson_sigma_bracket_matches_trivialization_oracle():
    """Push the canonical T*O bracket through the trivialization by finite
    differences; this fixes the sign of the Lie-Poisson summand."""
    rng = rng_from_seed(115)
    s0 = rng.normal(size=3)
    c = SO3.tau_scale
    pi0 = c * s0
    q = np.zeros((1, 2))
    p = np.zeros((1, 2))

    def sigma_of(a, pi):
        return np.linalg.solve(SO3.dexp_right_matrix(a).T, pi) / c

    def canonical_bracket(fa, fb):
        eps = 1e-6
        grads = []
        for func in (fa, fb):
            ga, gpi = np.zeros(3), np.zeros(3)
            for j in range(3):
                e = np.zeros(3)
                e[j] = eps
                ga[j] = (func(sigma_of(e, pi0)) - func(sigma_of(-e, pi0))) / (2 * eps)
                gpi[j] = (func(sigma_of(np.zeros(3), pi0 + e))
                          - func(sigma_of(np.zeros(3), pi0 - e))) / (2 * eps)
            grads.append((ga, gpi))
        (fa_a, fa_pi), (fb_a, fb_pi) = grads
        return float(fa_a @ fb_pi - fa_pi @ fb_a)

    for a, b in ((0, 1), (1, 2), (2, 0)):
        lin_a, lin_b = np.zeros(3), np.zeros(3)
        lin_a[a], lin_b[b] = 1.0, 1.0
        fa = ProductObservable(SO3, 2, s_lin=lin_a, s_const=0.0)
        fb = ProductObservable(SO3, 2, s_lin=lin_b, s_const=0.0)
        ours = reduced_poisson(fa, fb, q, p, s0[None, :])[0]
        oracle = canonical_bracket(lambda s: s[a], lambda s: s[b])
        assert abs(ours - oracle) / max(abs(oracle), 1e-10) < 1e-5


def test_reduced_poisson_jacobi():
    rng = rng_from_seed(116)
    fs = [random_observable(SO3, 1, rng, amp=0.4) for _ in range(3)]
    q = rng.uniform(0, 2 * np.pi, size=(1, 1))
    p = rng.normal(size=(1, 1))
    s = rng.normal(size=(1, 3))
    eps = 1e-5

    def bracket_fd(fa, fb, qq, pp, ss):
        return reduced_poisson(fa, fb, qq, pp, ss)

    def jacobi_term(fa, fb, fc):
        # {fa, {fb, fc}} via finite differences of the inner bracket
        def inner(qq, pp, ss):
            return bracket_fd(fb, fc, qq, pp, ss)

        dq = np.zeros((1, 1))
        dp = np.zeros((1, 1))
        dsg = np.zeros((1, 3))
        for j in range(1):
            e = np.zeros(1)
            e[j] = eps
            dq[0, j] = (inner(q + e, p, s) - inner(q - e, p, s))[0] / (2 * eps)
            dp[0, j] = (inner(q, p + e, s) - inner(q, p - e, s))[0] / (2 * eps)
        for a in range(3):
            e = np.zeros(3)
            e[a] = eps
            dsg[0, a] = (inner(q, p, s + e) - inner(q, p, s - e))[0] / (2 * eps)
        xi_a = fa.dsigma(q, p, s)
        lie = SO3.pair(s, SO3.ad(xi_a, dsg / SO3.tau_scale))[0]
        can = float((np.einsum("nj,nj->n", fa.dq(q, p, s), dp)
                     - np.einsum("nj,nj->n", fa.dp(q, p, s), dq))[0])
        return can + float(lie)

    total = (jacobi_term(fs[0], fs[1], fs[2]) + jacobi_term(fs[1], fs[2], fs[0])
             + jacobi_term(fs[2], fs[0], fs[1]))
    scale = max(abs(jacobi_term(fs[0], fs[1], fs[2])), 1.0)
    assert abs(total) / scale < 1e-6


# ----------------------------------------------------------------- the cocycle


def _flow_point(rng, group=SO3, dbar=1):
    q = rng.uniform(0, 2 * np.pi, size=(1, dbar))
    p = rng.normal(size=(1, dbar)) * 0.4
    s = rng.normal(size=(1, group.dim_o)) * 0.4
    gamma = group.exp(rng.normal(size=(1, group.dim_o)) * 0.4)
    return (q, p, s, gamma)


def test_flow_symplectic_spot_check():
    rng = rng_from_seed(117)
    h = random_observable(SO3, 1, rng, amp=0.3)
    flow = HamiltonianFlow(h, SO3, time=1.0)
    err = check_flow_symplectic(flow, _flow_point(rng), rng)
    assert err < 1e-6


def test_cocycle_identity_flow_vanishes():
    rng = rng_from_seed(118)
    h = random_observable(SO3, 1, rng, amp=0.3)
    p0 = _flow_point(rng)
    val = cocycle_B(IdentityFlow(SO3), HamiltonianFlow(h, SO3, time=0.7), p0)
    assert abs(val) < 1e-9


def test_cocycle_two_cocycle_identity_and_base_point():
    rng = rng_from_seed(119)
    flows = [HamiltonianFlow(random_observable(SO3, 1, rng, amp=0.25), SO3, time=0.5)
             for _ in range(3)]
    g, h, k = flows
    p0 = _flow_point(rng)
    gh = ComposedFlow(g, h)
    hk = ComposedFlow(h, k)
    lhs = cocycle_B(g, h, p0) + cocycle_B(gh, k, p0)
    rhs = cocycle_B(h, k, p0) + cocycle_B(g, hk, p0)
    assert abs(lhs - rhs) < 1e-6
    # base-point change is the coboundary of C(phi) = int_{p0}^{p1}(theta - phi*theta)
    p1 = _flow_point(rng)
    delta_b = cocycle_B(g, h, p1) - cocycle_B(g, h, p0)
    cob = (coboundary(gh, p0, p1) - coboundary(g, p0, p1) - coboundary(h, p0, p1))
    assert abs(delta_b - cob) < 1e-6


# ------------------------------------------------------------- incompressible


def test_epautvol_rhs_taylor_green_is_steady():
    torus = TorusFields(32, 2)
    x, y = torus.x
    u = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)], axis=-1)
    nu = np.zeros((32, 32, 3))
    du, dnu, p = epautvol_rhs(torus, SO3, u, nu)
    assert np.max(np.abs(du)) < 1e-12  # steady Euler solution
    assert np.max(np.abs(dnu)) < 1e-14
    # pressure absorbs the full gradient part: 1/4 (cos 2x + cos 2y) - |u|^2 / 2
    expected = 0.25 * (np.cos(2 * x) + np.cos(2 * y)) - 0.5 * np.sum(u**2, -1)
    assert np.max(np.abs((p - p.mean()) - (expected - expected.mean()))) < 1e-12


def test_epautvol_rhs_structure():
    torus = TorusFields(24, 2)
    x, y = torus.x
    u = np.stack([np.sin(y) * 0.3, np.sin(x) * 0.4], axis=-1)  # div-free shear
    nu = np.stack([np.cos(x), np.sin(y), 0 * x], axis=-1)
    du, dnu, p = epautvol_rhs(torus, SO3, u, nu)
    assert np.max(np.abs(torus.divergence(du))) < 1e-10
    # u = 0: quadratic Lagrangian makes the charge tendency vanish identically
    du0, dnu0, _ = epautvol_rhs(torus, SO3, 0 * u, nu)
    assert np.max(np.abs(dnu0)) < 1e-14
    # abelian transport: dn/dt = -u . grad(n)
    nu1 = nu[..., :1]
    _, dnu_ab, _ = epautvol_rhs(torus, U1, u, nu1)
    expected = -(u[..., 0] * torus.deriv(nu1[..., 0], 0) + u[..., 1] * torus.deriv(nu1[..., 0], 1))
    assert np.max(np.abs(dnu_ab[..., 0] - expected)) < 1e-12
    with pytest.raises(NotDivergenceFreeError):
        epautvol_rhs(torus, SO3, np.stack([np.sin(x), 0 * x], -1), nu)


# -------------------------------------------------------------- reconstruction


def test_reconstruct_vol_roundtrip_and_rejections():
    state = vol_state(120, n=48)
    rng = rng_from_seed(120)
    rt = RightTransformer(
        GridDiffeo.rotation(state.source, rng.uniform(0, 2 * np.pi)),
        SO3.exp(band_limited(rng, state.source, 2, 0.3, width=3)),
    )
    moved = vol_act_right(state, rt)
    rec, errs = reconstruct_vol(state, moved)
    assert max(errs.values()) < 1e-6
    assert np.max(np.abs(rec.b - rt.b)) < 1e-6

    rec_id, errs_id = reconstruct_vol(state, state)
    assert max(errs_id.values()) < 1e-8

    with pytest.raises(NotInLevelSetError):
        reconstruct_vol(state, state.with_fields(P=state.P * 1.1))

    # deliberately non-volume-preserving reparametrization
    coeffs = 0.3
    psi = GridDiffeo.from_callable(state.source, lambda t: t + coeffs * np.sin(t),
                                   lambda t: 1 + coeffs * np.cos(t))
    squeezed = vol_act_right(state, RightTransformer(psi, SO3.identity((state.n,))))
    with pytest.raises((NotVolumePreservingError, NotInLevelSetError)):
        reconstruct_vol(state, squeezed)
