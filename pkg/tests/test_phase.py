"""Phase space: semidirect group, four actions, generators, pairing."""

import numpy as np
import pytest

from epaut.bases import RightAlgebraElement, make_ambient_basis, random_left_element
from epaut.errors import NotRegularError, PointCloudHasNoDerivativeError
from epaut.flows import right_flow_transformer
from epaut.grid import GridDiffeo
from epaut.groups import make_group
from epaut.phase import (ConstantGauge, IdentityMap, LeftTransformer,
                         RightTransformer, StateTangent, Translation,
                         VectorFieldFlow, act_left, act_right, coact_left,
                         coact_right, generator_left, generator_right,
                         pairing, semidirect_compose, semidirect_inverse)
from epaut.sampling import (band_limited, random_left_transformer,
                            random_right_transformer, rng_from_seed)

from helpers import make_state, random_tangent, tangent_lift_left, tangent_lift_right

SO3 = make_group("so3")
U1 = make_group("u1")


# ------------------------------------------------------------ semidirect group


def test_semidirect_identity_and_inverse():
    rng = rng_from_seed(11)
    state = make_state(seed=11)
    t = random_left_transformer(SO3, state.ambient, rng)
    tid = LeftTransformer(SO3, IdentityMap(), ConstantGauge(SO3, SO3.identity()))
    comp = semidirect_compose(t, tid)
    pts = rng.uniform(0, 2 * np.pi, size=(100, state.d))
    assert np.max(np.abs(comp.phi(pts) - t.phi(pts))) < 1e-10
    assert np.max(np.abs(comp.gauge(pts) - t.gauge(pts))) < 1e-10

    inv = semidirect_inverse(t)
    round_trip = semidirect_compose(inv, t)
    assert np.max(np.abs(round_trip.phi(pts) - pts)) < 1e-10
    assert np.max(np.abs(round_trip.gauge(pts) - SO3.identity((100,)))) < 1e-10


def test_semidirect_associativity():
    rng = rng_from_seed(12)
    state = make_state(seed=12)
    ts = [random_left_transformer(SO3, state.ambient, rng, kind="translation"),
          random_left_transformer(SO3, state.ambient, rng, kind="flow"),
          random_left_transformer(SO3, state.ambient, rng, kind="translation")]
    left = semidirect_compose(semidirect_compose(ts[0], ts[1]), ts[2])
    right = semidirect_compose(ts[0], semidirect_compose(ts[1], ts[2]))
    pts = rng.uniform(0, 2 * np.pi, size=(50, state.d))
    assert np.max(np.abs(left.phi(pts) - right.phi(pts))) < 1e-10
    assert np.max(np.abs(left.gauge(pts) - right.gauge(pts))) < 1e-10


def test_apply_automorphism_group_law():
    rng = rng_from_seed(13)
    state = make_state(seed=13)
    t1 = random_left_transformer(SO3, state.ambient, rng, kind="translation")
    t2 = random_left_transformer(SO3, state.ambient, rng, kind="flow")
    x = rng.uniform(0, 2 * np.pi, size=(20, state.d))
    g = SO3.random(rng, (20,))
    y2, h2 = t2.apply_point(x, g)
    y12, h12 = t1.apply_point(y2, h2)
    comp = semidirect_compose(t1, t2)
    yc, hc = comp.apply_point(x, g)
    assert np.max(np.abs(yc - y12)) < 1e-10
    assert np.max(np.abs(hc - h12)) < 1e-10


def test_transformer_derivative_validation_catches_mistakes():
    state = make_state(seed=14)

    class BadMap(Translation):
        def jac(self, x):
            return 1.1 * super().jac(x)

    with pytest.raises(ValueError):
        LeftTransformer(SO3, BadMap(np.zeros(state.d)),
                        ConstantGauge(SO3, SO3.identity()),
                        check_points=np.zeros((3, state.d)))


# -------------------------------------------------------------------- actions


def test_act_left_cases():
    rng = rng_from_seed(15)
    state = make_state(seed=15)
    tid = LeftTransformer(SO3, IdentityMap(), ConstantGauge(SO3, SO3.identity()))
    out = act_left(tid, state)
    assert np.allclose(out.Q, state.Q) and np.allclose(out.gamma, state.gamma)
    # pure gauge: constant a left-multiplies gamma
    g0 = SO3.random(rng)
    tg = LeftTransformer(SO3, IdentityMap(), ConstantGauge(SO3, g0))
    out = act_left(tg, state)
    assert np.allclose(out.gamma, g0 @ state.gamma, atol=1e-13)


def test_act_right_cases():
    state = make_state(seed=16)
    grid = state.source
    g0 = SO3.random(rng_from_seed(0))
    rt = RightTransformer(GridDiffeo.identity(grid), np.broadcast_to(g0, (grid.n, 3, 3)))
    out = act_right(state, rt)
    assert np.allclose(out.gamma, state.gamma @ g0, atol=1e-13)
    # on-grid shift is an exact cyclic shift
    shift = GridDiffeo.rotation(grid, 2 * np.pi / grid.n)
    rt = RightTransformer(shift, SO3.identity((grid.n,)))
    out = act_right(state, rt)
    assert np.max(np.abs(out.gamma - np.roll(state.gamma, -1, axis=0))) < 1e-11
    expected_Q = np.roll(state.Q, -1, axis=0).copy()
    expected_Q[-1] += 2 * np.pi * state.q_winding  # lift continues past the seam
    assert np.max(np.abs(out.Q - expected_Q)) < 1e-10


def test_left_right_actions_commute():
    rng = rng_from_seed(17)
    state = make_state(seed=17, n=64)
    lt = random_left_transformer(SO3, state.ambient, rng, kind="translation")
    rt = random_right_transformer(SO3, state.source, rng)
    ab = act_right(act_left(lt, state), rt)
    ba = act_left(lt, act_right(state, rt))
    assert np.max(np.abs(ab.Q - ba.Q)) < 1e-8
    assert np.max(np.abs(ab.gamma - ba.gamma)) < 1e-8


def test_coact_left_cases():
    rng = rng_from_seed(18)
    state = make_state(seed=18)
    tid = LeftTransformer(SO3, IdentityMap(), ConstantGauge(SO3, SO3.identity()))
    out = coact_left(tid, state)
    for a, b in ((out.P, state.P), (out.sigma, state.sigma)):
        assert np.allclose(a, b, atol=1e-14)
    # constant gauge + translation: P unchanged, sigma coadjointly rotated
    g0 = SO3.random(rng)
    t = LeftTransformer(SO3, Translation(rng.normal(size=state.d)), ConstantGauge(SO3, g0))
    out = coact_left(t, state)
    assert np.allclose(out.P, state.P, atol=1e-13)
    assert np.allclose(out.sigma, SO3.coAd(SO3.inverse(np.broadcast_to(g0, (state.n, 3, 3))), state.sigma), atol=1e-13)


def test_coact_left_pairing_invariance():
    rng = rng_from_seed(19)
    state = make_state(seed=19)
    t = random_left_transformer(SO3, state.ambient, rng)
    tan = random_tangent(state, rng)
    lifted = tangent_lift_left(t, state, tan)
    lhs = pairing(coact_left(t, state), lifted)
    rhs = pairing(state, tan)
    assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(rhs))


def test_coact_right_cases():
    rng = rng_from_seed(20)
    state = make_state(seed=20)
    grid = state.source
    b = SO3.exp(band_limited(rng, grid, 2, 0.4, width=3))
    rt = RightTransformer(GridDiffeo.identity(grid), b)
    out = coact_right(state, rt)
    assert np.allclose(out.P, state.P, atol=1e-12)
    assert np.allclose(out.sigma, state.sigma, atol=1e-12)
    assert np.allclose(out.gamma, state.gamma @ b, atol=1e-12)


def test_coact_right_pairing_invariance():
    rng = rng_from_seed(21)
    state = make_state(seed=21)
    rt = random_right_transformer(SO3, state.source, rng)
    tan = random_tangent(state, rng)
    lifted = tangent_lift_right(state, rt, tan)
    lhs = pairing(coact_right(state, rt), lifted)
    rhs = pairing(state, tan)
    assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(rhs))


def test_regularity_preserved_by_coactions():
    rng = rng_from_seed(22)
    state = make_state(seed=22)
    assert state.is_regular
    lt = random_left_transformer(SO3, state.ambient, rng)
    rt = random_right_transformer(SO3, state.source, rng)
    assert coact_left(lt, state).is_regular
    assert coact_right(state, rt).is_regular
    degenerate = state.with_fields(P=0 * state.P, sigma=0 * state.sigma)
    with pytest.raises(NotRegularError):
        degenerate.require_regular()


# ----------------------------------------------------------------- generators


def test_generator_left_cases_and_fd():
    rng = rng_from_seed(23)
    state = make_state(seed=23)
    basis = make_ambient_basis(state.ambient, 2)
    el = random_left_element(basis, 3, rng, amp=0.4)
    dQ, eta = generator_left(el, state)
    assert np.allclose(dQ, el.u(state.Q))
    # finite differences of the one-parameter left action
    eps = 1e-5
    tp = LeftTransformer(SO3, VectorFieldFlow(el, t=eps), ExpGaugeScaled(el, eps))
    tm = LeftTransformer(SO3, VectorFieldFlow(el, t=-eps), ExpGaugeScaled(el, -eps))
    zp, zm = act_left(tp, state), act_left(tm, state)
    fd_dQ = (zp.Q - zm.Q) / (2 * eps)
    fd_eta = _eta_fd(SO3, zp.gamma, zm.gamma, state.gamma, eps)
    assert np.max(np.abs(fd_dQ - dQ)) / max(np.max(np.abs(dQ)), 1e-12) < 1e-6
    assert np.max(np.abs(fd_eta - eta)) / max(np.max(np.abs(eta)), 1e-12) < 1e-6


def test_generator_right_cases_and_fd():
    rng = rng_from_seed(24)
    state = make_state(seed=24)
    grid = state.source
    el = RightAlgebraElement(band_limited(rng, grid, 2, 0.3),
                             band_limited(rng, grid, 2, 0.3, width=3))
    dQ, eta = generator_right(el, state)
    # v = 0: pure gauge rotation
    el0 = RightAlgebraElement(None, el.zeta)
    dQ0, eta0 = generator_right(el0, state)
    assert np.max(np.abs(dQ0)) == 0
    assert np.allclose(eta0, SO3.Ad(state.gamma, el.zeta))
    # finite differences of the one-parameter right action
    eps = 1e-5
    rp = right_flow_transformer(SO3, grid, el, eps)
    rm = right_flow_transformer(SO3, grid, el, -eps)
    zp, zm = act_right(state, rp), act_right(state, rm)
    fd_dQ = (zp.Q - zm.Q) / (2 * eps)
    fd_eta = _eta_fd(SO3, zp.gamma, zm.gamma, state.gamma, eps)
    assert np.max(np.abs(fd_dQ - dQ)) / np.max(np.abs(dQ)) < 1e-6
    assert np.max(np.abs(fd_eta - eta)) / np.max(np.abs(eta)) < 1e-6


def test_generator_right_needs_grid_for_v():
    from epaut.sampling import random_cloud_state

    state = random_cloud_state(SO3, rng_from_seed(1), n=4)
    el = RightAlgebraElement(np.ones(4), np.zeros((4, 3)))
    with pytest.raises(PointCloudHasNoDerivativeError):
        generator_right(el, state)


def test_pairing_zero_and_bilinear():
    rng = rng_from_seed(25)
    state = make_state(seed=25)
    zero = StateTangent.zero(state.n, state.d, state.dim_o)
    assert pairing(state, zero) == 0.0
    t1, t2 = random_tangent(state, rng), random_tangent(state, rng)
    lin = StateTangent(2 * t1.dQ + t2.dQ, 2 * t1.dP + t2.dP,
                       2 * t1.eta + t2.eta, 2 * t1.dsigma + t2.dsigma)
    assert abs(pairing(state, lin) - 2 * pairing(state, t1) - pairing(state, t2)) < 1e-12


# --------------------------------------------------------------------- helpers


def ExpGaugeScaled(el, eps):
    """Gauge exp(eps * nu(x)) used as the small-time gauge of exp(eps(u, nu))."""
    from epaut.phase import ExpGauge

    class Scaled:
        def nu(self, x):
            return eps * el.nu(x)

        def dnu(self, x):
            return eps * el.dnu(x)

    return ExpGauge(SO3, Scaled())


def _eta_fd(group, gp, gm, g0, eps):
    """Right-trivialized central difference of a group-valued variation."""
    diff = (gp - gm) / (2 * eps)
    from epaut.groups import unhat

    return unhat(diff @ np.swapaxes(g0, -1, -2))
