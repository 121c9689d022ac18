"""Numerical certification of the dual-pair structure: symplectic chart,
cotangent-lifted generator bases, kernel/orbit comparisons, the constructive
isotropy witness, and reconstruction of right transformers.

Chart layout is StateTangent.pack order: [dQ, dP, eta, dsigma], all blocks
node-major.  The (eta, sigma) block carries the right-trivialized fiber
symplectic form

    omega((eta1, ds1), (eta2, ds2)) = <ds2, eta1> - <ds1, eta2> - <sigma, [eta1, eta2]>,

whose bracket-term sign is fixed by the finite-difference oracle in
validate_chart (exterior derivative of the pulled-back canonical one-form);
the same sign makes the discrete Noether identity dJ_xi = i_xi Omega exact.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import orth, subspace_angles, svd

from .bases import left_basis_elements, right_basis_elements
from .errors import (ImagesDifferError, NonMonotoneError, NotConormalError,
                     NotInLevelSetError, ProjectionFailedError)
from .grid import GridDiffeo, resample_group_diffeo
from .momenta import left_momentum
from .phase import RightTransformer, StateTangent, coact_right

TWO_PI = 2.0 * np.pi


# ------------------------------------------------------------------ the chart


class SymplecticChart:
    """Weighted canonical + trivialized-fiber symplectic form as a matrix."""

    def __init__(self, state):
        self.state = state
        n, d, k = state.n, state.d, state.dim_o
        w = state.source.w
        c = state.group.tau_scale
        C = state.group.structure_constants
        dim = state.chart_dim
        O = np.zeros((dim, dim))
        nd, nk = n * d, n * k
        iq = np.arange(nd)
        O[iq, nd + iq] = np.repeat(w, d)
        O[nd + iq, iq] = -np.repeat(w, d)
        ie = 2 * nd + np.arange(nk)
        O[ie, nk + ie] = c * np.repeat(w, k)
        O[nk + ie, ie] = -c * np.repeat(w, k)
        # fiber bracket term: -w c <sigma, [e_a, e_b]> on the eta-eta block
        bracket = -c * np.einsum("nm,abm->nab", state.sigma, C)
        for i in range(n):
            sl = slice(2 * nd + i * k, 2 * nd + (i + 1) * k)
            O[sl, sl] = w[i] * bracket[i]
        self.omega = O

    @property
    def dim(self):
        return self.omega.shape[0]

    def pairing(self, t1, t2):
        return float(t1.pack() @ self.omega @ t2.pack())

    def condition_number(self):
        s = np.linalg.svd(self.omega, compute_uv=False)
        return float(s[0] / s[-1])


# -------------------------------------------------------- cotangent generators


def cotangent_generator_left(el, state):
    """Analytic derivative of the one-parameter left cotangent action."""
    grp = state.group
    c = grp.tau_scale
    u, du = el.u(state.Q), el.du(state.Q)
    dP = -np.einsum("ni,nij->nj", state.P, du)
    nu, dnu = el.nu(state.Q), el.dnu(state.Q)
    n, k = state.n, state.dim_o
    if nu is None:
        eta = np.zeros((n, k))
        dsigma = np.zeros((n, k))
    else:
        dP = dP - c * np.einsum("na,nja->nj", state.sigma, dnu)
        eta = nu
        dsigma = -grp.coad(nu, state.sigma)
    return StateTangent(u, dP, eta, dsigma)


def cotangent_generator_right(el, state):
    """Analytic derivative of the one-parameter right cotangent action."""
    grp = state.group
    grid = state.source
    n, d, k = state.n, state.d, state.dim_o
    dQ = np.zeros((n, d))
    dP = np.zeros((n, d))
    eta = np.zeros((n, k))
    dsigma = np.zeros((n, k))
    if el.v is not None and np.any(el.v != 0):
        v = el.v
        dv = grid.deriv(v)
        dQ = state.DQ() * v[:, None]
        dP = grid.deriv(state.P) * v[:, None] + state.P * dv[:, None]
        dsigma = grid.deriv(state.sigma) * v[:, None] + state.sigma * dv[:, None]
        eta = state.gamma_logderiv() * v[:, None]
    if el.zeta is not None:
        eta = eta + grp.Ad(state.gamma, el.zeta)
    return StateTangent(dQ, dP, eta, dsigma)


def cotangent_generator(el, state, side):
    if side == "left":
        return cotangent_generator_left(el, state)
    if side == "right":
        return cotangent_generator_right(el, state)
    raise ValueError("side must be 'left' or 'right'")


@dataclass
class GeneratorBasis:
    """Truncated family of algebra elements with their lifted generators."""

    elements: list
    matrix: np.ndarray  # (chart_dim, count), columns are packed tangents
    side: str

    @property
    def count(self):
        return self.matrix.shape[1]


def left_generator_basis(state, basis):
    """Cotangent generators of the full truncated left basis (fast assembly)."""
    n, d, k = state.n, state.d, state.dim_o
    c = state.group.tau_scale
    C = state.group.structure_constants
    B = basis.eval(state.Q)   # (n, m)
    G = basis.grad(state.Q)   # (n, d, m)
    m = basis.size
    w_cols = []
    # u-components (i, mode): dQ = B e_i, dP_j = -P_i G_jm
    dQ = np.zeros((d, m, n, d))
    dP = np.zeros((d, m, n, d))
    for i in range(d):
        dQ[i, :, :, i] = B.T
        dP[i] = -np.einsum("n,njm->mnj", state.P[:, i], G)
    top = np.concatenate(
        [dQ.reshape(d * m, n * d), dP.reshape(d * m, n * d), np.zeros((d * m, 2 * n * k))],
        axis=1,
    )
    # gauge components (a, mode): dP_j = -c sigma_a G_jm, eta = B e_a,
    # dsigma_b = -B sum_c C_abc sigma_c
    dP2 = -c * np.einsum("na,njm->amnj", state.sigma, G).reshape(k * m, n * d)
    eta2 = np.zeros((k, m, n, k))
    for a in range(k):
        eta2[a, :, :, a] = B.T
    coad_fac = np.einsum("abc,nc->nab", C, state.sigma)  # coad(e_a, sigma)_b
    ds2 = -np.einsum("mn,nab->amnb", B.T * 1.0, coad_fac).reshape(k * m, n * k)
    bottom = np.concatenate(
        [np.zeros((k * m, n * d)), dP2, eta2.reshape(k * m, n * k), ds2], axis=1
    )
    mat = np.concatenate([top, bottom], axis=0).T
    return GeneratorBasis(left_basis_elements(basis, k), mat, "left")


def right_generator_basis(state, kmax):
    """Cotangent generators of the truncated right basis."""
    els = right_basis_elements(state.source, state.dim_o, kmax)
    cols = [cotangent_generator_right(el, state).pack() for el in els]
    return GeneratorBasis(els, np.array(cols).T, "right")


# ------------------------------------------------------- orthogonality, kernels


def orthogonality_residual(A, B, omega):
    """max_ij |A_i^T Omega B_j| / (|Omega A_i| |B_j|); 0 for empty bases."""
    A = A.matrix if isinstance(A, GeneratorBasis) else A
    B = B.matrix if isinstance(B, GeneratorBasis) else B
    if A.size == 0 or B.size == 0:
        return 0.0
    OA = omega @ A
    M = A.T @ omega @ B
    na = np.linalg.norm(OA, axis=0)
    nb = np.linalg.norm(B, axis=0)
    denom = np.outer(na, nb)
    denom[denom == 0] = 1.0
    return float(np.max(np.abs(M) / denom))


@dataclass
class KernelOrbitReport:
    kernel_dim: int
    orbit_rank: int
    inclusion_residual: float
    principal_angles: np.ndarray
    coverage_gap: float

    @property
    def excess(self):
        return self.kernel_dim - self.orbit_rank

    def to_dict(self):
        return {
            "kernel_dim": self.kernel_dim,
            "orbit_rank": self.orbit_rank,
            "excess": self.excess,
            "inclusion_residual": self.inclusion_residual,
            "coverage_gap": self.coverage_gap,
            "max_principal_angle": float(np.max(self.principal_angles))
            if self.principal_angles.size else 0.0,
        }


def kernel_vs_orbit(state, jacobian, orbit, svd_tol=1e-10):
    """Null space of a momentum-map Jacobian versus an orbit-generator span.

    Reports the dimensions, the inclusion residual |J G| (normalized by the
    operator norms), the principal angles between the two subspaces, and the
    coverage gap: mean sine of the angle from kernel directions to the orbit
    span (uncovered kernel directions count with sine one).
    """
    state.require_regular()
    orbit_mat = orbit.matrix if isinstance(orbit, GeneratorBasis) else orbit
    norms = np.linalg.norm(orbit_mat, axis=0)
    orbit_mat = orbit_mat[:, norms > 0] / norms[norms > 0]  # scale-free span
    u, s, vt = svd(jacobian, full_matrices=True)
    smax = s[0] if s.size else 1.0
    rank = int(np.sum(s > svd_tol * smax))
    null_basis = vt[rank:].T  # (dim, kernel_dim)
    kernel_dim = null_basis.shape[1]

    orbit_orth = orth(orbit_mat)
    orbit_rank = orbit_orth.shape[1]
    incl = np.linalg.norm(jacobian @ orbit_orth, 2)
    incl /= max(smax, 1e-300) * max(np.linalg.norm(orbit_orth, 2), 1e-300)

    angles = subspace_angles(null_basis, orbit_orth) if kernel_dim and orbit_rank else np.array([])
    sines = np.sin(angles)
    uncovered = max(kernel_dim - sines.size, 0)
    gap = float((np.sum(sines) + uncovered) / max(kernel_dim, 1))
    return KernelOrbitReport(kernel_dim, orbit_rank, float(incl), angles, gap)


# -------------------------------------------------------------- chart validation


def validate_chart(state, rng, n_pairs=5, eps=1e-5):
    """Compare the chart form against -d(theta) computed by finite differences.

    theta is the canonical one-form pulled back through the per-node right
    trivialization: theta(t) = sum_i w_i (P_i . dQ_i + <sigma_i, eta_i>).
    The exterior derivative is taken in commuting chart coordinates
    (Q, P, sigma linear; gamma through the exponential chart), so
    d theta(U, V) = U[theta(V)] - V[theta(U)].
    """
    from .sampling import band_limited

    grp = state.group
    chart = SymplecticChart(state)
    w = state.source.w
    c = grp.tau_scale

    def theta_of(direction, offsets):
        # evaluate theta(direction) at the chart point state + offsets
        dQo, dPo, dEo, dSo = offsets
        P_here = state.P + dPo
        s_here = state.sigma + dSo
        eta_dir = grp.dexp_right(dEo, direction.eta)
        val = np.einsum("nj,nj->n", P_here, direction.dQ) + grp.pair(s_here, eta_dir)
        return float(np.dot(w, val))

    def fd_two_form(t1, t2):
        def shift(t, e):
            return (e * t.dQ, e * t.dP, e * t.eta, e * t.dsigma)

        d1 = (theta_of(t2, shift(t1, eps)) - theta_of(t2, shift(t1, -eps))) / (2 * eps)
        d2 = (theta_of(t1, shift(t2, eps)) - theta_of(t1, shift(t2, -eps))) / (2 * eps)
        return -(d1 - d2)  # Omega = -d theta

    worst = 0.0
    for _ in range(n_pairs):
        t1 = StateTangent(*(band_limited(rng, state.source, 2, 0.5, width=m)
                            for m in (state.d, state.d, state.dim_o, state.dim_o)))
        t2 = StateTangent(*(band_limited(rng, state.source, 2, 0.5, width=m)
                            for m in (state.d, state.d, state.dim_o, state.dim_o)))
        lhs = chart.pairing(t1, t2)
        rhs = fd_two_form(t1, t2)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-10))
    return {"max_rel_error": worst, "condition_number": chart.condition_number()}


# ------------------------------------------------------------- embedded curves


class EmbeddedCurve:
    """Dense-evaluable closed curve Q: S^1 -> M with projection and reach."""

    def __init__(self, state, n_dense=None):
        self.state = state
        self.grid = state.source
        self.ambient = state.ambient
        self.Q = state.Q
        self.winding = state.q_winding
        self.dQ = state.DQ()
        self.d2Q = (state.source.deriv(self.dQ))
        self.n_dense = n_dense or 8 * state.n
        self.s_dense = TWO_PI * np.arange(self.n_dense) / self.n_dense
        self.q_dense = self.eval(self.s_dense)

    def eval(self, s):
        if self.ambient.kind == "torus":
            return self.grid.interpolate_lifted(self.Q, self.winding, s)
        return self.grid.interpolate(self.Q, s)

    def tangent(self, s):
        return self.grid.interpolate(self.dQ, s)

    def curvature_radius(self):
        t = self.grid.interpolate(self.dQ, self.s_dense)
        a = self.grid.interpolate(self.d2Q, self.s_dense)
        speed2 = np.sum(t**2, axis=1)
        proj = np.sum(a * t, axis=1) / speed2
        a_perp = a - proj[:, None] * t
        kappa = np.linalg.norm(a_perp, axis=1) / speed2
        kappa = np.maximum(kappa, 1e-12)
        return float(np.min(1.0 / kappa))

    def min_self_distance(self):
        q = self.q_dense
        disp = self.ambient.displacement(q[:, None], q[None, :])
        dist = np.linalg.norm(disp, axis=-1)
        n = self.n_dense
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        sep = np.minimum(np.abs(i - j), n - np.abs(i - j))
        # ignore neighbours closer than a quarter turn in parameter
        mask = sep > n // 8
        return float(np.min(dist[mask])) if np.any(mask) else np.inf

    def reach_estimate(self):
        return min(self.curvature_radius(), 0.5 * self.min_self_distance())

    def project(self, y, newton_steps=30, tol=1e-12):
        """Nearest-parameter projection; y has shape (..., d)."""
        y = np.atleast_2d(np.asarray(y, float))
        disp = self.ambient.displacement(y[:, None, :], self.q_dense[None, :, :])
        s = self.s_dense[np.argmin(np.sum(disp**2, axis=-1), axis=1)]
        for _ in range(newton_steps):
            q = self.eval(s)
            t = self.tangent(s)
            a = self.grid.interpolate(self.d2Q, s)
            r = self.ambient.displacement(y, q)
            g = -np.sum(r * t, axis=1)
            gp = np.sum(t * t, axis=1) - np.sum(r * a, axis=1)
            if np.any(np.abs(gp) < 1e-14):
                raise ProjectionFailedError("degenerate projection equation")
            step = g / gp
            s = s - step
            if np.max(np.abs(step)) < tol:
                break
        else:
            raise ProjectionFailedError("projection Newton did not converge")
        return s


def smooth_bump(r):
    """C^infinity cutoff: 1 on [0, 1/2], 0 beyond 1 (mollifier ratio)."""
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    out[r <= 0.5] = 1.0
    mid = (r > 0.5) & (r < 1.0)
    t = (r[mid] - 0.5) / 0.5

    def S(x):
        return np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)

    out[mid] = S(1.0 - t) / (S(t) + S(1.0 - t))
    return out


@dataclass
class IsotropyWitness:
    u: object
    nu: object
    residual_inf: float
    fraction_error: float
    reach: float

    def to_dict(self):
        return {"residual_inf": self.residual_inf,
                "fraction_error": self.fraction_error, "reach": self.reach}


def isotropy_witness(state, p_prime, conormal_tol=1e-8, fd_step=1e-4):
    """Constructive isotropy direction reaching a conormal target.

    Builds f(y) = bump(dist) * lambda_{p(y)}(y - p(y)) with
    lambda = P' / (|P|^2 + |sigma|^2), and returns
    u = -f P~sharp, nu = -f sigma~sharp (extensions constant along normals).
    The residual P' + P o (grad u)|_N + <sigma, (d nu)|_N> is evaluated by
    central finite differences of the constructed callables.
    """
    if state.ambient.kind != "euclidean":
        raise ValueError("witness construction requires Euclidean ambient space")
    state.require_regular()
    grp = state.group
    c = grp.tau_scale
    curve = EmbeddedCurve(state)

    dQ = state.DQ()
    tangent_residual = np.abs(np.einsum("nj,nj->n", p_prime, dQ)) / np.sum(dQ**2, axis=1) ** 0.5
    if np.max(tangent_residual) > conormal_tol:
        raise NotConormalError(f"target has tangential part {np.max(tangent_residual):.3e}")

    denom = np.sum(state.P**2, axis=1) + c * np.sum(state.sigma**2, axis=1)
    lam = p_prime / denom[:, None]
    reach = curve.reach_estimate()
    rho = 0.5 * reach
    grid = state.source

    def fields_at(y):
        s = curve.project(y)
        p = curve.eval(s)
        normal = np.asarray(y, float) - p
        dist = np.linalg.norm(normal, axis=1)
        lam_s = grid.interpolate(lam, s)
        f = smooth_bump(dist / rho) * np.einsum("nj,nj->n", lam_s, normal)
        P_s = grid.interpolate(state.P, s)
        sig_s = grid.interpolate(state.sigma, s)
        return f, P_s, sig_s

    def u(y):
        f, P_s, _ = fields_at(np.atleast_2d(y))
        return -f[:, None] * P_s

    def nu(y):
        f, _, sig_s = fields_at(np.atleast_2d(y))
        return -f[:, None] * sig_s

    # finite-difference gradients of the constructed fields along N
    n, d, k = state.n, state.d, state.dim_o
    grad_u = np.zeros((n, d, d))   # grad_u[n, i, j] = d u_i / d x_j
    dnu = np.zeros((n, d, k))      # dnu[n, j, a] = d nu_a / d x_j
    for j in range(d):
        e = np.zeros(d)
        e[j] = fd_step
        up, um = u(state.Q + e), u(state.Q - e)
        grad_u[:, :, j] = (up - um) / (2 * fd_step)
        np_p, np_m = nu(state.Q + e), nu(state.Q - e)
        dnu[:, j, :] = (np_p - np_m) / (2 * fd_step)

    term_u = np.einsum("ni,nij->nj", state.P, grad_u)
    term_nu = c * np.einsum("na,nja->nj", state.sigma, dnu)
    residual = p_prime + term_u + term_nu
    residual_inf = float(np.max(np.abs(residual)))

    # the two proof terms recover |P|^2 and |sigma|^2 fractions of P'
    frac_u = np.sum(state.P**2, axis=1) / denom
    frac_nu = c * np.sum(state.sigma**2, axis=1) / denom
    scale = np.maximum(np.max(np.abs(p_prime)), 1e-12)
    err_u = np.abs(-term_u - frac_u[:, None] * p_prime) / scale
    err_nu = np.abs(-term_nu - frac_nu[:, None] * p_prime) / scale
    fraction_error = float(max(np.max(err_u), np.max(err_nu)))

    return IsotropyWitness(u, nu, residual_inf, fraction_error, reach)


# --------------------------------------------------------------- reconstruction


def reconstruct_right(z1, z2, level_tol=1e-6, verify_tol=1e-6, kmax=2):
    """Recover (psi, b) with z2 = coact_right(z1, (psi, b)).

    Requires the two states to lie in the same left-momentum level set
    (checked against the truncated test basis), recovers psi by arc-length
    matching of the embeddings, then b = (gamma1^-1 o psi) gamma2.
    """
    from .bases import make_ambient_basis

    basis = make_ambient_basis(z1.ambient, kmax)
    tests = left_basis_elements(basis, z1.dim_o)
    f1 = left_momentum(z1).eval_many(tests)
    f2 = left_momentum(z2).eval_many(tests)
    scale = max(np.max(np.abs(f1)), 1.0)
    if np.max(np.abs(f1 - f2)) > level_tol * scale:
        raise NotInLevelSetError(
            f"left-momentum functionals differ by {np.max(np.abs(f1 - f2)):.3e}"
        )

    curve = EmbeddedCurve(z1)
    s = curve.project(z2.Q)
    dist = np.linalg.norm(z1.ambient.displacement(z2.Q, curve.eval(s)), axis=1)
    if np.max(dist) > 1e-6 * max(1.0, float(np.max(np.abs(z1.Q)))):
        raise ImagesDifferError(f"embedding images differ by {np.max(dist):.3e}")

    # monotone lift of the recovered parameters
    s = np.unwrap(s)
    offset = np.round((s[0] - z1.source.x[0]) / TWO_PI) * TWO_PI
    s = s - offset
    if np.any(np.diff(np.append(s, s[0] + TWO_PI)) <= 0):
        raise NonMonotoneError("recovered reparametrization is not monotone")
    psi = GridDiffeo.from_samples(z1.source, s)

    grp = z1.group
    gamma1_at_psi = resample_group_diffeo(grp, z1.source, z1.gamma, psi)
    b = grp.compose(grp.inverse(gamma1_at_psi), z2.gamma)
    rt = RightTransformer(psi, b)

    check = coact_right(z1, rt)
    errs = {
        "Q": float(np.max(np.abs(z1.ambient.displacement(check.Q, z2.Q)))),
        "P": float(np.max(np.abs(check.P - z2.P))),
        "gamma": float(np.max(np.abs(check.gamma - z2.gamma))),
        "sigma": float(np.max(np.abs(check.sigma - z2.sigma))),
    }
    worst = max(errs.values())
    if worst > verify_tol * max(1.0, float(np.max(np.abs(z2.P)))):
        raise ImagesDifferError(f"verification failed: {errs}")
    return rt, errs
