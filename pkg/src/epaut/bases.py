"""Truncated scalar bases on the ambient manifold and the algebra elements
of the two acting groups.

Left algebra elements (vector field on M, algebra-valued function on M) are
stored as coefficient arrays over a closed-form scalar basis with exact first
derivatives: tensor Fourier modes on the flat torus, Hermite functions
(polynomial times Gaussian envelope) on Euclidean space.  Right algebra
elements live on the source grid as sampled fields.
"""

import itertools

import numpy as np
from numpy.polynomial.hermite_e import hermeval


class TorusBasis:
    """Tensor products of 1-d Fourier modes {1, cos kx, sin kx}, k <= kmax."""

    def __init__(self, d, kmax):
        self.d = d
        self.kmax = kmax
        modes_1d = [(0, "c")] + [(k, t) for k in range(1, kmax + 1) for t in ("c", "s")]
        self.modes = list(itertools.product(modes_1d, repeat=d))
        self.size = len(self.modes)

    def _factors(self, x):
        """Per-dimension factor values and derivatives, shape (..., d, m1d)."""
        x = np.asarray(x, dtype=float)
        vals, ders = [], []
        for k, t in [(0, "c")] + [(k, t) for k in range(1, self.kmax + 1) for t in ("c", "s")]:
            if t == "c":
                vals.append(np.cos(k * x))
                ders.append(-k * np.sin(k * x))
            else:
                vals.append(np.sin(k * x))
                ders.append(k * np.cos(k * x))
        return np.stack(vals, axis=-1), np.stack(ders, axis=-1)

    def eval(self, x):
        """Basis values at points x (..., d) -> (..., size)."""
        v, _ = self._factors(x)
        out = np.ones(x.shape[:-1] + (self.size,))
        for m, mode in enumerate(self.modes):
            for j, (k, t) in enumerate(mode):
                out[..., m] *= v[..., j, self._idx(k, t)]
        return out

    def grad(self, x):
        """Basis gradients at x -> (..., d, size)."""
        v, dv = self._factors(x)
        out = np.ones(x.shape[:-1] + (self.d, self.size))
        for m, mode in enumerate(self.modes):
            for j, (k, t) in enumerate(mode):
                col = v[..., j, self._idx(k, t)]
                dcol = dv[..., j, self._idx(k, t)]
                for jj in range(self.d):
                    out[..., jj, m] *= dcol if jj == j else col
        return out

    def _idx(self, k, t):
        return 0 if k == 0 else 2 * k - 1 + (0 if t == "c" else 1)


class HermiteBasis:
    """Hermite functions He_n(x/s) exp(-x^2 / (2 s^2)), tensorized over dims."""

    def __init__(self, d, kmax, scale=2.0):
        self.d = d
        self.kmax = kmax
        self.scale = scale
        self.modes = list(itertools.product(range(kmax + 1), repeat=d))
        self.size = len(self.modes)

    def _factors(self, x):
        x = np.asarray(x, dtype=float)
        t = x / self.scale
        env = np.exp(-0.5 * t**2)
        vals, ders = [], []
        norm = 1.0
        for n in range(self.kmax + 1):
            if n > 0:
                norm *= np.sqrt(n)  # He_n / sqrt(n!) keeps values O(1)
            cn = np.zeros(n + 1)
            cn[n] = 1.0
            he = hermeval(t, cn) / norm
            he_d = (hermeval(t, np.polynomial.hermite_e.hermeder(cn)) / norm) if n > 0 else 0.0
            vals.append(he * env)
            ders.append((he_d - t * he) * env / self.scale)
        return np.stack(vals, axis=-1), np.stack(ders, axis=-1)

    def eval(self, x):
        v, _ = self._factors(x)
        out = np.ones(x.shape[:-1] + (self.size,))
        for m, mode in enumerate(self.modes):
            for j, n in enumerate(mode):
                out[..., m] *= v[..., j, n]
        return out

    def grad(self, x):
        v, dv = self._factors(x)
        out = np.ones(x.shape[:-1] + (self.d, self.size))
        for m, mode in enumerate(self.modes):
            for j, n in enumerate(mode):
                col, dcol = v[..., j, n], dv[..., j, n]
                for jj in range(self.d):
                    out[..., jj, m] *= dcol if jj == j else col
        return out


def make_ambient_basis(ambient, kmax, scale=2.0):
    if ambient.kind == "torus":
        return TorusBasis(ambient.d, kmax)
    return HermiteBasis(ambient.d, kmax, scale=scale)


class LeftAlgebraElement:
    """Pair (vector field u on M, algebra-valued function nu on M).

    Coefficients sit over a closed-form scalar basis, so values and first
    derivatives are exact.
    """

    def __init__(self, basis, u_coeffs, nu_coeffs):
        self.basis = basis
        self.u_coeffs = np.zeros((basis.d, basis.size)) if u_coeffs is None else np.asarray(u_coeffs, float)
        self.nu_coeffs = None if nu_coeffs is None else np.asarray(nu_coeffs, float)

    def u(self, x):
        return self.basis.eval(x) @ self.u_coeffs.T

    def du(self, x):
        """Jacobian du[..., i, j] = d u_i / d x_j."""
        g = self.basis.grad(x)  # (..., d, size)
        return np.einsum("...jm,im->...ij", g, self.u_coeffs)

    def nu(self, x):
        if self.nu_coeffs is None:
            return None
        return self.basis.eval(x) @ self.nu_coeffs.T

    def dnu(self, x):
        """dnu[..., j, a] = d nu_a / d x_j."""
        if self.nu_coeffs is None:
            return None
        return np.einsum("...jm,am->...ja", self.basis.grad(x), self.nu_coeffs)

    def scaled(self, factor):
        return LeftAlgebraElement(
            self.basis,
            self.u_coeffs * factor,
            None if self.nu_coeffs is None else self.nu_coeffs * factor,
        )


def left_basis_elements(basis, dim_o):
    """Unit-coefficient elements spanning the truncated left algebra."""
    out = []
    for i in range(basis.d):
        for m in range(basis.size):
            u = np.zeros((basis.d, basis.size))
            u[i, m] = 1.0
            out.append(LeftAlgebraElement(basis, u, np.zeros((dim_o, basis.size))))
    for a in range(dim_o):
        for m in range(basis.size):
            nu = np.zeros((dim_o, basis.size))
            nu[a, m] = 1.0
            out.append(LeftAlgebraElement(basis, None, nu))
    return out


def random_left_element(basis, dim_o, rng, amp=0.3, gauge_only=False):
    """Random smooth element with coefficients decaying in the mode index."""
    decay = 1.0 / (1.0 + np.arange(basis.size))
    u = None if gauge_only else amp * rng.normal(size=(basis.d, basis.size)) * decay
    nu = amp * rng.normal(size=(dim_o, basis.size)) * decay
    return LeftAlgebraElement(basis, u, nu)


class RightAlgebraElement:
    """Pair (vector field v on the source circle, algebra-valued field zeta)."""

    def __init__(self, v, zeta):
        self.v = None if v is None else np.asarray(v, dtype=float)
        self.zeta = None if zeta is None else np.asarray(zeta, dtype=float)


def right_basis_elements(grid, dim_o, kmax):
    """Fourier modes {1, cos kx, sin kx} x (source direction + algebra basis)."""
    scalars = [np.ones(grid.n)]
    for k in range(1, kmax + 1):
        scalars.append(np.cos(k * grid.x))
        scalars.append(np.sin(k * grid.x))
    out = []
    zero_zeta = np.zeros((grid.n, dim_o))
    for s in scalars:
        out.append(RightAlgebraElement(s, zero_zeta))
    for a in range(dim_o):
        for s in scalars:
            zeta = np.zeros((grid.n, dim_o))
            zeta[:, a] = s
            out.append(RightAlgebraElement(np.zeros(grid.n), zeta))
    return out


class SemidirectBracket:
    """Value-level bracket of two left algebra elements.

    Sign convention follows the right-invariant reading fixed empirically by
    the equivariance oracle: the vector-field part is -[u1, u2] (Jacobi-Lie),
    the gauge part is  grad(nu1).u2 - grad(nu2).u1 + [nu1, nu2].
    Only point values are exposed; that is all the momentum pairing needs.
    """

    def __init__(self, group, el1, el2):
        self.group = group
        self.el1 = el1
        self.el2 = el2

    def u(self, x):
        u1, u2 = self.el1.u(x), self.el2.u(x)
        du1, du2 = self.el1.du(x), self.el2.du(x)
        jacobi_lie = np.einsum("...ij,...j->...i", du2, u1) - np.einsum("...ij,...j->...i", du1, u2)
        return -jacobi_lie

    def nu(self, x):
        n1, n2 = self.el1.nu(x), self.el2.nu(x)
        dn1, dn2 = self.el1.dnu(x), self.el2.dnu(x)
        term = np.einsum("...ja,...j->...a", dn1, self.el2.u(x))
        term -= np.einsum("...ja,...j->...a", dn2, self.el1.u(x))
        return term + self.group.ad(n1, n2)
