"""Source manifolds (periodic grid on the circle, weighted point clouds),
spectral calculus, circle diffeomorphisms and group-field resampling.

Fields are plain ndarrays whose axis 0 runs over the nodes of the source.
Scalar fields have shape (n,), ambient points/covectors (n, d), algebra and
dual-algebra fields (n, dim_o), group fields (n,) + element_shape.

All derivatives on the periodic grid are spectral (Fourier), hence exact for
band-limited data below the Nyquist mode.  Values that wind around a circle
(U(1) angles, torus coordinates of an embedding) are stored as continuous
lifts and handled through their periodic part plus winding slope.
"""

import numpy as np

from .errors import NonMonotoneError, PointCloudHasNoDerivativeError

TWO_PI = 2.0 * np.pi


class PeriodicGrid:
    """Uniform periodic grid on the circle of circumference 2*pi."""

    kind = "periodic_grid"

    def __init__(self, n):
        if n < 4:
            raise ValueError("need at least 4 nodes")
        self.n = int(n)
        self.x = TWO_PI * np.arange(self.n) / self.n
        self.w = np.full(self.n, TWO_PI / self.n)
        self._deriv_matrix = None

    # -- calculus ----------------------------------------------------------

    def deriv(self, values):
        """Spectral derivative along axis 0 (Nyquist mode dropped)."""
        values = np.asarray(values, dtype=float)
        c = np.fft.rfft(values, axis=0)
        k = np.arange(c.shape[0], dtype=float)
        if self.n % 2 == 0:
            k[-1] = 0.0  # odd derivative of the Nyquist cosine vanishes on nodes
        shape = (-1,) + (1,) * (values.ndim - 1)
        return np.fft.irfft(1j * k.reshape(shape) * c, n=self.n, axis=0)

    def deriv_matrix(self):
        """Dense spectral differentiation matrix (cached); exactly antisymmetric."""
        if self._deriv_matrix is None:
            d = self.deriv(np.eye(self.n))
            self._deriv_matrix = 0.5 * (d - d.T)
        return self._deriv_matrix

    def quadrature(self, values):
        """Trapezoid rule sum(w_i f_i); spectrally accurate on the circle."""
        return np.tensordot(self.w, np.asarray(values), axes=(0, 0))

    def interpolate(self, values, targets):
        """Evaluate the trigonometric interpolant of a real field at `targets`."""
        values = np.asarray(values, dtype=float)
        targets = np.asarray(targets, dtype=float)
        c = np.fft.fft(values, axis=0) / self.n
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        E = np.exp(1j * targets[..., None] * k)
        if self.n % 2 == 0:
            # split the Nyquist mode symmetrically so real data stays real
            E[..., self.n // 2] = np.cos((self.n // 2) * targets)
        return np.tensordot(E, c, axes=(-1, 0)).real

    def interpolate_lifted(self, values, winding, targets):
        """Interpolate a lift f with f(x + 2*pi) = f(x) + 2*pi*winding."""
        values = np.asarray(values, dtype=float)
        winding = np.asarray(winding, dtype=float)
        periodic = values - np.multiply.outer(self.x, winding).reshape(values.shape)
        out = self.interpolate(periodic, targets)
        return out + np.multiply.outer(targets, winding).reshape(out.shape)

    def deriv_lifted(self, values, winding):
        """Derivative of a winding lift: spectral part plus constant slope."""
        values = np.asarray(values, dtype=float)
        winding = np.asarray(winding, dtype=float)
        periodic = values - np.multiply.outer(self.x, winding).reshape(values.shape)
        return self.deriv(periodic) + winding

    def pairwise_distance(self):
        """Geodesic distance between nodes on the circle."""
        diff = np.abs(self.x[:, None] - self.x[None, :])
        return np.minimum(diff, TWO_PI - diff)

    def to_dict(self):
        return {"kind": self.kind, "n": self.n}


class PointCloud:
    """Zero-dimensional source: labelled points with quadrature weights."""

    kind = "point_cloud"

    def __init__(self, positions, weights=None):
        self.x = np.atleast_1d(np.asarray(positions, dtype=float))
        self.n = self.x.shape[0]
        self.w = np.ones(self.n) if weights is None else np.asarray(weights, dtype=float)
        if np.any(self.w <= 0):
            raise ValueError("quadrature weights must be positive")

    def deriv(self, values):
        raise PointCloudHasNoDerivativeError("dim-0 source manifold")

    def quadrature(self, values):
        return np.tensordot(self.w, np.asarray(values), axes=(0, 0))

    def pairwise_distance(self):
        return np.abs(self.x[:, None] - self.x[None, :])

    def to_dict(self):
        return {"kind": self.kind, "n": self.n}


# --------------------------------------------------------------------- lifts


def angle_lift(angles):
    """Continuous lift of circle-valued samples and their winding number."""
    angles = np.asarray(angles, dtype=float)
    closed = np.unwrap(np.concatenate([angles, angles[:1]]))
    winding = int(np.round((closed[-1] - closed[0]) / TWO_PI))
    return closed[:-1], winding


class GridDiffeo:
    """Orientation-preserving circle diffeomorphism sampled on a grid.

    Stores the monotone lift psi(x_i) (so psi(x + 2*pi) = psi(x) + 2*pi) and
    the Jacobian samples psi'(x_i) > 0.
    """

    def __init__(self, grid, lift, jac):
        self.grid = grid
        self.lift = np.asarray(lift, dtype=float)
        self.jac = np.asarray(jac, dtype=float)
        if np.any(self.jac <= 0):
            raise NonMonotoneError("Jacobian samples must be positive")
        step = np.diff(np.append(self.lift, self.lift[0] + TWO_PI))
        if np.any(step <= 0):
            raise NonMonotoneError("lift samples must be strictly increasing")

    @classmethod
    def identity(cls, grid):
        return cls(grid, grid.x.copy(), np.ones(grid.n))

    @classmethod
    def rotation(cls, grid, shift):
        return cls(grid, grid.x + shift, np.ones(grid.n))

    @classmethod
    def from_callable(cls, grid, f, df):
        """Build from a lift callable and its exact derivative."""
        return cls(grid, f(grid.x), df(grid.x))

    @classmethod
    def from_samples(cls, grid, lift):
        """Build from lift samples; Jacobian from the spectral derivative."""
        jac = grid.deriv_lifted(lift, 1.0)
        return cls(grid, lift, jac)

    def __call__(self, targets):
        """Evaluate the lift at off-grid points by Fourier interpolation."""
        return self.grid.interpolate_lifted(self.lift, 1.0, targets)


def resample(grid, values, diffeo):
    """f -> f o psi by Fourier interpolation of a plain periodic field."""
    return grid.interpolate(values, diffeo.lift)


def resample_lifted(grid, values, winding, diffeo):
    """Compose a winding lift with psi: value = periodic(psi(x)) + winding*psi(x)."""
    return grid.interpolate_lifted(values, winding, diffeo.lift)


def resample_group(group, grid, gamma, targets, method="spectral"):
    """Evaluate a group-valued field at arbitrary points.

    U(1) fields interpolate through the continuous angle lift.  Matrix-group
    fields default to trigonometric interpolation of the matrix entries
    followed by polar re-projection onto the group (spectral accuracy, exact
    on grid nodes).  method="log_chart" switches to an 8-point Lagrange
    stencil in a logarithm chart around the left-nearest node; it never
    leaves the group but converges only at order ~h^8.
    """
    targets = np.asarray(targets, dtype=float)
    if group.kind == "circle":
        lift, winding = angle_lift(gamma)
        return grid.interpolate_lifted(lift, winding, targets)
    if method == "spectral":
        return group.project(grid.interpolate(gamma, targets))

    n, h = grid.n, TWO_PI / grid.n
    stencil = np.arange(-3, 5)  # 8 nodes bracketing the target cell
    j = np.floor_divide(np.mod(targets, TWO_PI), h).astype(int) % n
    frac = np.mod(targets, TWO_PI) - j * h  # in [0, h)

    idx = (j[:, None] + stencil[None, :]) % n
    g_ref = gamma[j]
    rel = gamma[idx] @ np.swapaxes(g_ref, -1, -2)[:, None]
    delta = group.log(rel)  # (T, 8, dim_o)

    # Lagrange weights on the uniform stencil, nodes at offsets stencil*h
    t = frac / h
    weights = np.ones((targets.shape[0], stencil.size))
    for a, ka in enumerate(stencil):
        for kb in stencil:
            if kb != ka:
                weights[:, a] *= (t - kb) / (ka - kb)
    interp = np.einsum("ts,tsa->ta", weights, delta)
    return group.exp(interp) @ g_ref


def resample_group_diffeo(group, grid, gamma, diffeo):
    return resample_group(group, grid, gamma, diffeo.lift)


# ------------------------------------------------------------ log derivatives


def logderiv_right(group, grid, gamma):
    """delta^r(gamma) = (D gamma) gamma^-1 as an algebra-valued field (n, dim_o)."""
    if group.kind == "circle":
        lift, winding = angle_lift(gamma)
        return grid.deriv_lifted(lift, float(winding))[:, None]
    dgamma = grid.deriv(gamma)
    return _to_algebra(group, dgamma @ np.swapaxes(gamma, -1, -2))


def logderiv_left(group, grid, gamma):
    """delta^l(gamma) = gamma^-1 (D gamma)."""
    if group.kind == "circle":
        return logderiv_right(group, grid, gamma)
    dgamma = grid.deriv(gamma)
    return _to_algebra(group, np.swapaxes(gamma, -1, -2) @ dgamma)


def d_logderiv(group, grid, gamma, eta):
    """Differential of delta^r at gamma in a right-trivialized direction eta.

    For a variation with u_gamma = eta * gamma the derivative of the right
    logarithmic derivative is D(eta) + ad(eta, delta^r gamma).
    """
    return grid.deriv(eta) + group.ad(eta, logderiv_right(group, grid, gamma))


def _to_algebra(group, m):
    """Project near-algebra matrices onto coordinates (antisymmetrize for so(3))."""
    from .groups import unhat

    return unhat(m)
