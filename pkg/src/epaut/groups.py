"""Matrix structure groups U(1) and SO(3) with their (co)adjoint calculus.

Conventions used throughout the package:

* Algebra elements are coordinate vectors in a fixed basis: the angle rate
  for u(1), the hat-map basis e1, e2, e3 for so(3) (so the bracket is the
  cross product).
* Dual elements (charges, momenta) are stored in the basis dual to the
  metric `tau`, which makes the musical isomorphisms ``sharp``/``flat`` the
  identity in coordinates.  The price is that the canonical pairing between
  a dual vector and an algebra vector carries the scalar ``tau_scale``:
  ``pair(sigma, xi) = tau_scale * sigma . xi``.
* ``tau`` is the Ad-invariant inner product scaled so that the Riemannian
  volume of the group equals one (Haar normalization).  Any positive scale
  is admissible; the unit-volume one is fixed here once and for all:
  tau_scale = (2*pi)**-2 for U(1) and (8*pi**2)**(-2/3) for SO(3).

Group elements are plain ndarrays: an angle (any real lift, reduced mod 2*pi
only on output) for U(1), a 3x3 orthogonal matrix for SO(3).  All operations
are vectorized over leading axes.
"""

import numpy as np

from .errors import CutLocusError

# trace threshold below which the SO(3) logarithm is refused: log is
# ill-conditioned near rotation angle pi
_CUT_LOCUS_TRACE_TOL = 1e-9


class StructureGroup:
    """Common interface of the shipped structure groups.

    Attributes
    ----------
    kind : str
        "circle" or "rotation3".
    dim_o : int
        Dimension of the Lie algebra.
    element_shape : tuple
        Trailing shape of one group element as an ndarray.
    structure_constants : ndarray, shape (dim_o, dim_o, dim_o)
        C[a, b, c] is the e_c coefficient of [e_a, e_b].
    tau_scale : float
        Coefficient of the (isotropic) metric tau in the fixed basis.
    """

    kind: str
    dim_o: int
    element_shape: tuple
    structure_constants: np.ndarray
    tau_scale: float

    # -- algebra / dual algebra -------------------------------------------

    def ad(self, xi, eta):
        """Lie bracket [xi, eta] via the structure constants."""
        return np.einsum("...a,...b,abc->...c", xi, eta, self.structure_constants)

    def coad(self, xi, sigma):
        """Infinitesimal coadjoint action: <coad(xi, sigma), eta> = <sigma, [xi, eta]>."""
        return np.einsum("...a,...c,acb->...b", xi, sigma, self.structure_constants)

    def pair(self, sigma, xi):
        """Canonical pairing of a dual vector with an algebra vector."""
        return self.tau_scale * np.einsum("...a,...a->...", sigma, xi)

    def tau(self, xi, eta):
        """Ad-invariant inner product on the algebra."""
        return self.tau_scale * np.einsum("...a,...a->...", xi, eta)

    def tau_dual(self, sigma, rho):
        """Induced inner product on the dual (equals tau in flat coordinates)."""
        return self.tau_scale * np.einsum("...a,...a->...", sigma, rho)

    def sharp(self, sigma):
        """Dual -> algebra isomorphism induced by tau (identity in coordinates)."""
        return np.asarray(sigma, dtype=float).copy()

    def flat(self, xi):
        """Algebra -> dual isomorphism induced by tau (identity in coordinates)."""
        return np.asarray(xi, dtype=float).copy()

    # -- group -------------------------------------------------------------

    def identity(self, shape=()):
        raise NotImplementedError

    def exp(self, xi):
        raise NotImplementedError

    def log(self, g):
        raise NotImplementedError

    def compose(self, g1, g2):
        raise NotImplementedError

    def inverse(self, g):
        raise NotImplementedError

    def adjoint_matrix(self, g):
        """Matrix of Ad_g in algebra coordinates, shape (..., dim_o, dim_o)."""
        raise NotImplementedError

    def Ad(self, g, xi):
        return np.einsum("...ab,...b->...a", self.adjoint_matrix(g), xi)

    def coAd(self, g, sigma):
        """Coadjoint action: <coAd(g, sigma), xi> = <sigma, Ad_g xi>."""
        return np.einsum("...ba,...b->...a", self.adjoint_matrix(g), sigma)

    def dexp_right(self, xi, dxi):
        """Right-trivialized differential of exp.

        Returns eta with d/dt exp(xi(t)) = hat(eta) exp(xi) for dxi = xi'(t).
        """
        return np.einsum("...ab,...b->...a", self.dexp_right_matrix(xi), dxi)

    def dexp_right_matrix(self, xi):
        """Matrix of the right-trivialized differential of exp, (..., k, k)."""
        raise NotImplementedError

    def dexp_left(self, xi, dxi):
        """Left-trivialized differential of exp (exp(xi)^-1 d exp(xi))."""
        return self.dexp_right(-np.asarray(xi, float), dxi)

    def project(self, g):
        """Re-project a numerically drifted element onto the group."""
        raise NotImplementedError

    def random(self, rng, shape=()):
        """Spread-out random elements (Haar for SO(3), uniform angle for U(1))."""
        raise NotImplementedError


class CircleGroup(StructureGroup):
    """U(1) stored as a real angle; group law is addition of angles."""

    kind = "circle"
    dim_o = 1
    element_shape = ()
    tau_scale = 1.0 / (4.0 * np.pi**2)

    def __init__(self):
        self.structure_constants = np.zeros((1, 1, 1))

    def identity(self, shape=()):
        return np.zeros(shape)

    def exp(self, xi):
        return np.asarray(xi, dtype=float)[..., 0]

    def log(self, g):
        # principal value in (-pi, pi]
        ang = np.mod(np.asarray(g, dtype=float) + np.pi, 2 * np.pi) - np.pi
        ang = np.where(ang == -np.pi, np.pi, ang)
        return ang[..., None]

    def compose(self, g1, g2):
        return np.asarray(g1) + np.asarray(g2)

    def inverse(self, g):
        return -np.asarray(g)

    def adjoint_matrix(self, g):
        return np.ones(np.shape(g) + (1, 1))

    def dexp_right_matrix(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.ones(xi.shape[:-1] + (1, 1))

    def project(self, g):
        return np.asarray(g, dtype=float)

    def random(self, rng, shape=()):
        return rng.uniform(-np.pi, np.pi, size=shape)

    @staticmethod
    def reduce(g):
        """Angle reduced to [0, 2*pi), for output/serialization only."""
        return np.mod(g, 2 * np.pi)


def hat(xi):
    """so(3) coordinates -> antisymmetric matrix, vectorized."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape[:-1] + (3, 3))
    x, y, z = xi[..., 0], xi[..., 1], xi[..., 2]
    out[..., 0, 1], out[..., 0, 2] = -z, y
    out[..., 1, 0], out[..., 1, 2] = z, -x
    out[..., 2, 0], out[..., 2, 1] = -y, x
    return out


def unhat(m):
    """Antisymmetric matrix -> so(3) coordinates (antisymmetrizes first)."""
    m = np.asarray(m, dtype=float)
    a = 0.5 * (m - np.swapaxes(m, -1, -2))
    return np.stack([a[..., 2, 1], a[..., 0, 2], a[..., 1, 0]], axis=-1)


class Rotation3Group(StructureGroup):
    """SO(3) as 3x3 orthogonal matrices, algebra in hat-map coordinates."""

    kind = "rotation3"
    dim_o = 3
    element_shape = (3, 3)
    tau_scale = (8.0 * np.pi**2) ** (-2.0 / 3.0)

    def __init__(self):
        # Levi-Civita: [e_a, e_b] = eps_abc e_c
        C = np.zeros((3, 3, 3))
        for a, b, c in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
            C[a, b, c] = 1.0
            C[b, a, c] = -1.0
        self.structure_constants = C

    def ad(self, xi, eta):
        return np.cross(xi, eta)

    def coad(self, xi, sigma):
        # <coad(xi, sigma), eta> = sigma . (xi x eta) = eta . (sigma x xi)
        return np.cross(sigma, xi)

    def identity(self, shape=()):
        return np.broadcast_to(np.eye(3), shape + (3, 3)).copy()

    def exp(self, xi):
        """Rodrigues formula, series-stabilized near zero."""
        xi = np.asarray(xi, dtype=float)
        theta = np.linalg.norm(xi, axis=-1)
        a, b = _sinc_pair(theta)
        K = hat(xi)
        K2 = K @ K
        return np.eye(3) + a[..., None, None] * K + b[..., None, None] * K2

    def log(self, g):
        g = np.asarray(g, dtype=float)
        tr = np.trace(g, axis1=-2, axis2=-1)
        if np.any(tr <= -1.0 + _CUT_LOCUS_TRACE_TOL):
            raise CutLocusError("rotation angle within tolerance of pi")
        c = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
        theta = np.arccos(c)
        # theta / (2 sin theta), with the even Taylor series taking over near 0
        small = theta < 1e-4
        th2 = theta**2
        with np.errstate(invalid="ignore", divide="ignore"):
            fac = np.where(small, 0.5 + th2 / 12.0 + 7.0 * th2**2 / 720.0,
                           theta / (2.0 * np.sin(np.where(small, 1.0, theta))))
        return fac[..., None] * unhat(g - np.swapaxes(g, -1, -2))

    def compose(self, g1, g2):
        return np.asarray(g1) @ np.asarray(g2)

    def inverse(self, g):
        return np.swapaxes(np.asarray(g), -1, -2).copy()

    def adjoint_matrix(self, g):
        # under the hat identification Ad_R = R
        return np.asarray(g, dtype=float)

    def dexp_right_matrix(self, xi):
        xi = np.asarray(xi, dtype=float)
        theta = np.linalg.norm(xi, axis=-1)
        c1, c2 = _dexp_pair(theta)
        K = hat(xi)
        return np.eye(3) + c1[..., None, None] * K + c2[..., None, None] * (K @ K)

    def project(self, g):
        u, _, vt = np.linalg.svd(np.asarray(g, dtype=float))
        r = u @ vt
        det = np.linalg.det(r)
        # flip the last singular direction where det = -1
        flip = np.where(det < 0, -1.0, 1.0)
        u = u.copy()
        u[..., :, -1] *= flip[..., None]
        return u @ vt

    def random(self, rng, shape=()):
        # Haar measure via normalized quaternions
        q = rng.normal(size=shape + (4,))
        q /= np.linalg.norm(q, axis=-1, keepdims=True)
        w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
        R = np.empty(shape + (3, 3))
        R[..., 0, 0] = 1 - 2 * (y * y + z * z)
        R[..., 0, 1] = 2 * (x * y - z * w)
        R[..., 0, 2] = 2 * (x * z + y * w)
        R[..., 1, 0] = 2 * (x * y + z * w)
        R[..., 1, 1] = 1 - 2 * (x * x + z * z)
        R[..., 1, 2] = 2 * (y * z - x * w)
        R[..., 2, 0] = 2 * (x * z - y * w)
        R[..., 2, 1] = 2 * (y * z + x * w)
        R[..., 2, 2] = 1 - 2 * (x * x + y * y)
        return R


def _sinc_pair(theta):
    """(sin t / t, (1 - cos t) / t^2) with series fallback near zero."""
    small = theta < 1e-4
    t2 = theta**2
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - t2 / 6.0 + t2**2 / 120.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - t2 / 24.0 + t2**2 / 720.0, (1.0 - np.cos(safe)) / safe**2)
    return a, b


def _dexp_pair(theta):
    """Coefficients of hat(xi) and hat(xi)^2 in the right-trivialized dexp."""
    small = theta < 1e-4
    t2 = theta**2
    safe = np.where(small, 1.0, theta)
    c1 = np.where(small, 0.5 - t2 / 24.0 + t2**2 / 720.0, (1.0 - np.cos(safe)) / safe**2)
    c2 = np.where(small, 1.0 / 6.0 - t2 / 120.0 + t2**2 / 5040.0, (safe - np.sin(safe)) / safe**3)
    return c1, c2


_GROUPS = {"circle": CircleGroup, "rotation3": Rotation3Group, "u1": CircleGroup, "so3": Rotation3Group}


def make_group(kind):
    """Factory accepting 'circle'/'u1' or 'rotation3'/'so3'."""
    try:
        return _GROUPS[kind.lower()]()
    except KeyError:
        raise ValueError(f"unknown structure group kind: {kind!r}") from None
