"""Exception types shared across the package."""


class EpautError(Exception):
    """Base class for all package-specific errors."""


class CutLocusError(EpautError):
    """Group logarithm requested at (or too close to) the cut locus."""


class PointCloudHasNoDerivativeError(EpautError):
    """A derivative was requested on a zero-dimensional source manifold."""


class NonMonotoneError(EpautError):
    """Circle map samples do not define an orientation-preserving diffeomorphism."""


class NotRegularError(EpautError):
    """State violates the everywhere-nonzero momentum predicate."""


class NotConormalError(EpautError):
    """Target covector field does not annihilate the tangent of the embedded curve."""


class ProjectionFailedError(EpautError):
    """Nearest-point projection onto the embedded curve is ambiguous or diverged."""


class ImagesDifferError(EpautError):
    """Two states claimed to share an image do not, within tolerance."""


class NotInLevelSetError(EpautError):
    """Reconstruction inputs do not lie in a common momentum level set."""


class NotVolumePreservingError(EpautError):
    """Recovered reparametrization fails the unit-Jacobian requirement."""


class NoConvergenceError(EpautError):
    """Fixed-point iteration of the implicit step did not converge."""


class NotDivergenceFreeError(EpautError):
    """Velocity field handed to the incompressible right-hand side has divergence."""


class QuadratureNotConvergedError(EpautError):
    """Path quadrature did not stabilize under refinement."""


class ConfigInvalidError(EpautError):
    """Run configuration failed validation."""
