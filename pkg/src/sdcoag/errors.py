"""Exception types shared across the package."""


class SDCoagError(Exception):
    """Base class for package-specific errors."""


class ConfigError(SDCoagError):
    """Invalid or malformed run configuration."""


class KernelRangeError(SDCoagError, IndexError):
    """Cluster index outside the representable range of a table form."""


class ClassificationError(SDCoagError, ValueError):
    """Kernel classification is undefined for the given inputs."""


class UnsupportedKernelError(SDCoagError, ValueError):
    """Operation requires a separable kernel but got a table form."""


class NumericsError(SDCoagError):
    """Non-finite values encountered during evaluation."""


class IntegrationFailure(NumericsError):
    """Step size underflow during time integration.

    Carries the last accepted time and concentration vector so callers can
    inspect how far the run got before the failure.
    """

    def __init__(self, message, t=None, omega=None):
        super().__init__(message)
        self.t = t
        self.omega = omega


class ResolutionError(SDCoagError, ValueError):
    """Sample grid too coarse for the requested quadrature."""


class OracleInvalidError(SDCoagError):
    """Fixed-step reference run did not converge under step halving."""
