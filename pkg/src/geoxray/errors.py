"""Exception types shared across the package."""


class TrappedRay(Exception):
    """A geodesic failed to exit the disc within the step budget."""


class SingularB(Exception):
    """The second Jacobi field vanished away from t = 0 (conjugate point)."""


class ZeroReference(Exception):
    """Relative error requested against a reference with zero norm."""


class ConfigError(Exception):
    """Malformed experiment configuration (unknown key, bad value, bad line)."""
