"""Exception and warning types raised by the solver stack."""


class CompstabError(Exception):
    """Base class for all package errors."""


class ParameterError(CompstabError, ValueError):
    """Invalid physical or numerical parameter."""


class ProfileError(CompstabError, ValueError):
    """Base-flow profile fails the structural hypotheses."""


class SubsonicViolation(ProfileError):
    """Weight function loses positivity (Mach number too large)."""


class NearSonic(CompstabError):
    """1 - m^2 (U - c)^2 comes too close to zero on the grid."""


class NearRealAxis(CompstabError, ValueError):
    """Im c too small for the critical-layer quadratures."""


class DivisionByZeroNear(CompstabError, ZeroDivisionError):
    """Denominator below the underflow guard."""


class QuadratureFailure(CompstabError):
    """A special-function or quadrature evaluation did not converge."""


class SingularSystem(CompstabError):
    """Collocation matrix is numerically singular."""


class SingularMatching(CompstabError):
    """Boundary matching matrix is numerically singular."""


class IllConditioned(UserWarning):
    """Linear system condition number exceeds the warning threshold."""


class ResolutionFailure(CompstabError):
    """No eigenvalue survived the grid-refinement test."""


class NoEigenvalueInWindow(CompstabError):
    """Spectrum contains no eigenvalue in the requested window."""


class NonContraction(CompstabError):
    """Resolvent iteration failed to contract."""


class ModeConstructionFailure(CompstabError):
    """Exact mode could not be built from its approximation."""


class NoRootInDisk(CompstabError):
    """Winding number of the dispersion function on the disk is not one."""


class NewtonDivergence(CompstabError):
    """Newton iteration left the disk or hit the iteration cap."""


class ConfigError(CompstabError):
    """Malformed command-line or configuration-file input."""
