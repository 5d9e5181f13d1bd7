"""Exception types shared across the package."""


class SDLError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SDLError, ValueError):
    """Invalid resolution, size or experiment configuration."""


class DomainError(SDLError, ValueError):
    """Operation called on an unsupported domain or parameter value."""


class DegreeError(SDLError, ValueError):
    """Form degree outside the range an operator accepts."""


class UsageError(SDLError, ValueError):
    """Operands live on different manifolds or have mismatched shapes."""


class InputError(SDLError, ValueError):
    """Input data violates an operation's precondition (e.g. non-closed form)."""


class PreconditionError(SDLError, ValueError):
    """A map fails a precondition such as criticality or coclosedness."""


class UnsupportedTargetError(SDLError, ValueError):
    """Fibration target is not Hermitian symmetric."""


class NumericalError(SDLError, RuntimeError):
    """An iterative solver or eigensolver failed to converge."""


class StagnationError(NumericalError):
    """Line search collapsed the step below its floor."""


class HomotopyEscapeError(NumericalError):
    """The Hopf invariant drifted beyond tolerance during a flow."""
