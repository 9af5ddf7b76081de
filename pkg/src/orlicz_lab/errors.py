"""Exception hierarchy.

Two families matter to callers: configuration/usage problems
(:class:`UsageError`) and numerical failures (:class:`NumericalError`).
The CLI maps them to distinct exit codes.
"""


class OrliczLabError(Exception):
    """Base class for every error raised by this package."""


class UsageError(OrliczLabError):
    """Bad input: malformed spec strings, inconsistent configs, bad domains."""


class ParseError(UsageError):
    """A potential specification string does not follow the grammar."""

    def __init__(self, message, text="", position=0):
        self.text = text
        self.position = position
        if text:
            pointer = " " * position + "^"
            message = f"{message} at position {position}\n  {text}\n  {pointer}"
        super().__init__(message)


class DomainError(UsageError):
    """A parameter is syntactically fine but outside its admissible range."""


class AlphaDomainError(DomainError):
    """The inverse temperature must be strictly negative."""


class ConfigError(UsageError):
    """Inconsistent sampler or experiment configuration."""


class HypothesisError(UsageError):
    """A growth or integrability hypothesis fails numerically."""


class NumericalError(OrliczLabError):
    """A numerical routine could not deliver its contract."""


class QuadratureError(NumericalError):
    """Adaptive quadrature exhausted its subdivision budget."""


class IntegrabilityError(NumericalError):
    """An integrand does not decay: the integral is (numerically) infinite."""


class BracketError(NumericalError):
    """A root could not be bracketed within the allowed parameter range."""


class InfeasibleError(NumericalError):
    """The moment constraints admit no probability density (dual unbounded)."""


class DivergenceError(NumericalError):
    """All multipliers vanished: exp(0) is not integrable on the line."""


class DegenerateError(NumericalError):
    """A splitting stage produced no hits."""
