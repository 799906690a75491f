"""Exception types raised across the package."""


class PolicyscopeError(Exception):
    pass


class DomainError(PolicyscopeError, ValueError):
    """Input lies outside the domain an operation is defined on."""


class StateError(PolicyscopeError, RuntimeError):
    """Operation requires state that is not available (empty history, unfitted model)."""


class ValidationError(PolicyscopeError, ValueError):
    pass


class ParseError(PolicyscopeError, ValueError):
    """Structured output could not be extracted from model text.

    ``description`` is phrased so it can be handed back to the model verbatim
    in a corrective re-ask.
    """

    def __init__(self, description):
        super().__init__(description)
        self.description = description


class RenderError(PolicyscopeError, KeyError):
    def __init__(self, placeholder):
        super().__init__(placeholder)
        self.placeholder = placeholder

    def __str__(self):
        return f"no value supplied for placeholder {{{{{self.placeholder}}}}}"


class NumericalError(PolicyscopeError, ArithmeticError):
    pass


class ConfigError(PolicyscopeError, ValueError):
    pass


class ReplayError(PolicyscopeError, RuntimeError):
    pass


class ResultsFileError(PolicyscopeError, OSError):
    """A results file is missing or cannot be parsed."""


class RunError(PolicyscopeError, RuntimeError):
    """A run stopped early; ``result`` holds the records gathered so far."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
