"""Exception hierarchy for capnet."""


class CapnetError(Exception):
    """Base class for all errors raised by capnet."""


class FormatError(CapnetError, ValueError):
    """Malformed input file. ``line`` is 1-based, or None for whole-file problems."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InertStateError(CapnetError):
    pass


class UnsupportedCaseError(CapnetError):
    """The requested quantity is deliberately not defined for this input (e.g. killing)."""


class UndeterminedPotentialError(CapnetError):
    """Some interior state cannot reach A or B, so the potential there is not fixed."""

    def __init__(self, states):
        self.states = tuple(states)
        super().__init__(
            "undetermined potential: interior states disconnected from A and B: "
            + ", ".join(map(str, self.states))
        )


class SolverError(CapnetError):
    """Linear solve failed or left a residual above tolerance."""


class ConvergenceError(CapnetError):
    def __init__(self, steps, last_increment):
        self.steps = steps
        self.last_increment = last_increment
        super().__init__(
            f"no convergence after {steps} steps (last increment {last_increment:.3e})"
        )


class FlowError(CapnetError):
    """A flow or path measure violates a structural precondition."""


class AbsoluteContinuityError(FlowError):
    """Positive flow mass on an edge with zero conductance or a zero derivative on a path."""


class CyclicSupportError(FlowError):
    pass


class PathTooLongError(FlowError):
    def __init__(self, partial, max_len):
        self.partial = tuple(partial)
        self.max_len = max_len
        super().__init__(
            f"path exceeded max_len={max_len} without reaching B "
            f"(partial path ends at {self.partial[-1]!r})"
        )


class TooManyPathsError(FlowError):
    pass
