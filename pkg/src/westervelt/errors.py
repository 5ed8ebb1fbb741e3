"""Exception types shared across the package.

Numerical failure modes are surfaced as typed exceptions so that callers
(and the CLI) can distinguish a diverged Newton iteration from a blown-up
explicit scheme or a degenerate coefficient, and react without crashing.
"""


class WesterveltError(Exception):
    """Base class for all failures raised by this package."""


class GridMismatch(WesterveltError):
    """Operands live on different grids."""


class DegenerateState(WesterveltError):
    """The factor 1 - delta*vel is not positive (or fell below the monitor floor)."""

    def __init__(self, message, step_index=None, last_state=None):
        super().__init__(message)
        self.step_index = step_index
        self.last_state = last_state


class RadicandNonpositive(WesterveltError):
    """The closed-form B-step radicand fell below its floor.

    Carries the first offending node and the largest admissible substep
    ``h_max`` for the state that was passed in.
    """

    def __init__(self, message, node_index, h_max):
        super().__init__(message)
        self.node_index = node_index
        self.h_max = h_max


class NewtonDivergence(WesterveltError):
    """Newton residual did not drop below tolerance within the iteration cap."""

    def __init__(self, message, residual=None, iterations=None,
                 step_index=None, last_state=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step_index = step_index
        self.last_state = last_state


class BlowupDetected(WesterveltError):
    """A field left the finite/bounded range during time integration."""

    def __init__(self, message, step_index=None, last_state=None):
        super().__init__(message)
        self.step_index = step_index
        self.last_state = last_state


class SelfConsistencyFailure(WesterveltError):
    """Reference solution failed its half-resolution agreement gate."""
