"""Exception types shared across the toolkit."""


class DataFormatError(ValueError):
    """A data file (ratings, image, CSV) could not be parsed."""


class FixedPointDivergenceError(RuntimeError):
    """The scalar fixed-point iteration hit its iteration cap.

    Carries the offending input ``b`` and the last iterate so callers can
    diagnose the tolerance or penalty-parameter pathology that caused it.
    """

    def __init__(self, b, last_iterate, iterations):
        self.b = b
        self.last_iterate = last_iterate
        self.iterations = iterations
        super().__init__(
            f"fixed-point iteration did not converge within {iterations} steps "
            f"for b={b!r} (last iterate {last_iterate!r})"
        )


class SolverDivergenceError(RuntimeError):
    """A matrix solver produced a non-finite objective value."""
