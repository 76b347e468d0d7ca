"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the domain an operation is defined on."""


class ParameterError(ValueError):
    """A parameter set violates one of the model invariants.

    ``invariant`` holds the violated relation in readable form (for example
    ``"β_u > β_p"``) and ``fields`` the parameter names it involves.
    """

    def __init__(self, invariant: str, fields: tuple[str, ...], detail: str = ""):
        self.invariant = invariant
        self.fields = fields
        msg = f"invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class StepSizeError(ArithmeticError):
    """An integration step left the unit box by more than the projection tolerance."""

    def __init__(self, message: str, time: float):
        self.time = time
        super().__init__(f"at t={time:.6g}: {message}")


class NoSlidingError(ValueError):
    """The switching surface is not attractive, so no sliding mode exists."""


class ChatteringError(RuntimeError):
    """Too many surface transitions without engaging a sliding mode."""


class VariantError(ValueError):
    """The reduced SIRI field was requested for the wrong immunity ordering."""
