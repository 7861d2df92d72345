class PreconditionError(ValueError):
    """Raised when an operation is called outside its documented domain."""


class TruncationError(PreconditionError):
    """Raised when a truncated series is evaluated where its coefficients have not settled."""


class BudgetExceededError(RuntimeError):
    def __init__(self, budget: int, generated: int):
        self.budget = budget
        self.generated = generated
        super().__init__(
            f"Enumeration budget of {budget} polymers exceeded ({generated} generated); "
            "lower n_max or raise POLYLAB_BUDGET"
        )

    def __reduce__(self):
        return (self.__class__, (self.budget, self.generated))
