"""Exception types shared across the package.

Every domain failure raises a subclass of :class:`NmaError`, so callers
(and the CLI, which maps them to exit code 2) can catch one base type.
"""


class NmaError(Exception):
    """Base class for all domain errors."""


# --- matrices ---------------------------------------------------------------

class NonSquareError(NmaError):
    pass


class ColumnSumViolation(NmaError):
    def __init__(self, column, total):
        self.column = column
        self.total = total
        super().__init__(f"column {column} sums to {total!r}, expected 1")


class NotPrimitiveError(NmaError):
    pass


class NoConvergenceError(NmaError):
    def __init__(self, iterations):
        self.iterations = iterations
        super().__init__(f"power iteration did not converge in {iterations} iterations")


class NotPositiveError(NmaError):
    pass


class NotReversibleError(NmaError):
    pass


class EigenFailure(NmaError):
    pass


class DeadlineNotSupported(NmaError):
    pass


# --- kernels and tandems ----------------------------------------------------

class KernelAxiomViolation(NmaError):
    pass


class TandemAxiomViolation(NmaError):
    pass


class NotTransitiveError(NmaError):
    def __init__(self, worst_triple=None, violation=None):
        self.worst_triple = worst_triple
        self.violation = violation
        msg = "kernel is not transitive"
        if worst_triple is not None:
            msg += f" (worst triple {worst_triple}, violation {violation:.3g})"
        super().__init__(msg)


class InvalidSError(NmaError):
    def __init__(self, pair, value=None):
        self.pair = pair
        self.value = value
        super().__init__(f"status-quo index invalid on pair {pair}: {value!r}")


class NotChronometricError(NmaError):
    pass


# --- binary choice models ---------------------------------------------------

class NonInjectiveNu(NmaError):
    pass


class NoInformativePair(NmaError):
    pass


class InconsistentTandem(NmaError):
    def __init__(self, max_deviation):
        self.max_deviation = max_deviation
        super().__init__(
            f"tandem is not generated by any drift-diffusion model "
            f"(max deviation {max_deviation:.3g})"
        )


class StepTooLarge(NmaError):
    pass


class MaxStepsExceeded(NmaError):
    def __init__(self, max_steps):
        self.max_steps = max_steps
        super().__init__(f"trial censored after {max_steps} steps")


class EmptyCell(NmaError):
    def __init__(self, cells):
        self.cells = cells
        super().__init__(f"no trials observed for cells: {cells}")


# --- engine -------------------------------------------------------------------

class DimensionMismatch(NmaError):
    pass


class DeadlineNotExact(NmaError):
    pass


class SingularSolve(NmaError):
    pass


class SamplerRequired(NmaError):
    pass


class TandemRequired(NmaError):
    pass


class ParseError(NmaError):
    """Malformed input file. The CLI maps this to exit code 1, not 2."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class NotNiceExploration(NmaError):
    pass


class RegularityViolated(NmaError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"regularity violated: {reason}")


class IterationCap(NmaError):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"deadline run exceeded the safety cap of {cap} iterations")
