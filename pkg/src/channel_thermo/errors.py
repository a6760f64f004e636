"""Exception hierarchy.

Every error carries a stable ``code`` string used by the CLI when it
reports failures as JSON, and an ``exit_status``: 2 for bad input, 1 for
numerical failure.
"""


class ChannelThermoError(Exception):
    code = "error"
    exit_status = 1


class ValidationError(ChannelThermoError, ValueError):
    code = "validation"
    exit_status = 2


class NumericalError(ChannelThermoError, ArithmeticError):
    code = "numeric"
    exit_status = 1


class NonSquare(ValidationError):
    code = "non_square"


class NegativeEntry(ValidationError):
    code = "negative_entry"


class RowSumViolation(ValidationError):
    code = "row_sum_violation"


class DimensionMismatch(ValidationError):
    code = "dimension_mismatch"


class InvalidDistribution(ValidationError):
    code = "invalid_distribution"


class SupportViolation(ValidationError):
    code = "support_violation"


class OutOfRange(ValidationError):
    code = "out_of_range"


class InvalidParams(ValidationError):
    code = "invalid_params"


class InvalidPerturbation(ValidationError):
    code = "invalid_perturbation"


class StepOutOfRange(ValidationError):
    code = "step_out_of_range"


class NonPositiveBeta(ValidationError):
    code = "non_positive_beta"


class DegenerateDistribution(ValidationError):
    code = "degenerate_distribution"


class MissingPStar(ValidationError):
    code = "missing_p_star"


class NoConvergence(NumericalError):
    code = "no_convergence"

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SingularChannel(NumericalError):
    code = "singular_channel"


class NotApplicable(NumericalError):
    code = "muroga_not_applicable"

    def __init__(self, message, d=None):
        super().__init__(message)
        self.d = d


class ZeroEntry(NumericalError):
    code = "zero_entry"


class NonUniqueInvariant(NumericalError):
    code = "non_unique_invariant"


class NotFound(NumericalError):
    code = "invariant_not_found"


class ZeroInvariantMass(NumericalError):
    code = "zero_invariant_mass"


class NotInvariant(ValidationError):
    code = "not_invariant"


class SymmetryViolation(NumericalError):
    code = "symmetry_violation"


class InfiniteTimescale(NumericalError):
    code = "infinite_timescale"


class IdentityViolation(NumericalError):
    code = "identity_violation"


class AllCellsFailed(NumericalError):
    code = "all_cells_failed"


class SingularNeighborhood(NumericalError):
    code = "singular_neighborhood"
