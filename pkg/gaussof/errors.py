import pprint


class GaussofError(Exception):
    """
    Base class for gaussof errors
    Carries a free-form details dict (invariants report, solver state) that is pretty-printed with the message
    """

    def __init__(self, message='', details=None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self):
        if not self.details:
            return self.message
        pp = pprint.PrettyPrinter(indent=2)
        return (
            f"{self.message}\n"
            f"Details: \n"
            f"{pp.pformat(self.details)}"
        )


class NotSymmetricError(GaussofError):
    pass


class UnphysicalStateError(GaussofError):
    pass


class NotStandardBlockForm(GaussofError):
    pass


class NotSymplecticError(GaussofError):
    pass


class DegenerateBlockError(GaussofError):
    pass


class InputDocumentError(GaussofError):
    pass


class SolverError(GaussofError):
    pass


class NoRootBracketed(SolverError):
    pass


class ConstraintViolated(SolverError):
    pass


class NegativeResidual(SolverError):
    pass


class TruncationOverflow(GaussofError):
    pass


class OutsideConjectureRange(GaussofError, ValueError):
    pass


class DivergentDualError(GaussofError, ArithmeticError):
    pass


class OutsideEprRangeWarning(UserWarning):
    pass


class SeparableStateError(GaussofError):
    pass
