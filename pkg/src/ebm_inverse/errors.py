"""Exception hierarchy shared by the forward and inverse pipelines."""

from __future__ import annotations


class EbmError(Exception):
    """Base class for computation failures.

    ``stage`` is filled in by the inversion pipeline so callers can tell
    whether rates, weights or the modulus failed.
    """

    stage: str | None = None

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ValidationError(ValueError):
    """Invalid input parameters (raised before any computation)."""


class DimensionMismatch(ValidationError):
    pass


# polynomial / root finding
class ConjugacyViolation(EbmError):
    pass


class NotARoot(EbmError):
    pass


class DegreeMismatch(EbmError):
    pass


class MaxIterExceeded(EbmError):
    pass


class SignAgreement(EbmError):
    pass


# forward problem
class BracketFailure(EbmError):
    pass


class DeflationResidual(EbmError):
    pass


class PoleCollision(EbmError):
    pass


# inverse problem
class FrequencyOrder(EbmError):
    pass


class NearZeroLambda(EbmError):
    pass


class NonPositiveRate(EbmError):
    pass


class DegenerateRates(EbmError):
    pass


class LabelingAmbiguous(EbmError):
    pass
