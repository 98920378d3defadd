"""Exception hierarchy shared by services and the command line.

Every error carries an exit code and a detail payload, the way an HTTP
exception carries a status and a detail.
"""

VALIDATION = 2
NUMERIC = 3


class FqwError(Exception):
    code = VALIDATION

    def __init__(self, detail, code=None):
        super().__init__(detail)
        self.detail = detail
        if code is not None:
            self.code = code

    def to_dict(self):
        return {"error": type(self).__name__, "detail": self.detail, "code": self.code}


class ValidationError(FqwError):
    code = VALIDATION


class NumericError(FqwError):
    code = NUMERIC


class StepSetError(ValidationError):
    pass


class DegenerateKernelError(ValidationError):
    pass


class ReducibleKernelError(ValidationError):
    pass


class GenusCaseError(NumericError):
    def __init__(self, detail, pattern):
        super().__init__(detail)
        self.pattern = pattern

    def to_dict(self):
        out = super().to_dict()
        out["pattern"] = self.pattern
        return out


class DenominatorError(ValidationError):
    pass


class SamplingError(NumericError):
    pass


class CriterionInapplicableError(ValidationError):
    pass


class NonErgodicError(ValidationError):
    pass


class TruncationError(NumericError):
    pass
