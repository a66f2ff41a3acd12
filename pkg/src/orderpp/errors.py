"""Error types raised across the package.

Every error carries a short machine-readable ``code`` so the command line can
report failures as a single JSON object.
"""


class OppError(Exception):
    code = "ERROR"

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def as_dict(self):
        out = {"error": self.code, "message": self.message}
        for key, value in self.details.items():
            out[key] = value
        return out


class ValidationError(OppError):
    code = "VALIDATION"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations), violations=self.violations)


class ParseError(OppError):
    code = "PARSE"


class UnknownStateError(OppError):
    code = "UNKNOWN_STATE"


class BudgetExceeded(OppError):
    code = "BUDGET_EXCEEDED"

    def __init__(self, message, visited=None):
        super().__init__(message, visited=visited)
        self.visited = visited


class UnsupportedPredicate(OppError):
    code = "UNSUPPORTED_PREDICATE"


class BasisBudget(OppError):
    code = "BASIS_BUDGET"


class SizeBudget(OppError):
    code = "SIZE_BUDGET"


class NotImmediateObservation(OppError):
    code = "NOT_IO"


class AlphabetMismatch(OppError):
    code = "ALPHABET_MISMATCH"


class NotInputSaving(OppError):
    code = "NOT_INPUT_SAVING"


class TMInvalid(OppError):
    code = "TM_INVALID"


class UnknownName(OppError):
    code = "UNKNOWN_NAME"


class UnboundVariable(OppError):
    code = "UNBOUND_VARIABLE"
