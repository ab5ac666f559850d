"""Exception hierarchy.

Every error raised by the library derives from :class:`WStarError`.  The
``exit_code`` attribute is what the command line returns when the error
escapes a subcommand: 3 for rejected input, 4 for numerical failures.
"""


class WStarError(Exception):
    exit_code = 4

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ValidationError(WStarError):
    exit_code = 3


class NumericError(WStarError):
    exit_code = 4


# algebra_core
class ShapeMismatch(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class MultiBlockUnsupported(ValidationError):
    pass


class BadWeights(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class BadRank(ValidationError):
    pass


# modular_theory / logic_eval
class OutsideStrip(ValidationError):
    pass


class BadDimension(ValidationError):
    pass


# formula_dsl
class ParseError(ValidationError):
    def __init__(self, offset, expected, found):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(
            f"parse error at offset {offset}: expected {expected}, found {found!r}",
            field="formula",
        )


class UnboundVariable(ValidationError):
    pass


class SortError(ValidationError):
    pass


# powers_lab
class BadParameter(ValidationError):
    pass


class RationalLogRatio(ValidationError):
    pass


class DimensionCap(ValidationError):
    pass


class BadEigs(ValidationError):
    pass


class ScanTooCoarse(ValidationError):
    pass


# ultraproduct_sim
class UnknownFamily(ValidationError):
    pass


class BoundViolated(ValidationError):
    pass


class ProbeNotInIdeal(ValidationError):
    pass


class NotPositive(ValidationError):
    pass
