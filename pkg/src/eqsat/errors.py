"""Exception hierarchy shared across the engine."""


class EqsatError(Exception):
    pass


class SExprSyntaxError(EqsatError):
    """Malformed S-expression input; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ContractViolation(EqsatError):
    pass


class UnknownBuiltin(EqsatError):
    pass


class RuleSyntaxError(EqsatError):
    pass


class UnboundRhsVariable(RuleSyntaxError):
    def __init__(self, name: str):
        super().__init__(f"variable ~{name} appears on the RHS but not on the LHS")
        self.name = name


class UnknownPredicate(EqsatError):
    pass


class DuplicatePredicate(EqsatError):
    pass


class UnsupportedRuleKind(EqsatError):
    pass


class UnknownId(EqsatError):
    pass


class CapacityExceeded(EqsatError):
    pass


class SegmentUnsupported(EqsatError):
    pass


class InconsistentClass(EqsatError):
    pass


class AnalysisDiverged(EqsatError):
    pass


class Unextractable(EqsatError):
    pass
