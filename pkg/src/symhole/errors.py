"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class HoleIRError(Exception):
    """Base class for all library errors."""


class UnknownValue(HoleIRError):
    pass


class TypeMismatch(HoleIRError):
    pass


class ScopeError(HoleIRError):
    pass


class StillInUse(HoleIRError):
    def __init__(self, target, uses):
        self.target = target
        self.uses = list(uses)
        super().__init__(f"{target!r} still has {len(self.uses)} use(s)")


class NotAHole(HoleIRError):
    pass


class TypeConflict(HoleIRError):
    """Two incompatible concrete types were inferred for one type class.

    ``witness`` is a chain of slots linked by equality edges, running from
    the slot being resolved to the slot that carried the other type.
    """

    def __init__(self, first, second, witness=(), message=None):
        self.types = (first, second)
        self.witness = list(witness)
        if message is None:
            message = f"type conflict: {first} vs {second}"
            if self.witness:
                message += " via " + " ~ ".join(_slot_str(s) for s in self.witness)
        super().__init__(message)


def _slot_str(slot) -> str:
    describe = getattr(slot, "describe", None)
    return describe() if describe else repr(slot)


class ParseError(HoleIRError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__(str(first) if first else "parse error")


class UnresolvedHoles(HoleIRError):
    pass


class FuelExhausted(HoleIRError):
    pass


class InterpError(HoleIRError):
    pass


class PolicyInfeasible(HoleIRError):
    pass


class ConfigError(HoleIRError):
    pass


class FillError(HoleIRError):
    """An assignment could not be applied; wraps the underlying error."""

    def __init__(self, line, hole, error):
        self.line = line
        self.hole = hole
        self.error = error
        super().__init__(f"line {line}: @{hole}: {error}")


class NotFound(HoleIRError):
    def __init__(self, candidates_tried):
        self.candidates_tried = candidates_tried
        super().__init__(f"no equivalent candidate after {candidates_tried} tries")
