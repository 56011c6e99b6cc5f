"""Custom exceptions for loo-verifier."""

from __future__ import annotations


class LooError(Exception):
    """Base exception for all loo-verifier errors."""

    pass


# --- parsing -----------------------------------------------------------------


class LooParseError(LooError):
    """Error parsing a source file."""

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<text>"):
        self.line = line
        self.column = column
        self.source = source
        location = f"{source}:{line}:{column}" if line else source
        super().__init__(f"{location}: {message}")


class LooSyntaxError(LooParseError):
    """Text does not follow the concrete syntax."""

    pass


class DuplicateDefinitionError(LooParseError):
    """A class, member, conjunct or derivation is defined twice."""

    pass


class UnsupportedFileError(LooParseError):
    """File type not recognised."""

    pass


# --- linking and lookups -----------------------------------------------------


class LinkError(LooError):
    """Modules cannot be linked (overlapping class names)."""

    pass


class UnknownClassError(LooError):
    """Class is not defined in the linked program."""

    pass


# --- evaluation --------------------------------------------------------------


class EvaluationError(LooError):
    """Expression or path could not be evaluated."""

    pass


class UnboundVariableError(EvaluationError):
    """Variable is not bound in the frame."""

    pass


class NullDereferenceError(EvaluationError):
    """Field or ghost access on null."""

    pass


class MissingFieldError(EvaluationError):
    """Object has no such field, or class has no such ghost field."""

    pass


class TypeMismatchError(EvaluationError):
    """Operator applied to values of the wrong kind."""

    pass


class GhostDivergenceError(EvaluationError):
    """Ghost field unfolding ran out of fuel."""

    pass


# --- machine -----------------------------------------------------------------


class MachineError(LooError):
    """Illegal manipulation of a program state."""

    pass


class PopError(MachineError):
    """Frame cannot be popped."""

    pass


class RestrictError(MachineError):
    """Frame index out of range."""

    pass


class DecompositionError(MachineError):
    """External trace does not split into external runs and public calls."""

    pass


# --- specifications ----------------------------------------------------------


class SpecError(LooError):
    """Specification cannot be used as requested."""

    pass


class RenamingError(SpecError):
    """Renaming is not safe."""

    pass


class InstantiationError(SpecError):
    """Binder instantiation does not match the declared classes."""

    pass


class CallSiteError(SpecError):
    """State is not a call site matching the method specification."""

    pass


# --- proofs and reports ------------------------------------------------------


class ProofError(LooError):
    """Proof bundle is malformed."""

    pass


class ProofReferenceError(ProofError):
    """Derivation cites an unknown premise, spec conjunct or assumption."""

    pass


class ReportError(LooError):
    """Error writing a report or trace."""

    pass
