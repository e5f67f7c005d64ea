"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 2 for malformed input
(bad SMILES, unreadable files), 3 for violated data contracts (row-count
mismatches, degenerate regression problems).
"""

from __future__ import annotations


class EctMolError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(EctMolError):
    exit_code = 2


class DataContractError(EctMolError):
    exit_code = 3


# --- SMILES -----------------------------------------------------------------


class SmilesError(InputError):
    """A SMILES string could not be parsed.

    Attributes:
        smiles: The offending input.
        position: Zero-based character offset of the problem, if known.
    """

    def __init__(self, message: str, smiles: str = "", position: int | None = None):
        self.smiles = smiles
        self.position = position
        if position is not None:
            message = f"{message} at position {position} in {smiles!r}"
        super().__init__(message)


class EmptyInput(SmilesError):
    pass


class UnbalancedParenthesis(SmilesError):
    pass


class UnmatchedRingClosure(SmilesError):
    pass


class UnknownToken(SmilesError):
    pass


class ValenceExceeded(SmilesError):
    pass


class SmilesSyntaxError(SmilesError):
    """Structural problems not covered above (dangling bonds, empty branches,
    self-loops, duplicate bonds)."""


# --- features / ECT ---------------------------------------------------------


class EmptyDataset(DataContractError):
    pass


class DimensionMismatch(DataContractError):
    pass


class InvalidDimension(DataContractError):
    pass


class InvalidCount(DataContractError):
    pass


# --- dataset I/O ------------------------------------------------------------


class IoFailure(InputError):
    pass


class MissingColumn(InputError):
    pass


class MalformedFile(InputError):
    pass


class EmptyAfterFiltering(DataContractError):
    pass


class NonPositiveTarget(DataContractError):
    pass


class RowCountMismatch(DataContractError):
    pass


class UnknownMolId(DataContractError):
    pass


# --- regression -------------------------------------------------------------


class SingularSystem(DataContractError):
    pass


class ShapeMismatch(DataContractError):
    pass


class TooFewRows(DataContractError):
    pass


class ZeroVariance(DataContractError):
    pass
