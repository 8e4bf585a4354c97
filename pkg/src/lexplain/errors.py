"""Exception hierarchy shared by all modules.

DataError covers malformed or inconsistent input data (CLI exit code 2),
ModelError covers model, training and checkpoint failures (exit code 3).
UsageError is reserved for bad invocations (exit code 1).
"""


class LexplainError(Exception):
    pass


class UsageError(LexplainError):
    pass


class DataError(LexplainError):
    pass


class ModelError(LexplainError):
    pass


# --- corpus ---

class EmptyAfterCleaning(DataError):
    pass


class ConflictingSameSentence(DataError):
    """One sentence matched both an accepting and a rejecting decision pattern."""


class NoPetitions(DataError):
    pass


class InsufficientClassSize(DataError):
    pass


class MalformedRecord(DataError):
    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


# --- metrics ---

class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class RaggedRows(DataError):
    pass


class TooFewRaters(DataError):
    pass


class DocMismatch(DataError):
    pass


# --- model ---

class DimensionMismatch(ModelError):
    pass


class TrainingDiverged(ModelError):
    pass


class SingleClass(ModelError):
    pass


class RowFailed(ModelError):
    """Embedding one chunk of a document failed; carries the chunk index."""

    def __init__(self, index, cause):
        super().__init__(f"embedding failed for chunk {index}: {cause}")
        self.index = index
        self.cause = cause


class CheckpointError(ModelError):
    pass


class BridgeError(ModelError):
    pass
