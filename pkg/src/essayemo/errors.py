"""Exception hierarchy shared by every stage of the pipeline."""


class EssayEmoError(Exception):
    """Base class for all package errors."""


# corpus

class LabelError(EssayEmoError, ValueError):
    pass


class UnknownEmotion(LabelError):
    def __init__(self, part):
        super().__init__(f"unknown emotion {part!r}")
        self.part = part


class EmptyLabel(LabelError):
    def __init__(self, raw=""):
        super().__init__(f"empty emotion label {raw!r}")


class UnknownCategory(LabelError):
    """Label is well formed but not one of the 31 task categories."""


class CorpusError(EssayEmoError):
    pass


class MissingColumn(CorpusError):
    def __init__(self, column, path=None):
        super().__init__(f"column {column!r} missing from header of {path}")
        self.column = column


class DuplicateId(CorpusError):
    def __init__(self, essay_id, first_row, second_row):
        super().__init__(f"duplicate essay id {essay_id!r} (rows {first_row} and {second_row})")
        self.essay_id = essay_id
        self.rows = (first_row, second_row)


class MalformedRow(CorpusError):
    def __init__(self, row, expected, found, reason=None):
        super().__init__(f"row {row}: {reason}" if reason
                         else f"row {row}: expected {expected} fields, found {found}")
        self.row = row


class LabelParseError(CorpusError):
    def __init__(self, row, cause):
        super().__init__(f"row {row}: {cause}")
        self.row = row
        self.cause = cause


class UnlabeledEssay(CorpusError):
    def __init__(self, essay_id):
        super().__init__(f"essay {essay_id!r} has no label")
        self.essay_id = essay_id


class InvalidWeights(CorpusError, ValueError):
    pass


# embed

class EmbeddingError(EssayEmoError):
    pass


class DimensionMismatch(EmbeddingError):
    def __init__(self, line, expected, found):
        super().__init__(f"line {line}: expected {expected} values, found {found}")
        self.line = line


class MalformedFloat(EmbeddingError):
    def __init__(self, line, token):
        super().__init__(f"line {line}: cannot parse {token!r} as a float")
        self.line = line


class EmptyFile(EmbeddingError):
    pass


class EmptyToken(EmbeddingError, ValueError):
    pass


class SequenceTooLong(EmbeddingError):
    pass


class EmptyProviderList(EmbeddingError, ValueError):
    pass


# model

class ModelError(EssayEmoError):
    pass


class ShapeMismatch(ModelError):
    pass


class UnlabeledTraining(ModelError):
    pass


class EmptyCorpus(ModelError):
    pass


class BackendUnavailable(ModelError):
    pass


class VocabularyMismatch(ModelError):
    pass


class CorruptArtifact(ModelError):
    pass


class VersionMismatch(ModelError):
    pass


# metrics

class MetricsError(EssayEmoError, ValueError):
    pass


class LengthMismatch(MetricsError):
    def __init__(self, left, right):
        super().__init__(f"length mismatch: {left} vs {right}")


class EmptyInput(MetricsError):
    pass


class EmptyLeaderboard(MetricsError):
    pass


class MissingIds(MetricsError):
    pass


# experiment

class ConfigError(EssayEmoError, ValueError):
    pass


class StageError(EssayEmoError):
    """Wraps an underlying failure with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class IoFailure(EssayEmoError, OSError):
    pass
