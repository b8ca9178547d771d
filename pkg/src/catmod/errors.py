"""Exception hierarchy shared by all pipeline stages."""


class CatmodError(Exception):
    """Base class for user/data errors; ``stage`` names the failing step."""

    stage = "catmod"


class VectorFormatError(CatmodError):
    stage = "load-vectors"


class LexiconFormatError(CatmodError):
    stage = "load-lexicon"


class ResolveError(CatmodError):
    stage = "resolve"


class GraphError(CatmodError):
    stage = "graph"


class DegenerateInputError(CatmodError):
    """Raised when modularity normalization is undefined (Q_max == 0)."""

    stage = "modularity"


class UndefinedCorrelationError(CatmodError):
    stage = "correlate"


class TaskError(CatmodError):
    stage = "task"


class SweepError(CatmodError):
    stage = "sweep"


class ManifestError(SweepError):
    pass
