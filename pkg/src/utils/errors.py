"""
Exception taxonomy for graph-crb

Three families map onto the command-line exit codes:
usage problems (1), bad input data (2) and numerical failures (3).
"""
from typing import Optional


class GraphCRBError(Exception):
    """Base class for every error raised by the library"""

    exit_code = 3


# ---------------------------------------------------------------- usage (1)

class UsageError(GraphCRBError):
    """Inconsistent or missing command-line arguments"""

    exit_code = 1


# ----------------------------------------------------------------- data (2)

class DataError(GraphCRBError, ValueError):
    """Input data that violates a documented format or invariant"""

    exit_code = 2


class ParseError(DataError):
    """Malformed row in an input file"""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location += f"{path}:"
        if line is not None:
            location += f"{line}:"
        super().__init__(f"{location} {message}".strip() if location else message)


class DuplicateEdge(ParseError):
    pass


class SelfLoop(ParseError):
    pass


class NegativeWeight(ParseError):
    pass


class ZeroWeight(ParseError):
    pass


class NodeIndexOutOfRange(ParseError):
    pass


class DimensionMismatch(DataError):
    pass


class VertexCountMismatch(DataError):
    pass


class ConfigError(DataError):
    """Experiment configuration that cannot be used"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class InvalidVariance(DataError):
    pass


class BadCovariance(DataError):
    pass


class InvalidPower(DataError):
    pass


class EmptyBand(DataError):
    pass


class BandOutOfRange(DataError):
    pass


class InvalidTree(DataError):
    pass


# ------------------------------------------------------------ numerical (3)

class NumericalError(GraphCRBError):
    """A computation whose preconditions do not hold numerically"""

    exit_code = 3


class DisconnectedGraph(NumericalError):
    pass


class RankDeficientConstraint(NumericalError):
    pass


class SingularInformation(NumericalError):
    pass


class InfeasibleBudget(NumericalError):
    pass


class AllCandidatesSingular(NumericalError):
    pass


class NoFeasibleSubset(NumericalError):
    pass


class GenerationFailed(NumericalError):
    pass


class ExperimentError(GraphCRBError):
    """Component failure annotated with the sweep point that triggered it"""

    def __init__(self, message: str, cause: GraphCRBError):
        self.cause = cause
        self.exit_code = cause.exit_code
        super().__init__(message)
