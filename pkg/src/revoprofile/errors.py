"""Exception hierarchy. Every pipeline failure carries a distinct CLI exit code."""


class ReconstructionError(Exception):
    """Base class for all pipeline failures."""

    exit_code = 1


class DegenerateDirection(ReconstructionError):
    exit_code = 10


class RankDeficient(ReconstructionError):
    exit_code = 11


class NoConvergence(ReconstructionError):
    exit_code = 12


class TooShort(ReconstructionError):
    exit_code = 13


class NoCluster(ReconstructionError):
    exit_code = 14


class CorrespondenceCollapse(ReconstructionError):
    exit_code = 15


class NotConverged(ReconstructionError):
    """refine stopped at max_iterations and partial output was not allowed."""

    exit_code = 16


class ProfilesDisjoint(ReconstructionError):
    exit_code = 17


class InsufficientOverlap(ReconstructionError):
    exit_code = 18


class NoIntersection(ReconstructionError):
    exit_code = 19


class InputError(ReconstructionError):
    """Malformed input file or invalid configuration."""

    exit_code = 2
