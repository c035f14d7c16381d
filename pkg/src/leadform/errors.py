"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`FormationError`, so callers (the CLI in particular) can separate
bad input from genuine bugs.
"""


class FormationError(Exception):
    """Base class for all library errors."""


# graph construction / structure
class GraphError(FormationError, ValueError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class IndexOutOfRange(GraphError):
    pass


class CycleDetected(GraphError):
    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


# bipartite / matchings
class NonSquare(FormationError, ValueError):
    pass


class LimitExceeded(FormationError):
    pass


class NotPerfectMatching(FormationError, ValueError):
    pass


class TooLarge(FormationError, ValueError):
    pass


# synthesis
class StructuralViolation(FormationError):
    pass


class PoleCountMismatch(FormationError, ValueError):
    pass


class ZeroFollowerPole(FormationError, ValueError):
    pass


class RowUnsolvable(FormationError):
    def __init__(self, message, agent=None):
        super().__init__(message)
        self.agent = agent


class PolicyMismatch(FormationError):
    pass


class PinnedInconsistent(FormationError):
    pass


class IncompleteGains(FormationError):
    pass


# protocol
class MissingOffset(FormationError):
    pass


class Unreachable(FormationError):
    def __init__(self, message, agents=()):
        super().__init__(message)
        self.agents = tuple(agents)


class InconsistentOffsets(FormationError):
    def __init__(self, message, agent=None, discrepancy=None):
        super().__init__(message)
        self.agent = agent
        self.discrepancy = discrepancy


# simulation
class UnstableStep(FormationError, ValueError):
    pass


class DimensionMismatch(FormationError, ValueError):
    pass


class SignalBelowFloor(FormationError):
    pass


# scenario files
class ScenarioError(FormationError, ValueError):
    pass
