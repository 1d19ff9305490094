"""Exception hierarchy shared by all dagform modules."""


class FormationError(Exception):
    """Base class for every error raised by dagform."""


class CycleDetected(FormationError, ValueError):
    pass


class CollocatedNodes(FormationError, ValueError):
    pass


class NonPositiveScale(FormationError, ValueError):
    pass


class TooFewLeaders(FormationError, ValueError):
    pass


class DegenerateLeaders(FormationError, ValueError):
    pass


class ZeroParameters(FormationError, ValueError):
    pass


class CollocatedTriple(FormationError, ValueError):
    pass


class CollocatedNeighbors(CollocatedTriple):
    pass


class TopologyMismatch(FormationError, ValueError):
    pass


class SingularDiagonalBlock(FormationError, ArithmeticError):
    def __init__(self, follower: int):
        super().__init__(f"diagonal block of follower {follower} is singular")
        self.follower = follower


class SingularFollowerBlock(FormationError, ArithmeticError):
    pass


class DimensionMismatch(FormationError, ValueError):
    pass


class UncertifiedFormation(FormationError):
    def __init__(self, message: str, certification=None):
        super().__init__(message)
        self.certification = certification


class NonPositiveStep(FormationError, ValueError):
    pass


class ScenarioParseError(FormationError, ValueError):
    pass


class ScenarioValidationError(FormationError, ValueError):
    """Scenario violates a structural assumption; carries the report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
