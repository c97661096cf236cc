"""Exception hierarchy shared by every module of the package."""


class MomarlError(Exception):
    """Base class for all errors raised by this package."""


# environment contract


class EnvContractError(MomarlError, ValueError):
    pass


class MissingAgentAction(EnvContractError):
    pass


class OutOfSpaceAction(EnvContractError):
    pass


class InvalidAction(OutOfSpaceAction):
    """An action that fits the declared space but is illegal in the current state."""


class SteppedTerminalEnv(EnvContractError, RuntimeError):
    pass


class ActionGivenForTerminatedAgent(EnvContractError):
    pass


class UnknownAgent(EnvContractError, KeyError):
    pass


# solution concepts and indicators


class LengthMismatch(MomarlError, ValueError):
    pass


class ShapeMismatch(LengthMismatch):
    pass


class DimensionMismatch(LengthMismatch):
    pass


class SizeMismatch(LengthMismatch):
    pass


class WeightLengthMismatch(LengthMismatch):
    pass


class InvalidJointAction(MomarlError, ValueError):
    pass


class UtilityCountMismatch(MomarlError, ValueError):
    pass


class EmptyReturns(MomarlError, ValueError):
    pass


class EmptyFront(MomarlError, ValueError):
    pass


class EmptyWeights(MomarlError, ValueError):
    pass


class IndexOutOfRange(MomarlError, IndexError):
    pass


# environments


class InvalidLimits(MomarlError, ValueError):
    pass


class IllegalMineChoice(InvalidAction):
    pass


class InvalidRoute(InvalidAction):
    pass


class OutOfBoxAction(OutOfSpaceAction):
    pass


class IllegalMove(InvalidAction):
    pass


class FullColumn(IllegalMove):
    pass


class GroupTooSmall(IllegalMove):
    pass


class GameOver(SteppedTerminalEnv):
    pass


# learners


class NonDiscreteObservation(MomarlError, TypeError):
    pass


class InvalidCounts(MomarlError, ValueError):
    pass


class NotTeamReward(MomarlError, ValueError):
    pass


class SpaceTooLarge(MomarlError, RuntimeError):
    pass


# cli / files


class ConfigInvalid(MomarlError, ValueError):
    pass


class FileInvalid(MomarlError, ValueError):
    pass
