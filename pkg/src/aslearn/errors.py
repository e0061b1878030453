"""Exception hierarchy shared by all modules."""


class ASLError(Exception):
    """Base class for library errors."""


class ValidationError(ASLError, ValueError):
    """Malformed model, matrix or configuration."""


class NumericalError(ASLError, ArithmeticError):
    """A numeric routine could not produce a trustworthy answer."""


# network
class TopologyInvalid(ValidationError):
    pass


class NotPrimitive(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class EigenvectorIncompatible(ValidationError):
    def __init__(self, message, agents=()):
        super().__init__(message)
        self.agents = tuple(int(k) for k in agents)


# models
class SupportViolation(ValidationError):
    pass


class ConfigurationError(ValidationError):
    pass


# lmgf / exponent
class Divergent(NumericalError):
    pass


class RootNotBracketed(NumericalError):
    pass


class NoNegativeRoot(NumericalError):
    pass


class IntegrationFailure(NumericalError):
    pass


class DegenerateVariance(NumericalError):
    pass


# design
class ConflictingAgentsPresent(ValidationError):
    pass


class NoConflictingAgents(ValidationError):
    pass


class Infeasible(NumericalError):
    pass


# simulate
class DomainError(ValidationError):
    pass


class NotReached(NumericalError):
    pass
