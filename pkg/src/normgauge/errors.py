"""Exception types raised across the toolkit."""


class NormGaugeError(ValueError):
    """Base class for every error the toolkit raises on bad input."""


class DimensionMismatch(NormGaugeError):
    pass


class NonFiniteInput(NormGaugeError):
    pass


class InvalidNorm(NormGaugeError):
    """A norm descriptor that cannot be built, or that fails the norm axioms."""


class NotSerializable(NormGaugeError):
    pass


class KTooSmall(NormGaugeError):
    pass


class KTooLarge(NormGaugeError):
    pass


class NegativeBaseNonIntegerExponent(NormGaugeError):
    """A signed sum of norms is negative and the exponent is not an even integer."""


class ZeroVector(NormGaugeError):
    pass


class NotQuadraticNorm(NormGaugeError):
    pass


class NonRealizableConfig(NormGaugeError):
    """An angle configuration produces a negative squared length."""


class DegenerateExponent(NormGaugeError):
    """A zero base would be raised to a negative power."""


class NotSquare(NormGaugeError):
    pass


class EigensolverFailure(NormGaugeError):
    pass


class InadmissibleSample(NormGaugeError):
    pass


class BudgetExceeded(NormGaugeError):
    pass
