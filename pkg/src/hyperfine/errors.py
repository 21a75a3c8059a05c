"""Exception hierarchy shared by all modules."""


class HyperfineError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(HyperfineError, ValueError):
    pass


class NonInvertibleConstantTerm(HyperfineError, ArithmeticError):
    pass


class DegreeExhausted(HyperfineError, ValueError):
    """A differential operator needs more Taylor degree than the jet carries."""


class SeedNotHolomorphic(HyperfineError, ValueError):
    pass


class OnRealAxis(HyperfineError, ValueError):
    """Derivatives were requested where the (u, v) chart is singular."""


class EvenDimension(HyperfineError, ValueError):
    """The Fueter-Sce power is fractional for even n and is not supported."""


class UnknownChain(HyperfineError, KeyError):
    pass


class OnSpectrumSphere(HyperfineError, ValueError):
    pass


class UnknownClosedForm(HyperfineError, KeyError):
    pass


class NonCommuting(HyperfineError, ValueError):
    pass


class JointDiagonalizationFailed(HyperfineError, ArithmeticError):
    pass


class SingularAtS(HyperfineError, ArithmeticError):
    pass


class ContourTouchesSpectrum(HyperfineError, ValueError):
    pass


class NotSliceHyperholomorphic(HyperfineError, ValueError):
    pass


class ConfigInvalid(HyperfineError, ValueError):
    """Configuration failed validation; ``errors`` maps field names to messages."""

    def __init__(self, errors):
        self.errors = dict(errors)
        lines = [f"{k}: {v}" for k, v in sorted(self.errors.items())]
        super().__init__("invalid config:\n  " + "\n  ".join(lines))
