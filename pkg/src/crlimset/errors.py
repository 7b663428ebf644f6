"""Exception hierarchy. Every failure a caller may want to branch on has its
own class; the CLI maps families of them to exit codes."""


class CRLimsetError(Exception):
    pass


class NonUnitDeterminant(CRLimsetError):
    pass


class NotLoxodromic(CRLimsetError):
    pass


class DegenerateEigenstructure(CRLimsetError):
    pass


class WrongSignature(CRLimsetError):
    pass


class FormMismatch(CRLimsetError):
    pass


class Degenerate(CRLimsetError):
    """Gram form with vanishing determinant."""


class OutOfRange(CRLimsetError):
    pass


class Unsupported(CRLimsetError):
    pass


class UnknownLetter(CRLimsetError, ValueError):
    pass


class WordSyntaxError(CRLimsetError, ValueError):
    pass


class BadSlope(CRLimsetError, ValueError):
    pass


class BuildFailure(CRLimsetError):
    pass


class MissingWitness(CRLimsetError):
    pass


class NoConvergence(CRLimsetError):
    pass


class PoleSingularity(CRLimsetError):
    pass


class FixtureError(CRLimsetError, ValueError):
    """Malformed presentation document."""
