"""Error types shared across the package.

Every error carries a short ``code`` so the command-line front end can print a
machine-parseable failure line.
"""


class EcoltcError(Exception):
    code = "EcoltcError"


class NonFiniteState(EcoltcError, FloatingPointError):
    code = "NonFiniteState"


class NonFiniteLoss(EcoltcError, FloatingPointError):
    code = "NonFiniteLoss"


class DegenerateChannel(EcoltcError, ValueError):
    code = "DegenerateChannel"


class TooFewSegments(EcoltcError, ValueError):
    code = "TooFewSegments"


class SearchExhausted(EcoltcError, RuntimeError):
    code = "SearchExhausted"


class NegativeMass(EcoltcError, ValueError):
    code = "NegativeMass"


class EmptySeries(EcoltcError, ValueError):
    code = "EmptySeries"


class UntrainedController(EcoltcError, RuntimeError):
    code = "UntrainedController"


class UntrainedModels(EcoltcError, RuntimeError):
    code = "UntrainedModels"


class HorizonMismatch(EcoltcError, ValueError):
    code = "HorizonMismatch"


class MissingDataset(EcoltcError, FileNotFoundError):
    code = "MissingDataset"


class SchemaMismatch(EcoltcError, ValueError):
    code = "SchemaMismatch"


class IoError(EcoltcError, OSError):
    code = "IoError"
