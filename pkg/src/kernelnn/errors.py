"""Exception hierarchy shared by all kernelnn modules."""


class KernelNNError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(KernelNNError):
    """Operand shapes are incompatible. Messages name both shapes."""


class ContractError(KernelNNError):
    """A documented precondition was violated (e.g. non-scalar backward root)."""


class ConfigError(KernelNNError):
    """A model or training configuration is internally inconsistent."""


class GuardError(KernelNNError):
    """An enumeration/capacity guard refused the request (oracles are exhaustive)."""


class DataError(KernelNNError):
    """An input file failed to parse or violated the documented format."""


class EvaluationError(KernelNNError):
    """A numeric evaluation produced a non-finite value."""


class UnsupportedActivationError(KernelNNError):
    """The requested activation has no exact kernel-side counterpart."""
