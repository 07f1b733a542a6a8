"""Error taxonomy shared by the library and the CLI exit-code mapping."""


class NormalityLabError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(NormalityLabError):
    """Malformed or out-of-range input (bad index, dimension mismatch, ...)."""

    exit_code = 1


class CapabilityError(NormalityLabError):
    """Request is well-formed but refused (search space too large)."""

    exit_code = 2


class InvariantViolation(NormalityLabError):
    """An internally certified claim failed; carries a witness when possible.

    Reserved for empirical counterexamples to claims the library is built to
    check, never for plain bugs in argument handling.
    """

    exit_code = 3

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness
