"""Exception hierarchy shared across the library and the CLI.

The CLI maps these onto exit codes: schema problems exit 2, contract and
domain violations exit 3, numeric non-convergence exits 4.
"""


class LvarError(Exception):
    """Base class; carries a machine-readable ``reason`` string."""

    exit_code = 1

    def __init__(self, reason: str, **details):
        super().__init__(reason)
        self.reason = reason
        self.details = details


class SchemaError(LvarError):
    """Scenario file is malformed or fails referential integrity."""

    exit_code = 2


class StructuralError(LvarError):
    """Objects from different spaces (or otherwise incompatible) were mixed."""

    exit_code = 3


class DomainError(LvarError):
    """An argument is outside the operation's domain."""

    exit_code = 3


class ContractError(LvarError):
    """A precondition or an internal cross-check failed."""

    exit_code = 3


class NumericError(LvarError):
    """An iterative routine failed to converge; details carry the residual."""

    exit_code = 4
