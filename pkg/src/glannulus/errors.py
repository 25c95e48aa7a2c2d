"""Exception types shared across the package.

ValidationError signals bad parameters (CLI exit code 2), NumericalError a
failed numerical procedure on valid input (CLI exit code 1).
"""


class ValidationError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass
