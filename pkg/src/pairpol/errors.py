"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input: malformed files, broken invariants, bad arguments."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to converge or produced an unusable fit."""
