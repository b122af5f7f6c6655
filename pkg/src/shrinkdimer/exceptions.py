"""Exception hierarchy shared by every module."""


class SaddleError(Exception):
    """Base class for all errors raised by shrinkdimer."""


class InputError(SaddleError, ValueError):
    """Invalid arguments: wrong dimensions, bad indices, misaligned grids."""


class ProblemLookupError(SaddleError, KeyError):
    """Unknown problem name."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DegenerateFrameError(SaddleError):
    """Gram-Schmidt met a (numerically) linearly dependent direction."""

    def __init__(self, message, index=None, step=None):
        super().__init__(message)
        self.index = index
        self.step = step

    def __str__(self):
        msg = self.args[0]
        if self.step is not None:
            msg = f"step {self.step}: {msg}"
        return msg


class DivergenceError(SaddleError):
    """The trajectory left the bounded regime (overflow guard tripped)."""

    def __init__(self, message, step=None, tau=None):
        super().__init__(message)
        self.step = step
        self.tau = tau

    def __str__(self):
        msg = self.args[0]
        if self.step is not None:
            msg = f"step {self.step}: {msg}"
        if self.tau is not None:
            msg = f"tau={self.tau!r}: {msg}"
        return msg
