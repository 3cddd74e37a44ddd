# utils/errors.py
# Exception types raised by the pipeline stages and the file layer


class HyperPcaError(Exception):
    """Base class for every domain error the CLI reports as a one-line diagnostic."""


class CubeFormatError(HyperPcaError):
    """Raised when a cube header or data file does not match the documented layout."""


class CubeIOError(HyperPcaError):
    """Raised when reading or writing a file fails; message always names the path."""


class SymmetryError(HyperPcaError):
    """Raised when an input matrix is not symmetric."""

    def __init__(self, i, j, gap):
        self.i = i
        self.j = j
        self.gap = gap
        super().__init__(
            f"matrix is not symmetric: worst pair ({i}, {j}) differs by {gap:.6g}"
        )


class NonConvergenceError(HyperPcaError):
    """Raised when Jacobi sweeps hit the cap before the stop factor is reached."""

    def __init__(self, residual, sweeps, threshold):
        self.residual = residual
        self.sweeps = sweeps
        self.threshold = threshold
        super().__init__(
            f"Jacobi did not converge after {sweeps} sweeps: "
            f"residual off-diagonal norm {residual:.6g} (threshold {threshold:.3g})"
        )


class StageError(HyperPcaError):
    """Wraps a failure inside a timed pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {cause}")
