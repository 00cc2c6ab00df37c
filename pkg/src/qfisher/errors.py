"""Exception hierarchy and the CLI exit codes each failure maps to."""


class QFisherError(Exception):
    """Base class for all errors raised by qfisher."""

    exit_code = 1


class InvalidDimensionError(QFisherError, ValueError):
    exit_code = 3


class LengthMismatchError(QFisherError, ValueError):
    exit_code = 3


class InvalidStateError(QFisherError, ValueError):
    exit_code = 3


class InvalidChannelError(QFisherError, ValueError):
    exit_code = 3


class InvalidProbabilityError(QFisherError, ValueError):
    exit_code = 3


class InputError(QFisherError, ValueError):
    """A JSON input file failed to parse; ``path`` locates the bad element."""

    exit_code = 3

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SingularChannelError(QFisherError):
    """The affine matrix A of the channel is not invertible within tolerance."""

    exit_code = 4

    def __init__(self, min_singular_value, tol):
        self.min_singular_value = float(min_singular_value)
        self.tol = float(tol)
        super().__init__(
            f"channel is not injective: smallest singular value of A is "
            f"{self.min_singular_value:.3e} <= tolerance {self.tol:.1e}"
        )


class DegenerateObservableError(QFisherError):
    """Observable proportional to the identity: no direction carries information."""

    exit_code = 5


class BoundaryStateError(QFisherError):
    """The measured state is rank deficient, so the SLD inverse is undefined."""

    exit_code = 5


class UnsupportedBaselineError(QFisherError):
    exit_code = 3


class AccuracyError(QFisherError):
    """A numerical cross-check or tolerance was not met."""

    exit_code = 6


class QuadratureError(AccuracyError):
    """Numerical integration missed its tolerance; ``estimate`` is the best value reached."""

    exit_code = 6

    def __init__(self, estimate, error, rel_tol):
        self.estimate = float(estimate)
        self.error = float(error)
        super().__init__(
            f"quadrature did not converge: estimate {estimate:.6e}, "
            f"error bound {error:.2e} exceeds rel_tol {rel_tol:.1e}"
        )


class IllConditionedChannelWarning(UserWarning):
    pass
