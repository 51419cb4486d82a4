"""Error hierarchy shared by the services, the repository layer and the CLI"""


class ReconError(Exception):
    """
    Base error of the toolkit. Carries a machine token ``code`` and a human ``detail``,
    the same pair the command line prints as a single line.
    """
    code = "error"
    exit_code = 1

    def __init__(self, detail: str, code: str | None = None):
        super().__init__(detail)
        self.detail = detail
        if code is not None:
            self.code = code


class InvalidParameterError(ReconError, ValueError):
    code = "validation"
    exit_code = 2


class DomainError(InvalidParameterError):
    code = "domain"


class ShapeMismatchError(InvalidParameterError):
    code = "shape"


class CalibrationError(ReconError):
    code = "calibration"
    exit_code = 3

    def __init__(self, detail: str, achievable: tuple[float, float]):
        super().__init__(f"{detail}; achievable R range [{achievable[0]:.3g}, {achievable[1]:.3g}]")
        self.achievable = achievable


class ContainerError(ReconError):
    code = "container"
    exit_code = 4


class ContainerMagicError(ContainerError):
    code = "container_magic"


class ContainerVersionError(ContainerError):
    code = "container_version"


class ContainerTruncatedError(ContainerError):
    code = "container_truncated"


class ContainerDtypeError(ContainerError):
    code = "container_dtype"


class ContainerChecksumError(ContainerError):
    code = "container_crc"


class DivergenceError(ReconError):
    code = "divergence"
    exit_code = 5

    def __init__(self, detail: str, epoch: int, last_finite_loss: float | None):
        super().__init__(f"{detail} (epoch={epoch}, last_finite_loss={last_finite_loss})")
        self.epoch = epoch
        self.last_finite_loss = last_finite_loss


class SliceFailureError(ReconError):
    code = "slice_failure"
    exit_code = 5

    def __init__(self, failures: dict[int, str]):
        listed = "; ".join(f"slice {index}: {reason}" for index, reason in sorted(failures.items()))
        super().__init__(listed)
        self.failures = failures


class ActivationCacheError(ReconError):
    code = "activation_cache"


class DegenerateNormalizationError(ReconError):
    code = "degenerate_normalization"
    exit_code = 6


class WindowTooLargeError(ReconError):
    code = "window_too_large"
    exit_code = 6
