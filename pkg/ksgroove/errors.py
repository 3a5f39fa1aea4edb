from enum import IntEnum
from typing import List, Optional


class ExitStatus(IntEnum):
    OK = 0
    CHECKS_FAILED = 1
    CONFIG_ERROR = 2
    IO_ERROR = 3
    USAGE_ERROR = 64
    INTERNAL_ERROR = 70


class KSGrooveError(Exception):
    """
    Base class for every error raised by ksgroove.
    """


class InvalidSpecError(KSGrooveError):
    pass


class InadmissibleDomainError(InvalidSpecError):
    """
    The groove is too wide for the decay theorem to apply.
    """

    def __init__(self, width_B: float):
        self.width_B = width_B
        self.condition = 'B < pi'
        super().__init__(
            f'Groove width B={width_B!r} violates the admissibility condition {self.condition}'
        )


class InvalidArgumentError(KSGrooveError):
    pass


class InvalidInitialDataError(KSGrooveError):
    pass


class NonFiniteFieldError(KSGrooveError):
    pass


class SolverFailureError(KSGrooveError):
    """
    The implicit solve did not reach its tolerance.
    """

    def __init__(self, iterations: int, residual_history: List[float]):
        self.iterations = iterations
        self.residual_history = list(residual_history)
        final = residual_history[-1] if residual_history else float('nan')
        super().__init__(
            f'Implicit solve did not converge in {iterations} iterations (relative residual {final:.3e})'
        )

    @property
    def residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float('nan')


class BlowupError(KSGrooveError):
    """
    The state stopped being representable. This is a physics outcome, not a crash.
    """

    def __init__(self, step_index: int, time: float, reason: str):
        self.step_index = step_index
        self.time = time
        self.reason = reason
        super().__init__(f'Blowup ({reason}) at step {step_index}, t={time:.6g}')


class FitDomainError(KSGrooveError):
    pass


class InsufficientDataError(KSGrooveError):
    pass


class UndefinedRatioError(KSGrooveError):
    pass


class ConfigError(KSGrooveError):
    """
    Carries every violated invariant found while validating a configuration.
    """

    def __init__(self, problems: List[str], source: Optional[str] = None):
        self.problems = list(problems)
        self.source = source
        where = f' in {source}' if source else ''
        super().__init__(
            f'{len(self.problems)} configuration problem(s){where}: ' + '; '.join(self.problems)
        )


class ConfigMismatchError(ConfigError):
    pass


class CorruptCheckpointError(KSGrooveError):
    pass


class UsageError(KSGrooveError):
    pass
