class RmpcError(Exception):
    """Base class of every error raised by this package."""


class ContractViolation(RmpcError, ValueError):
    """Caller passed arguments that break an operation's precondition."""


class NumericDomainError(RmpcError, ArithmeticError):
    def __init__(self, quantity: str, message: str = ""):
        self.quantity = quantity
        super().__init__(f"non-finite or out-of-domain <{quantity}> {message}".strip())


class DivergedRolloutError(RmpcError):
    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(f"rollout left the validity envelope at step {step} {message}".strip())


class NonFiniteGradientError(RmpcError, ArithmeticError):
    def __init__(self, accumulator: str):
        self.accumulator = accumulator
        super().__init__(f"non-finite gradient in <{accumulator}>")


class BatchFailureError(RmpcError):
    def __init__(self, excluded: int, total: int):
        self.excluded = excluded
        self.total = total
        super().__init__(f"{excluded}/{total} instances diverged, batch rejected")


class TrainingAbortedError(RmpcError):
    pass


class GridBudgetError(RmpcError):
    pass


class ConfigError(RmpcError):
    pass


class ArchitectureMismatchError(RmpcError):
    pass


class CheckpointFormatError(RmpcError):
    pass


class ReportRefusedError(RmpcError):
    pass
