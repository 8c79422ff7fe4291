class BeamformingError(Exception):
    """Базовая ошибка пакета relay_secrecy."""


class NotPositiveDefinite(BeamformingError):
    """Матрица не является положительно определённой (ведущий элемент Холецкого слишком мал)."""

    def __init__(self, message: str, pivot_index: int = -1):
        super().__init__(message)
        self.pivot_index = pivot_index


class NoConvergence(BeamformingError):
    pass


class EmptyInterval(BeamformingError):
    """Оракул бисекции недопустим уже на нижней границе интервала."""

    def __init__(self, lower: float, upper: float):
        super().__init__(f"Пустой интервал бисекции: оракул недопустим в lower={lower} (upper={upper})")
        self.lower = lower
        self.upper = upper


class NumericalFailure(BeamformingError):
    """Конический решатель не достиг требуемой точности."""

    def __init__(self, message: str, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class ZeroMatrix(BeamformingError):
    pass


class DomainError(BeamformingError, ValueError):
    pass


class ConfigError(BeamformingError, ValueError):
    pass
