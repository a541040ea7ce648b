"""
Исключения pushadapt.

Все доменные ошибки наследуются от PushAdaptError: management-команды
переводят их в CommandError (ненулевой код выхода), всё остальное —
ошибки программирования и не перехватываются.
"""


class PushAdaptError(Exception):
    """Базовая ошибка pushadapt."""


class PhysicsDomainError(PushAdaptError, ValueError):
    """Параметр трения h вне области определения (h <= 0)."""


class DegenerateDataError(PushAdaptError):
    """Нулевая дисперсия переменной: нормализация невозможна."""

    def __init__(self, variable: str, message: str = ""):
        self.variable = variable
        super().__init__(message or f"variable {variable!r} has zero variance; dataset is degenerate")


class TrajectoryFormatError(PushAdaptError):
    """Ошибка разбора файла траекторий (с номером строки)."""

    def __init__(self, path, line: int | None, message: str):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")


class TrajectoryTooShortError(PushAdaptError):
    """Траектория короче горизонта прогноза."""


class SplitError(PushAdaptError):
    """Слишком мало траекторий для разбиения train/validation."""


class OptimizerShapeError(PushAdaptError, ValueError):
    """Формы параметров, градиентов и аккумуляторов не совпадают."""


class SceneConfigError(PushAdaptError, ValueError):
    """Некорректная конфигурация сцены или сценария толчка."""


class NonFiniteLossError(PushAdaptError, ArithmeticError):
    """Потеря или градиент стали NaN/Inf; прогон прерывается."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")


class CheckpointError(PushAdaptError):
    """Базовая ошибка чекпойнта."""


class CheckpointCorruptError(CheckpointError):
    """Файл чекпойнта повреждён или обрезан."""


class CheckpointVersionError(CheckpointError):
    """Версия формата чекпойнта не поддерживается."""

    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"checkpoint version {found!r} is not supported (expected {expected!r})")


class CheckpointShapeError(CheckpointError):
    """Форма массива в чекпойнте не совпадает с архитектурой."""


class ConfigError(PushAdaptError):
    """Ошибка конфигурации запуска (файл, флаги, окружение)."""


class ReportFormatError(PushAdaptError):
    """Ошибка разбора CSV с потерями (с номером строки)."""

    def __init__(self, path, line: int | None, message: str):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")
