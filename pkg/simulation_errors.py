"""
Исключения симулятора cvchipsim
"""
from typing import List, Optional


class SimulationError(Exception):
    """Базовая ошибка симуляции"""


class InvalidArgumentError(SimulationError, ValueError):
    """Недопустимый аргумент операции"""


class UnphysicalStateError(SimulationError, ValueError):
    """Состояние нарушает соотношение неопределенностей"""


class AboveThresholdError(SimulationError, ValueError):
    """OPO накачан на пороге генерации или выше"""


class ParameterPathError(SimulationError, ValueError):
    """Неизвестный или нечисловой путь параметра (sweep / --set)"""


class NetlistError(SimulationError, ValueError):
    """Ошибка описания схемы с привязкой к строке"""

    def __init__(self, message: str, line_no: Optional[int] = None,
                 column: Optional[int] = None, line_text: Optional[str] = None):
        self.message = message
        self.line_no = line_no
        self.column = column
        self.line_text = line_text
        super().__init__(self.__str__())

    def __str__(self):
        if self.line_no is None:
            return self.message
        location = f"line {self.line_no}"
        if self.column is not None:
            location += f", col {self.column}"
        text = f"{location}: {self.message}"
        if self.line_text is not None:
            text += f" | {self.line_text.strip()}"
        return text


class NetlistSyntaxError(NetlistError):
    """Синтаксическая ошибка, неизвестное ключевое слово, ключ или единица измерения"""


class DuplicateNameError(NetlistError):
    pass


class DuplicateWireError(NetlistError):
    """Один и тот же выход подключен дважды"""


class UnknownReferenceError(NetlistError):
    pass


class UnwiredInputError(NetlistError):
    pass


class CycleError(NetlistError):
    """Граф портов содержит цикл"""

    def __init__(self, message: str, cycle: List[str], **kwargs):
        self.cycle = list(cycle)
        super().__init__(message, **kwargs)


class SweepCancelledError(SimulationError):
    """Свип отменен до завершения"""


class ConfigFileError(SimulationError, ValueError):
    """Файл параметров запуска не читается или содержит неизвестные ключи"""


class RunConfigError(SimulationError, ValueError):
    """Несогласованная конфигурация запуска (ошибка использования CLI)"""
