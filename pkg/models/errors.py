from typing import List, Optional


class OppFLError(Exception):
    """Base class for every error raised by the simulator."""


class DimensionError(OppFLError, ValueError):
    """Vector lengths, label spaces or architectures do not line up."""


class ParameterError(OppFLError, ValueError):
    """A scalar parameter is outside its allowed range."""


class EmptyDataError(OppFLError, ValueError):
    """An operation needs at least one sample."""


class SerializationError(OppFLError, ValueError):
    """A ParameterVector blob is malformed."""


class IdxFormatError(OppFLError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CapacityError(OppFLError, ValueError):
    def __init__(self, label: int, requested: int, available: int):
        super().__init__(
            f"Label {label} exhausted: requested {requested}, {available} available"
        )
        self.label = label
        self.requested = requested
        self.available = available
        self.owner: Optional[int] = None
        self.encounter_index: Optional[int] = None

    def at_encounter(self, index: int) -> "CapacityError":
        self.encounter_index = index
        self.args = (f"Encounter {index}: {self.args[0]}",)
        return self


class ConfigError(OppFLError, ValueError):
    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        errors: Optional[List[str]] = None,
    ):
        location = ""
        if field:
            location += f" [{field}]"
        if line:
            location += f" (line {line})"
        super().__init__(f"{message}{location}")
        self.field = field
        self.line = line
        self.errors = errors or [message]
