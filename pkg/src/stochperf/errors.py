"""Exception hierarchy.

Input problems derive from ``InputError`` (CLI exit code 2); numerical
failures derive from ``NumericalError`` (CLI exit code 3).
"""

from __future__ import annotations


class StochPerfError(Exception):
    """Base class for every error raised by this package."""


class InputError(StochPerfError, ValueError):
    """Invalid input data or arguments."""


class NumericalError(StochPerfError, ArithmeticError):
    """A numerical procedure could not produce a result."""


# trace parsing

class EmptyFile(InputError):
    pass


class MalformedRow(InputError):
    def __init__(self, line: int, reason: str = "malformed row"):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class NonPositiveTime(InputError):
    def __init__(self, line: int, value: float | None = None):
        self.line = line
        super().__init__(f"line {line}: execution time must be positive and finite (got {value!r})")


class DuplicateRunIndex(InputError):
    def __init__(self, key: tuple, index: int):
        self.key = key
        self.index = index
        super().__init__(f"duplicate run_index {index} for {'/'.join(key)}")


# sample-level problems

class SampleTooSmall(InputError):
    pass


class SampleTooLarge(InputError):
    pass


class DegenerateSample(InputError):
    pass


class NonPositiveValue(InputError):
    pass


class OutOfDomain(InputError):
    pass


class DegenerateRange(InputError):
    pass


class FitDiverged(NumericalError):
    pass


# ETC / scheduling

class MissingCell(InputError):
    def __init__(self, app: str, machine: str):
        self.app = app
        self.machine = machine
        super().__init__(f"no fit for app {app!r} on machine {machine!r}")


class NonPositiveMean(InputError):
    pass


class UnknownApp(InputError):
    pass


class NoEdgeMachines(InputError):
    pass


class NoCloudMachines(InputError):
    pass
