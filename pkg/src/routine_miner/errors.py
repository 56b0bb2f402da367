"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class RoutineMinerError(Exception):
    """Base class; the CLI maps any subclass to a nonzero exit status."""


class MalformedRecord(RoutineMinerError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class EmptyInput(RoutineMinerError):
    pass


class MixedUsers(RoutineMinerError):
    pass


class NoNodes(RoutineMinerError):
    pass


class TooFewNodes(RoutineMinerError):
    pass


class NoSeed(RoutineMinerError):
    pass


class EmptySet(RoutineMinerError):
    pass


class TraceTooShort(RoutineMinerError):
    pass


class SingleCluster(RoutineMinerError):
    pass


class NoPatterns(RoutineMinerError):
    pass


class UnknownLabel(RoutineMinerError):
    pass


class InvalidSpec(RoutineMinerError):
    pass


class ConfigError(RoutineMinerError):
    pass
