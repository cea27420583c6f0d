"""Exception hierarchy shared by the ring, code, meter and CLI layers."""

from __future__ import annotations


class CodeError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(CodeError, ValueError):
    pass


class ModulusMismatch(CodeError, ValueError):
    pass


class NotInvertible(CodeError, ArithmeticError):
    pass


class InvalidTransform(CodeError, ValueError):
    pass


class TooManyErasures(CodeError):
    pass


class DecodeFailed(CodeError):
    pass


class MissingHelper(CodeError):
    """A repair needed a column (or element) that is not available."""


class InvalidRepairSets(CodeError, ValueError):
    pass


class MalformedTrace(CodeError, ValueError):
    pass


class MalformedShard(CodeError, ValueError):
    """A shard file has a bad header or a payload of the wrong length."""
