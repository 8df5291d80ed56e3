"""Runtime values carried by serialized object fields.

Integers are 64-bit signed; reals are IEEE doubles; references name another
record in the owning object graph by id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class IntVal:
    value: int

    def __post_init__(self) -> None:
        if not (INT64_MIN <= self.value <= INT64_MAX):
            raise ValueError(f"integer out of 64-bit range: {self.value}")


@dataclass(frozen=True)
class RealVal:
    value: float


@dataclass(frozen=True)
class BoolVal:
    value: bool


@dataclass(frozen=True)
class StringVal:
    value: str


@dataclass(frozen=True)
class VoidVal:
    pass


@dataclass(frozen=True)
class RefVal:
    object_id: int

    def __post_init__(self) -> None:
        if self.object_id < 0:
            raise ValueError(f"object id must be nonnegative: {self.object_id}")


ObjectValue = Union[IntVal, RealVal, BoolVal, StringVal, VoidVal, RefVal]

VOID = VoidVal()
