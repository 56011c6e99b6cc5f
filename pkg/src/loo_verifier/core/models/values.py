"""Runtime values: opaque addresses, null and scalar primitives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TypeAlias


@dataclass(frozen=True, slots=True, order=True)
class Address:
    """Opaque object reference. Only equality is observable."""

    id: int

    def __str__(self) -> str:
        return f"o{self.id}"


@dataclass(frozen=True, slots=True)
class NullValue:
    def __str__(self) -> str:
        return "null"


@dataclass(frozen=True, slots=True)
class IntVal:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, slots=True)
class BoolVal:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True, slots=True)
class StrVal:
    value: str

    def __str__(self) -> str:
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


Value: TypeAlias = Address | NullValue | IntVal | BoolVal | StrVal

NULL = NullValue()
TRUE = BoolVal(True)
FALSE = BoolVal(False)

# Declared types that are not class names
INT_TYPE = "int"
NAT_TYPE = "nat"
BOOL_TYPE = "bool"
STR_TYPE = "str"
EXTERNAL_TYPE = "external"
OBJECT_CLASS = "Object"

SCALAR_TYPES = frozenset({INT_TYPE, NAT_TYPE, BOOL_TYPE, STR_TYPE})


def is_scalar(value: Value) -> bool:
    return isinstance(value, IntVal | BoolVal | StrVal)


def is_scalar_type(type_name: str) -> bool:
    return type_name in SCALAR_TYPES


def default_value(type_name: str) -> Value:
    """Initial value of a field or local of the given declared type."""
    if type_name in (INT_TYPE, NAT_TYPE):
        return IntVal(0)
    if type_name == BOOL_TYPE:
        return FALSE
    if type_name == STR_TYPE:
        return StrVal("")
    return NULL


def value_has_scalar_type(value: Value, type_name: str) -> bool:
    """Whether a value inhabits a scalar type (nat means a non-negative int)."""
    if type_name == INT_TYPE:
        return isinstance(value, IntVal)
    if type_name == NAT_TYPE:
        return isinstance(value, IntVal) and value.value >= 0
    if type_name == BOOL_TYPE:
        return isinstance(value, BoolVal)
    if type_name == STR_TYPE:
        return isinstance(value, StrVal)
    return False
