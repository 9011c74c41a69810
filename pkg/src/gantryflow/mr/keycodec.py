"""Canonical byte serialization for shuffle keys.

Equal keys encode to equal bytes and decode back to equal keys, across
processes and runs.  Supported out of the box: None, bool, int, float, str,
bytes, date, datetime (naive) and arbitrarily nested tuples.  Domain key
types register a tag plus to/from tuple projections.
"""
from __future__ import annotations

import struct
from datetime import date, datetime
from typing import Any, Callable

_U32 = struct.Struct(">I")
_F64 = struct.Struct(">d")
_DATE = struct.Struct(">HBB")
_DATETIME = struct.Struct(">HBBBBBI")

_registry_by_tag: dict[int, tuple[type, Callable, Callable]] = {}
_registry_by_type: dict[type, tuple[int, Callable]] = {}

_RESERVED_TAGS = set(b"NTFisbfdt(")


class KeyCodecError(TypeError):
    pass


def register_key_type(
    tag: bytes,
    cls: type,
    to_tuple: Callable[[Any], tuple],
    from_tuple: Callable[[tuple], Any],
) -> None:
    """Register a custom key type; `tag` is one byte, unique per type."""
    if len(tag) != 1:
        raise ValueError("tag must be a single byte")
    tag_i = tag[0]
    if tag_i in _RESERVED_TAGS:
        raise ValueError(f"tag {tag!r} is reserved")
    existing = _registry_by_tag.get(tag_i)
    if existing is not None and existing[0] is not cls:
        raise ValueError(f"tag {tag!r} already registered for {existing[0]!r}")
    _registry_by_tag[tag_i] = (cls, to_tuple, from_tuple)
    _registry_by_type[cls] = (tag_i, to_tuple)


def _encode_into(value: Any, out: bytearray) -> None:
    kind = type(value)
    if kind is bool:
        out += b"T" if value else b"F"
    elif kind is int:
        length = (value.bit_length() + 8) // 8  # minimal signed width
        out += b"i"
        out += _U32.pack(length)
        out += value.to_bytes(length, "big", signed=True)
    elif kind is str:
        raw = value.encode("utf-8")
        out += b"s"
        out += _U32.pack(len(raw))
        out += raw
    elif kind is bytes:
        out += b"b"
        out += _U32.pack(len(value))
        out += value
    elif kind is float:
        if value != value:
            raise KeyCodecError("NaN is not a valid key component")
        if value == 0.0:
            value = 0.0  # collapse -0.0 so equal floats share bytes
        out += b"f"
        out += _F64.pack(value)
    elif kind is datetime:
        if value.tzinfo is not None:
            raise KeyCodecError("aware datetimes are not valid key components")
        out += b"t"
        out += _DATETIME.pack(
            value.year, value.month, value.day,
            value.hour, value.minute, value.second, value.microsecond,
        )
    elif kind is date:
        out += b"d"
        out += _DATE.pack(value.year, value.month, value.day)
    elif kind is tuple:
        out += b"("
        out += _U32.pack(len(value))
        for item in value:
            _encode_into(item, out)
    elif value is None:
        out += b"N"
    else:
        reg = _registry_by_type.get(kind)
        if reg is None:
            raise KeyCodecError(f"unsupported key component type {kind!r}")
        tag_i, to_tuple = reg
        out.append(tag_i)
        _encode_into(to_tuple(value), out)


def encode_key(key: Any) -> bytes:
    buf = bytearray()
    _encode_into(key, buf)
    return bytes(buf)


def _decode_at(data: bytes, pos: int) -> tuple[Any, int]:
    tag = data[pos]
    pos += 1
    if tag == 0x4E:  # N
        return None, pos
    if tag == 0x54:  # T
        return True, pos
    if tag == 0x46:  # F
        return False, pos
    if tag == 0x69:  # i
        (length,) = _U32.unpack_from(data, pos)
        pos += 4
        return int.from_bytes(data[pos : pos + length], "big", signed=True), pos + length
    if tag == 0x73:  # s
        (length,) = _U32.unpack_from(data, pos)
        pos += 4
        return data[pos : pos + length].decode("utf-8"), pos + length
    if tag == 0x62:  # b
        (length,) = _U32.unpack_from(data, pos)
        pos += 4
        return data[pos : pos + length], pos + length
    if tag == 0x66:  # f
        (value,) = _F64.unpack_from(data, pos)
        return value, pos + 8
    if tag == 0x74:  # t
        y, mo, d, h, mi, s, us = _DATETIME.unpack_from(data, pos)
        return datetime(y, mo, d, h, mi, s, us), pos + _DATETIME.size
    if tag == 0x64:  # d
        y, mo, d = _DATE.unpack_from(data, pos)
        return date(y, mo, d), pos + _DATE.size
    if tag == 0x28:  # (
        (count,) = _U32.unpack_from(data, pos)
        pos += 4
        items = []
        for _ in range(count):
            item, pos = _decode_at(data, pos)
            items.append(item)
        return tuple(items), pos
    reg = _registry_by_tag.get(tag)
    if reg is None:
        raise KeyCodecError(f"unknown key tag {tag:#x}")
    cls, _to, from_tuple = reg
    payload, pos = _decode_at(data, pos)
    return from_tuple(payload), pos


def decode_key(data: bytes) -> Any:
    value, pos = _decode_at(data, 0)
    if pos != len(data):
        raise KeyCodecError(f"trailing bytes after key ({len(data) - pos})")
    return value
