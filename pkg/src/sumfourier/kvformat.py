"""Flat ``key = value`` text documents used for ensembles and experiment configs."""

from __future__ import annotations

__all__ = ["dumps_kv", "loads_kv"]


def dumps_kv(pairs: dict[str, str]) -> str:
    lines = [f"{key} = {value}" for key, value in pairs.items()]
    return "\n".join(lines) + "\n"


def loads_kv(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in pairs:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs
