"""Deterministic text output: 17-significant-digit floats, key=value blocks, CSV."""

from __future__ import annotations

from typing import Iterable


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_key_value(path, pairs: Iterable[tuple[str, object]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for k, v in pairs:
            f.write(f"{k}={fmt(v)}\n")


def key_value_lines(pairs: Iterable[tuple[str, object]]) -> str:
    return "".join(f"{k}={fmt(v)}\n" for k, v in pairs)


def write_csv(path, header: str, columns) -> None:
    """Write comma-separated columns under a one-line header (no trailing space)."""
    import numpy as np

    cols = [np.asarray(c) for c in columns]
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for row in zip(*cols):
            f.write(",".join(fmt(v if not isinstance(v, np.floating) else float(v)) for v in row))
            f.write("\n")
