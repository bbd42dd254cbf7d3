"""Shared input handling for the plotting scripts.

Readers are strict about required columns (missing ones exit nonzero) and
read-only over their inputs; optional overlays that fail to load degrade to
the raw plot.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np


class InputError(Exception):
    pass


def load_csv(path: str, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file not found: {path}")
    with open(p) as fh:
        header = fh.readline().strip().split(",")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise InputError(f"{path}: malformed numeric data ({exc})")
    if data.size == 0:
        raise InputError(f"{path}: no data rows")
    missing = [c for c in required if c not in header]
    if missing:
        raise InputError(f"{path}: missing columns {missing}; has {header}")
    return {name: data[:, j] for j, name in enumerate(header)}


def load_json_optional(path: str) -> dict | None:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return None


def run_main(main) -> None:
    try:
        main(sys.argv[1:])
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        raise SystemExit(1)
    raise SystemExit(0)
