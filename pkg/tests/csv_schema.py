"""Strict schema checks for the CSV files written by the command line tool."""

import math
import re

INT = re.compile(r"-?\d+\Z")


def _float_cell(text, where):
    v = float(text)
    if not math.isfinite(v):
        raise AssertionError(f"{where}: non-finite value {text!r}")
    # 17 significant digits, shortest form that %.17g produces
    if text != f"{v:.17g}":
        raise AssertionError(f"{where}: {text!r} is not written with 17 significant digits")
    return v


def check_samples(path, sweep=False, integer=False):
    """Validate a samples CSV and return its configurations.

    Each row is ``sample_index[,sweep],points`` with consecutive indices from 0
    and space-separated ascending points.
    """
    lines = open(path).read().split("\n")
    if lines[-1] != "":
        raise AssertionError("file must end with a newline")
    lines = lines[:-1]
    header = "sample_index,sweep,points" if sweep else "sample_index,points"
    if lines[0] != header:
        raise AssertionError(f"header {lines[0]!r} != {header!r}")
    configs, last_sweep = [], None
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != header.count(",") + 1:
            raise AssertionError(f"row {i}: wrong column count")
        if cells[0] != str(i):
            raise AssertionError(f"row {i}: sample_index {cells[0]!r}")
        if sweep:
            if not INT.match(cells[1]):
                raise AssertionError(f"row {i}: sweep {cells[1]!r}")
            s = int(cells[1])
            if last_sweep is not None and s <= last_sweep:
                raise AssertionError(f"row {i}: sweeps must increase")
            last_sweep = s
        toks = cells[-1].split(" ") if cells[-1] else []
        if integer:
            if not all(INT.match(t) for t in toks):
                raise AssertionError(f"row {i}: non-integer point")
            pts = [int(t) for t in toks]
        else:
            pts = [_float_cell(t, f"row {i}") if not INT.match(t) else float(t) for t in toks]
        if any(b < a for a, b in zip(pts, pts[1:])):
            raise AssertionError(f"row {i}: points not ascending")
        configs.append(pts)
    return configs


def check_table(path, header):
    """Validate a numeric table with the given header; returns a list of column lists."""
    lines = open(path).read().split("\n")
    if lines[-1] != "":
        raise AssertionError("file must end with a newline")
    lines = lines[:-1]
    if lines[0].split(",") != list(header):
        raise AssertionError(f"header {lines[0]!r} != {header!r}")
    cols = [[] for _ in header]
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != len(header):
            raise AssertionError(f"row {i}: wrong column count")
        for k, (name, c) in enumerate(zip(header, cells)):
            if name == "count":
                if not INT.match(c) or int(c) < 0:
                    raise AssertionError(f"row {i}: count {c!r}")
                cols[k].append(int(c))
            else:
                cols[k].append(_float_cell(c, f"row {i} column {name}"))
    return cols
