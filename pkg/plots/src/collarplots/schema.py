"""Readers for the sweep/curve CSV and summary JSON exports.

The laboratory package documents its file schemas; this module consumes
them verbatim and never recomputes a measured quantity.  Column checks
happen here so every renderer fails the same way: a SchemaMismatch that
spells out what was needed against what the file actually has.
"""

import csv
import json
from pathlib import Path

import numpy as np

# canonical column order of the per-rung sweep export
SWEEP_COLUMNS = (
    "ell",
    "height",
    "tension_l2",
    "tension_scaled",
    "curve_half_length",
    "curve_tension_l1",
    "curve_tension_l2",
    "geodesic_deviation",
    "case",
    "decay_tension",
    "decay_curve_energy",
    "decay_angular",
    "decay_mixed",
    "margin_energy_4",
    "margin_energy_8",
    "margin_energy_16",
    "margin_osc_4",
    "margin_osc_8",
    "margin_osc_16",
)

# curve exports carry one point per row plus the comparison geodesic
CURVE_COLUMNS = ("t", "p0", "p1", "p2", "tau_norm", "g0", "g1", "g2", "gap")


class SchemaMismatch(Exception):
    """A file is missing columns (or keys) a plot job referenced."""

    def __init__(self, path, missing, found):
        self.path = str(path)
        self.missing = tuple(sorted(missing))
        self.found = tuple(found)
        super().__init__(
            f"{self.path}: missing columns {list(self.missing)}; "
            f"file has {list(self.found)}"
        )


def read_table(path) -> dict:
    """Load a CSV into {column: array}, floats where the column parses."""
    path = Path(path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise SchemaMismatch(path, ["<header>"], [])
    header, body = rows[0], rows[1:]
    table = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in body]
        try:
            table[name] = np.array([float(c) for c in cells], dtype=float)
        except ValueError:
            table[name] = np.array(cells, dtype=object)
    return table


def require_columns(table: dict, needed, path) -> None:
    missing = [name for name in needed if name not in table]
    if missing:
        raise SchemaMismatch(path, missing, list(table))


def read_summary(path) -> dict:
    """Load a sweep summary JSON; insist on the keys plots consume."""
    path = Path(path)
    with path.open() as handle:
        payload = json.load(handle)
    missing = [key for key in ("classification", "fits") if key not in payload]
    if missing:
        raise SchemaMismatch(path, missing, sorted(payload))
    return payload
