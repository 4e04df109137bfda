"""Spectrum and result tables as CSV, energies in meV on disk."""
from __future__ import annotations

import csv
import math

import numpy as np

from qdcavity.errors import DataError, SchemaError
from qdcavity.io.config import MEV
from qdcavity.reflectivity import Spectrum

REQUIRED_COLUMNS = ("energy_meV", "signal")
METADATA_COLUMNS = ("temperature_K", "polarization", "bias_V")
_NUMERIC_METADATA = ("temperature_K", "bias_V")


def format_number(x):
    """Text for one CSV cell; floats get 17 significant digits, enough to round-trip."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def load_spectrum_csv(path):
    """Read a spectrum with columns ``energy_meV`` and ``signal``.

    Optional columns ``temperature_K``, ``polarization`` and ``bias_V`` go
    into ``meta``: a single value if constant over the file, otherwise a
    per-row list in energy order.  Other columns are ignored and listed in
    ``meta["ignored_columns"]``.  Rows are sorted by energy and the grid is
    returned in μeV.

    Raises
    ------
    SchemaError
        No header, or a required column missing (named in the message).
    DataError
        Unparseable or non-finite numbers, no data rows, or duplicate
        energies (file line numbers in the message).
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in header]
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        index = {name: header.index(name) for name in header}
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {line_no} has {len(row)} fields, header has {len(header)}")
            rows.append((line_no, row))
    if not rows:
        raise DataError(f"{path}: no data rows")

    def number(line_no, row, col):
        text = row[index[col]].strip()
        try:
            value = float(text)
        except ValueError:
            raise DataError(f"{path}: line {line_no}: column {col!r} is not a number: {text!r}") from None
        if not math.isfinite(value):
            raise DataError(f"{path}: line {line_no}: column {col!r} is not finite")
        return value

    energy = np.array([number(n, r, "energy_meV") for n, r in rows])
    signal = np.array([number(n, r, "signal") for n, r in rows])
    lines = np.array([n for n, _ in rows])
    order = np.argsort(energy, kind="stable")
    energy, signal, lines = energy[order], signal[order], lines[order]
    dup = np.nonzero(np.diff(energy) == 0)[0]
    if dup.size:
        groups = {}
        for k in dup:
            groups.setdefault(float(energy[k]), set()).update((int(lines[k]), int(lines[k + 1])))
        detail = "; ".join(f"{e:g} meV at lines {sorted(v)}" for e, v in groups.items())
        raise DataError(f"{path}: duplicate energies: {detail}")

    meta = {"source": str(path)}
    for col in METADATA_COLUMNS:
        if col not in index:
            continue
        if col in _NUMERIC_METADATA:
            vals = [number(n, r, col) for n, r in rows]
        else:
            vals = [r[index[col]].strip() for _, r in rows]
        vals = [vals[k] for k in order]
        meta[col] = vals[0] if all(v == vals[0] for v in vals) else vals
    ignored = [h for h in header if h not in REQUIRED_COLUMNS + METADATA_COLUMNS]
    if ignored:
        meta["ignored_columns"] = ignored
    return Spectrum(energy * MEV, signal, meta)


def write_spectrum_csv(path, spectrum):
    """Write ``energy_meV, signal`` plus any scalar metadata columns."""
    extra = [c for c in METADATA_COLUMNS
             if c in spectrum.meta and not isinstance(spectrum.meta[c], (list, tuple))]
    columns = ["energy_meV", "signal"] + extra
    rows = [[e / MEV, s] + [spectrum.meta[c] for c in extra]
            for e, s in zip(spectrum.grid, spectrum.values)]
    write_table(path, columns, rows)


def write_table(path, columns, rows):
    """Long-format CSV with full-precision numbers and ``\\n`` line endings."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
