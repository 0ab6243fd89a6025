"""Sampled spectra and their CSV + JSON-sidecar serialisation.

A spectrum file is a two-column CSV with header ``detuning_ueV,value``.
Metadata (kind, drive direction, power, configuration digest) lives in a
sidecar ``<name>.json`` next to the CSV.
"""
from __future__ import annotations

import csv
import enum
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = ("detuning_ueV", "value")
MIN_POINTS = 5


class SpectrumKind(enum.Enum):
    Transmission = "T"
    Reflection = "R"
    DeltaT = "dT"
    DeltaR = "dR"
    PL = "PL"


class SpectrumFormatError(ValueError):
    """Malformed spectrum file. ``row`` is the 1-based line number, if known."""

    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    detunings: np.ndarray
    values: np.ndarray
    kind: SpectrumKind = SpectrumKind.Transmission
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.array(self.detunings, dtype=float)
        v = np.array(self.values, dtype=float)
        if d.ndim != 1 or v.shape != d.shape:
            raise ValueError(f"detunings and values must be 1-D of equal length, got {d.shape} and {v.shape}")
        if np.any(np.diff(d) <= 0):
            raise ValueError("detunings must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum values must be finite")
        d.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "values", v)
        if not isinstance(self.kind, SpectrumKind):
            object.__setattr__(self, "kind", SpectrumKind(self.kind))

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (self.kind is other.kind and np.array_equal(self.detunings, other.detunings)
                and np.array_equal(self.values, other.values) and self.metadata == other.metadata)

    def with_values(self, values, kind=None, **metadata) -> "Spectrum":
        return Spectrum(self.detunings, values, kind or self.kind, {**self.metadata, **metadata})

    def window(self, lo, hi) -> "Spectrum":
        mask = (self.detunings >= lo) & (self.detunings <= hi)
        return Spectrum(self.detunings[mask], self.values[mask], self.kind, dict(self.metadata))

    def check_aligned(self, other: "Spectrum"):
        if not np.array_equal(self.detunings, other.detunings):
            raise ValueError("spectra are sampled on different detuning grids")


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_number(x) -> str:
    return f"{float(x):.17g}"


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_csv(spectrum: Spectrum, path) -> Path:
    """Write ``spectrum`` as CSV plus JSON sidecar. Returns the CSV path."""
    lines = [",".join(CSV_HEADER)]
    lines += [f"{format_number(d)},{format_number(v)}" for d, v in zip(spectrum.detunings, spectrum.values)]
    atomic_write_text(path, "\n".join(lines) + "\n")
    meta = {"kind": spectrum.kind.value, **spectrum.metadata}
    atomic_write_text(sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return Path(path)


def ingest_csv(path) -> Spectrum:
    """Read and validate a spectrum CSV.

    Raises
    ------
    SpectrumFormatError
        On a bad header, malformed or non-finite rows, a grid that is not
        strictly increasing, or fewer than ``MIN_POINTS`` rows.
    """
    path = Path(path)
    detunings, values = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise SpectrumFormatError(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}", row=1)
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise SpectrumFormatError(f"expected 2 columns, got {len(row)}", row=row_no)
            try:
                d, v = float(row[0]), float(row[1])
            except ValueError:
                raise SpectrumFormatError(f"non-numeric entry {row!r}", row=row_no) from None
            if not (math.isfinite(d) and math.isfinite(v)):
                raise SpectrumFormatError(f"non-finite entry {row!r}", row=row_no)
            if detunings and d <= detunings[-1]:
                raise SpectrumFormatError(
                    f"detuning {d!r} does not increase (previous {detunings[-1]!r})", row=row_no)
            detunings.append(d)
            values.append(v)
    if len(values) < MIN_POINTS:
        raise SpectrumFormatError(f"{len(values)} data rows; at least {MIN_POINTS} required")

    meta = {}
    kind = SpectrumKind.Transmission
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        kind = SpectrumKind(meta.pop("kind", kind.value))
    return Spectrum(np.array(detunings), np.array(values), kind, meta)
