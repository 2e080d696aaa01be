"""Design documents, spectrum/point CSV files, row tables and JSON reports.

Design document grammar (one statement per line)::

    # comment, also allowed after a value
    schema_version = 1
    period = 252            # any GratingDesign field
    bragg_wavelength = 640  # alternative to base_index
    defect_width = auto     # 1.5 periods
    [y]                     # optional polarization override section
    index_offset = 0.00208
    loss_multiplier = 1.25

Keys are case-sensitive and may appear once.  Unknown keys, unknown sections
and malformed lines are rejected with their line number.

Omitted keys take the calibrated defaults: ``index_contrast = 0.022`` and
``slat_loss = 3e-4`` (loss floor near 44 GHz for x, 53 GHz for y),
``base_index`` placing the band at 640 nm, 120 input and 420 output slats.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import fields
from pathlib import Path

import numpy as np

from .errors import (EmptyFile, InvalidDesign, InvalidInput, NonMonotonicGrid,
                     ParseError, UnknownKey, ValidationError)
from .grating import GratingDesign, Spectrum, calibrate_base_index

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SPECTRUM_HEADER = ("wavelength_nm", "reflectivity", "transmittance")
POINTS_HEADER = ("kappa_ghz", "r0", "weight")
OVER_RANGE_LIMIT = 1.05

_DESIGN_KEYS = {f.name for f in fields(GratingDesign)}
_INTEGER_KEYS = {"n_in_slats", "n_out_slats"}
_SECTION_KEYS = {"y": {"index_offset": "birefringent_split",
                       "loss_multiplier": "y_loss_multiplier"}}


def _parse_number(text, key, path, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"value for '{key}' is not a number: {text!r}",
                         path, line, key) from None
    if key in _INTEGER_KEYS:
        if not value.is_integer():
            raise ValidationError(f"'{key}' must be an integer, got {text}", path, line, key)
        return int(value)
    return value


def parse_design(text: str, path=None) -> GratingDesign:
    values: dict[str, float | None] = {}
    lines: dict[str, int] = {}
    section = None
    bragg = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError(f"malformed section header {stripped!r}", path, lineno)
            section = stripped[1:-1].strip().lower()
            if section not in _SECTION_KEYS:
                raise UnknownKey(f"unknown section [{section}]", path, lineno, section)
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", path, lineno)
        key, _, raw_value = (part.strip() for part in stripped.partition("="))
        if not key or not raw_value:
            raise ParseError(f"expected 'key = value', got {stripped!r}", path, lineno)

        if section is not None:
            if key not in _SECTION_KEYS[section]:
                raise UnknownKey(f"unknown key '{key}' in section [{section}]",
                                 path, lineno, key)
            target = _SECTION_KEYS[section][key]
        elif key == "schema_version":
            version = _parse_number(raw_value, key, path, lineno)
            if version != SCHEMA_VERSION:
                raise ValidationError(f"unsupported schema_version {raw_value}",
                                      path, lineno, key)
            continue
        elif key == "bragg_wavelength":
            target = key
        elif key in _DESIGN_KEYS:
            target = key
        else:
            raise UnknownKey(f"unknown key '{key}'", path, lineno, key)

        if target in lines:
            raise ParseError(f"'{key}' given twice (first on line {lines[target]})",
                             path, lineno, key)
        lines[target] = lineno
        if target == "defect_width" and raw_value.lower() in ("auto", "none"):
            values[target] = None
        elif target == "bragg_wavelength":
            bragg = _parse_number(raw_value, key, path, lineno)
        else:
            values[target] = _parse_number(raw_value, key, path, lineno)

    if bragg is not None:
        if "base_index" in values:
            raise ValidationError("give either base_index or bragg_wavelength, not both",
                                  path, lines["bragg_wavelength"], "bragg_wavelength")
        defaults = GratingDesign()
        try:
            values["base_index"] = calibrate_base_index(
                bragg, values.get("period", defaults.period),
                values.get("duty_cycle", defaults.duty_cycle),
                values.get("index_contrast", defaults.index_contrast))
        except InvalidInput as exc:
            raise ValidationError(str(exc), path, lines["bragg_wavelength"],
                                  "bragg_wavelength") from None
    try:
        return GratingDesign(**values)
    except InvalidDesign as exc:
        key = getattr(exc, "field", None)
        line = lines.get(key)
        if key == "base_index" and line is None:
            line = lines.get("bragg_wavelength")
        raise ValidationError(str(exc), path, line, key) from None


def load_design(path) -> GratingDesign:
    path = Path(path)
    return parse_design(path.read_text(encoding="utf-8"), path)


def format_design(design: GratingDesign) -> str:
    out = [f"schema_version = {SCHEMA_VERSION}"]
    for f in fields(GratingDesign):
        value = getattr(design, f.name)
        out.append(f"{f.name} = {'auto' if value is None else repr(value)}")
    return "\n".join(out) + "\n"


def save_design(design: GratingDesign, path) -> None:
    Path(path).write_text(format_design(design), encoding="utf-8")


def _read_rows(path, header, required):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        rows = [(n, row) for n, row in enumerate(csv.reader(handle), start=1)
                if row and not (len(row) == 1 and not row[0].strip())]
    if not rows:
        raise EmptyFile("file is empty", path)
    lineno, head = rows[0]
    head = [h.strip() for h in head]
    if not required <= len(head) <= len(header) or head != list(header[:len(head)]):
        raise ParseError(f"header must be {','.join(header[:required])} "
                         f"(optionally followed by {','.join(header[required:])}), "
                         f"got {','.join(head)}", path, lineno)
    body = rows[1:]
    if not body:
        raise EmptyFile("file has a header but no data rows", path)
    parsed = []
    for lineno, row in body:
        if len(row) != len(head):
            raise ParseError(f"expected {len(head)} columns, got {len(row)}", path, lineno)
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            raise ParseError(f"non-numeric value in {row!r}", path, lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError(f"non-finite value in {row!r}", path, lineno)
        parsed.append((lineno, values))
    return path, len(head), parsed


def load_spectrum(path, polarization: str | None = None) -> Spectrum:
    """Read a ``wavelength_nm,reflectivity[,transmittance]`` CSV file.

    Values up to 1.05 (detector over-range) are clipped to 1 and counted in
    ``spectrum.metadata["clipped"]``; anything outside [0, 1.05] is an error.
    """
    path, ncols, parsed = _read_rows(path, SPECTRUM_HEADER, 2)
    clipped = 0
    previous = None
    for lineno, values in parsed:
        if previous is not None and values[0] <= previous:
            raise NonMonotonicGrid(
                f"wavelength {values[0]!r} does not increase on the previous row",
                path, lineno)
        previous = values[0]
        for name, v in zip(SPECTRUM_HEADER[1:], values[1:]):
            if not 0.0 <= v <= OVER_RANGE_LIMIT:
                raise ValidationError(f"{name} {v!r} outside [0, {OVER_RANGE_LIMIT}]",
                                      path, lineno, name)
            clipped += v > 1.0
    data = np.array([values for _, values in parsed])
    if clipped:
        log.warning("%s: %d value(s) above 1 clipped", path, clipped)
    trans = np.clip(data[:, 2], 0.0, 1.0) if ncols == 3 else None
    try:
        return Spectrum(data[:, 0], np.clip(data[:, 1], 0.0, 1.0), trans, polarization,
                        metadata={"clipped": int(clipped), "source": str(path)})
    except InvalidInput as exc:
        raise ValidationError(str(exc), path) from None


def write_spectrum(spectrum: Spectrum, path) -> None:
    """Write a spectrum CSV with round-trip exact float formatting."""
    cols = [spectrum.wavelength, spectrum.reflectivity]
    header = list(SPECTRUM_HEADER[:2])
    if spectrum.transmittance is not None:
        cols.append(spectrum.transmittance)
        header.append(SPECTRUM_HEADER[2])
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([repr(float(v)) for v in row])


def load_points(path):
    """Read ``kappa_ghz,r0[,weight]`` rows; returns (points, weights or None)."""
    path, ncols, parsed = _read_rows(path, POINTS_HEADER, 2)
    points, weights = [], []
    for lineno, values in parsed:
        if values[0] <= 0:
            raise ValidationError(f"kappa_ghz must be > 0, got {values[0]!r}",
                                  path, lineno, "kappa_ghz")
        if not 0.0 <= values[1] <= 1.0:
            raise ValidationError(f"r0 must lie in [0, 1], got {values[1]!r}",
                                  path, lineno, "r0")
        if ncols == 3 and values[2] < 0:
            raise ValidationError("weight must be >= 0", path, lineno, "weight")
        points.append((values[0], values[1]))
        if ncols == 3:
            weights.append(values[2])
    return points, (weights if ncols == 3 else None)


def sig6(value):
    """Round to 6 significant digits for human-facing output."""
    if value is None or isinstance(value, (bool, int, str)):
        return value
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(f"{value:.6g}")


def quantity(value, unit):
    return {"value": sig6(value), "unit": unit}


ROW_COLUMNS = ("n_in", "n_out", "polarization", "tuning_position_um", "lambda0_nm",
               "delta_lambda_nm", "r0", "kappa_ghz", "q", "t0", "regime", "fit_converged")


def write_rows(rows, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ROW_COLUMNS)
        for r in rows:
            numbers = (r.tuning_position, r.lambda0, r.delta_lambda, r.r0, r.kappa, r.q, r.t0)
            writer.writerow([r.n_in, r.n_out, r.polarization]
                            + [_fmt6(v) for v in numbers]
                            + [r.regime.value if r.regime else "", str(r.fit_converged).lower()])


def _fmt6(value):
    return "nan" if not math.isfinite(value) else f"{value:.6g}"


def write_json(document, path) -> None:
    text = json.dumps(document, indent=2, sort_keys=False, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
