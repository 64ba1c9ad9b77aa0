"""CSV schemas published by the rainbowbf CLI, with validation on load."""

from __future__ import annotations

import csv
from pathlib import Path

SCHEMAS = {
    "throughput_vs_K.csv": [
        "scheme",
        "allocator",
        "power_rule",
        "users",
        "bandwidth_hz",
        "rep",
        "throughput_bps",
        "approx_throughput_bps",
    ],
    "throughput_vs_bandwidth.csv": [
        "scheme",
        "allocator",
        "power_rule",
        "users",
        "bandwidth_hz",
        "rep",
        "throughput_bps",
        "approx_throughput_bps",
    ],
    "active_ratio.csv": [
        "scheme",
        "allocator",
        "power_rule",
        "users",
        "bandwidth_hz",
        "rep",
        "slot",
        "active_user_ratio",
        "footprint_user_fraction",
    ],
    "beam_metrics.csv": [
        "variant",
        "mapping",
        "subcarrier",
        "frequency_hz",
        "desired_u",
        "desired_v",
        "measured_u",
        "measured_v",
        "matching_error",
        "gain_at_desired",
        "peak_gain",
    ],
    "footprints.csv": ["scheme", "subcarrier", "frequency_hz", "ground_x_km", "ground_y_km"],
    "runtime.csv": [
        "impl",
        "subcarriers",
        "n_rx",
        "grid_points",
        "iterations",
        "runs",
        "mean_seconds",
        "std_seconds",
    ],
}

_TEXT_COLUMNS = {"scheme", "allocator", "power_rule", "variant", "mapping", "impl"}


class SchemaError(ValueError):
    """A CSV does not match its published schema."""


def load_rows(path: Path | str, schema_name: str) -> list[dict]:
    """Read and validate one CSV; numeric columns are converted to float."""
    path = Path(path)
    expected = SCHEMAS[schema_name]
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in expected if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        extra = [c for c in header if c not in expected]
        if extra:
            raise SchemaError(f"{path}: unexpected column(s) {', '.join(extra)}")
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                if key in _TEXT_COLUMNS:
                    row[key] = value
                else:
                    try:
                        row[key] = float(value)
                    except (TypeError, ValueError):
                        raise SchemaError(f"{path}: non-numeric value {value!r} in column {key}")
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows
