"""CSV tables and JSON run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import platform
from importlib import metadata
from pathlib import Path
from typing import Iterable, List, Optional

import jsonschema

from .config import load_schema
from .experiments import ExperimentResult

SIG_DIGITS = 9


def format_value(value) -> str:
    """Cell text: 9 significant digits for reals, blank for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        if value == 0.0:
            return "0"  # folds -0.0 as well
        return format(value, f".{SIG_DIGITS}g")
    return str(value)


def render_csv(columns: List[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("numpy", "scipy", "scikit-learn", "jsonschema", "PyYAML", "clarabel"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            pass
    return out


def _package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def build_manifest(result: ExperimentResult, cfg: dict, csv_name: str, csv_text: str,
                   started: _dt.datetime, exit_code: int) -> dict:
    manifest = {
        "schema_version": 1,
        "experiment": result.experiment,
        "package": {"name": "witnesskit", "version": _package_version()},
        "versions": _versions(),
        "config": cfg,
        "seed": cfg["seed"],
        "output": {
            "csv": csv_name,
            "columns": list(result.columns),
            "rows": len(result.rows),
            "sha256": hashlib.sha256(csv_text.encode("utf-8")).hexdigest(),
        },
        "failed_ids": list(result.failed_ids),
        "exit_code": exit_code,
        "wall_time_s": float(result.timings.get("total", 0.0)),
        "started_utc": started.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "timings": {k: float(v) for k, v in result.timings.items()},
    }
    if result.summary is not None:
        manifest["summary"] = result.summary
    return manifest


def validate_manifest(manifest: dict) -> None:
    jsonschema.validate(manifest, load_schema("manifest.schema.json"),
                        cls=jsonschema.Draft202012Validator)


def write_outputs(result: ExperimentResult, cfg: dict, out_dir, started: Optional[_dt.datetime] = None,
                  exit_code: int = 0):
    """Write ``<experiment>.csv`` and ``<experiment>.manifest.json``; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = started or _dt.datetime.now(_dt.timezone.utc)
    csv_name = f"{result.experiment}.csv"
    csv_text = render_csv(result.columns, result.rows)
    manifest = build_manifest(result, cfg, csv_name, csv_text, started, exit_code)
    validate_manifest(manifest)
    csv_path = out_dir / csv_name
    man_path = out_dir / f"{result.experiment}.manifest.json"
    # newline="" keeps the CRLF record separators exactly as rendered
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, man_path
