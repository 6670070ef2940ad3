"""Result and trajectory serialization.

File formats (all floats are written in shortest round-trip form, so a
reread recovers bit-identical values):

* ``trajectory.jsonl`` -- one JSON object per entity per step, ordered
  by (step, entity id): step, id, kind, x, y, vx, vy, reward, collided.
  Step 0 holds the initial state with zero reward.
* ``episodes.jsonl`` -- one JSON object per episode record (see
  ``harness._record_from_metrics`` for the key set, plus sweep labels).
* ``sweep.csv`` -- one row per sweep cell; the first line is a
  ``# schema=...`` comment naming the versioned column set.
* ``manifest.json`` -- tool version, resolved config, seeds, timestamps
  and output paths; every output file is reproducible from it.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from orbitsim import __version__
from orbitsim._kernels import implementation_name
from orbitsim.harness import SweepResult

CSV_SCHEMA_PREFIX = "orbitsim.sweep"
CSV_SCHEMA_VERSION = 1


def write_jsonl(path: Union[str, Path], records: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_jsonl(path: Union[str, Path]) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


class JsonlWriter:
    """Streaming JSON-lines writer usable as a trajectory sink."""

    def __init__(self, path: Union[str, Path]):
        self._fh = open(path, "w")

    def __call__(self, record: dict) -> None:
        self._fh.write(json.dumps(record) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_sweep_csv(path: Union[str, Path], result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={CSV_SCHEMA_PREFIX}.{result.kind}.v{CSV_SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_csv_cell(row[col]) for col in result.columns])


def write_series_csv(
    path: Union[str, Path],
    xs: Sequence[float],
    ys: Sequence[Optional[float]],
    x_name: str,
    y_name: str,
) -> None:
    """Two-column plot series (x, y); null y values become empty cells."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={CSV_SCHEMA_PREFIX}.series.v{CSV_SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow([x_name, y_name])
        for x, y in zip(xs, ys):
            writer.writerow([_csv_cell(float(x)), _csv_cell(y)])


def build_manifest(
    command: str,
    config_dict: dict,
    seeds: Sequence[int],
    outputs: Sequence[str],
    started_utc: str,
    finished_utc: str,
) -> dict:
    return {
        "tool": "orbitsim",
        "version": __version__,
        "kernels": implementation_name(),
        "command": command,
        "config": config_dict,
        "seeds": list(seeds),
        "outputs": list(outputs),
        "started_utc": started_utc,
        "finished_utc": finished_utc,
    }


def write_manifest(path: Union[str, Path], manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
