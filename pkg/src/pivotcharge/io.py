"""Artifact files. Every write goes to a temp file in the target directory
and is renamed into place, so a reader never sees a partial file.

Floats are written with ``repr`` (shortest round-trip form), which keeps
output byte-identical across runs and platforms.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from .model import Scenario

ACTIONS = {0: "stay", 1: "move", 2: "end"}

SERIES_HEADER = ("run_id", "t_s", "n_at_target", "n_overcharged", "stage")
TRAJECTORY_HEADER = ("t_s", "x_m", "y_m", "bearing_rad", "action")
HEADS_HEADER = ("head_id", "e_before_j", "e_after_j")


def write_atomic(path, text: str) -> Path:
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
    return path


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def save_scenario(path, scenario: Scenario) -> Path:
    return write_atomic(path, dumps_json(scenario.to_dict()))


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def series_csv(results) -> str:
    rows = []
    for r in results:
        for t, n_at, n_over, stage in r.series:
            rows.append((r.run_id, repr(float(t)), int(n_at), int(n_over), int(stage)))
    return _csv(SERIES_HEADER, rows)


def trajectory_csv(result) -> str:
    rows = [(repr(float(t)), repr(float(x)), repr(float(y)), repr(float(b)), ACTIONS[int(k)])
            for t, x, y, b, k in result.trajectory]
    return _csv(TRAJECTORY_HEADER, rows)


def heads_csv(result) -> str:
    return _csv(HEADS_HEADER, [(h, repr(b), repr(a)) for h, b, a in result.head_profile])


def write_run_artifacts(result, out_dir) -> list:
    """series.csv, trajectory.csv, heads.csv and summary.json for one run."""
    out = Path(out_dir)
    return [
        write_atomic(out / "series.csv", series_csv([result])),
        write_atomic(out / "trajectory.csv", trajectory_csv(result)),
        write_atomic(out / "heads.csv", heads_csv(result)),
        write_atomic(out / "summary.json", dumps_json(result.summary())),
    ]


def summary_table_csv(rows, fields) -> str:
    return _csv(fields, [[repr(r[f]) if isinstance(r[f], float) else r[f] for f in fields]
                         for r in rows])


def write_summary_table(rows, out_dir, fields) -> list:
    out = Path(out_dir)
    return [
        write_atomic(out / "summary.csv", summary_table_csv(rows, fields)),
        write_atomic(out / "summary.json", dumps_json({"fields": list(fields), "rows": rows})),
    ]
