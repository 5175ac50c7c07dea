"""File formats for runs: archive CSV, run JSON, magnitude trace, manifest.

Every writer goes through :func:`atomic_write_text`, so a failed command
never leaves a half-written file behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import problem

__all__ = [
    "atomic_write_text",
    "archive_columns",
    "archive_csv",
    "run_json",
    "trace_csv",
    "read_trace_csv",
    "read_front_csv",
]


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename."""
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


def archive_columns(spec: problem.NetworkSpec) -> list[str]:
    xs = [f"x_{k}" for k in range(spec.N * spec.T)]
    return ["solution_id", *xs, "G", "F1", "F2", "h1", "h2", "h3", "penalty"]


def archive_csv(spec: problem.NetworkSpec, archive) -> str:
    """Archive members as CSV text, sorted by solution id.

    ``x_k`` runs over the full throughput matrix in row-major (node, type)
    order, with inactive entries at their pinned value.  Floats are written
    with ``repr`` so equal runs give equal bytes.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(archive_columns(spec))
    members = sorted(archive, key=lambda s: s.id)
    if members:
        X = spec.expand(np.array([s.position for s in members]))
        obj, viol = problem.evaluate_batch(spec, X)
        for s, x, o, v in zip(members, X.reshape(len(members), -1), obj, viol):
            row = [s.id, *x.tolist(), -o[0], o[1], o[2], *v.tolist()]
            w.writerow([repr(float(c)) if not isinstance(c, int) else c for c in row])
    return buf.getvalue()


def run_json(report, spec_path=None) -> str:
    """Config echo, seed, per-generation best and hypervolume trajectories."""
    best = report.best
    data = {
        "seed": report.seed,
        "spec": str(spec_path) if spec_path is not None else None,
        "config": report.config.to_dict(),
        "generations": report.generations,
        "stop_reason": report.stop_reason,
        "archive_size": len(report.archive),
        "best_objective_per_generation": report.best_trajectory,
        "hypervolume_reference": list(report.hv_ref),
        "hypervolume_per_generation": report.hypervolume_trajectory,
        "locations_per_generation": report.locations_per_generation,
        "best": None if best is None else {
            "solution_id": best.id,
            "position": best.position.tolist(),
            "objectives": best.objectives.tolist(),
            "violations": best.violations.tolist(),
        },
        "diagnostics": report.diagnostics,
        "wall_time_s": report.wall_time,
    }
    return json.dumps(data, indent=1, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def trace_csv(magnitude_trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["generation", "magnitude"])
    for g, mags in enumerate(magnitude_trace, start=1):
        for m in mags:
            w.writerow([g, repr(float(m))])
    return buf.getvalue()


def read_trace_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: magnitude trace is empty")
    try:
        return np.array([float(r["magnitude"]) for r in rows])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed magnitude trace ({exc})") from None


def read_front_csv(path) -> np.ndarray:
    """Two-column CSV of objective pairs; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    pts = []
    for n, r in enumerate(rows, start=1):
        if len(r) != 2:
            raise ValueError(f"{path}: line {n}: expected 2 columns, got {len(r)}")
        try:
            pts.append([float(r[0]), float(r[1])])
        except ValueError:
            if n == 1:
                continue
            raise ValueError(f"{path}: line {n}: non-numeric value in {r}") from None
    if not pts:
        raise ValueError(f"{path}: no points")
    return np.array(pts)
