"""JSON-lines trajectory files, one state per line.

Floats go through ``repr`` (Python's json default), which round-trips every
float64 exactly.
"""

import contextlib
import json
import sys

import numpy as np

from .exceptions import InputError


def _lines(traj):
    extrapolated = getattr(traj, "extrapolated", False)
    residual = getattr(traj, "residual", None)
    for n in range(len(traj)):
        rec = {
            "n": n,
            "t": float(traj.t[n]),
            "x": [float(c) for c in traj.x[n]],
            "v": [[float(c) for c in vec] for vec in traj.v[n]],
            "l": None if traj.l is None else float(traj.l[n]),
            "residual": None if residual is None else float(residual[n]),
        }
        if extrapolated:
            rec["extrapolated"] = True
        yield json.dumps(rec, allow_nan=False)


@contextlib.contextmanager
def _open_out(dest):
    if dest is None or dest == "-":
        yield sys.stdout
    elif hasattr(dest, "write"):
        yield dest
    else:
        with open(dest, "w") as fh:
            yield fh


def write_trajectory_jsonl(traj, dest):
    """Write ``traj`` (plain or extrapolated) to a path, a file object, or stdout."""
    with _open_out(dest) as fh:
        for line in _lines(traj):
            fh.write(line)
            fh.write("\n")


def read_trajectory_jsonl(source):
    """Read a JSON-lines trajectory into a dict of numpy arrays.

    Keys: ``n, t, x, v, l, residual, extrapolated``. ``l`` and ``residual``
    are ``None`` when absent from the file.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not records:
        raise InputError("empty trajectory file")
    ns = [r["n"] for r in records]
    if ns != list(range(len(records))):
        raise InputError("trajectory file is not a contiguous run of states starting at n=0")

    def column(key):
        vals = [r.get(key) for r in records]
        if any(v is None for v in vals):
            return None
        return np.array(vals, dtype=float)

    return {
        "n": np.array(ns),
        "t": column("t"),
        "x": column("x"),
        "v": column("v"),
        "l": column("l"),
        "residual": column("residual"),
        "extrapolated": bool(records[0].get("extrapolated", False)),
    }
