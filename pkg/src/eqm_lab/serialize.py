"""JSON/CSV conversions for states, tables and LP results."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .quasiprob import FeasibilityResult, MarginalSystem, QuasiProbTable
from .spin_lattice import (
    DirectionFrame,
    ExtendedSpinState,
    MarginalAmplitudeTable,
    ProbabilityTable,
    index_to_config,
)


def fmt(x) -> str:
    """17 significant digits; round-trips any double."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (int, float, np.number)) else v for v in row])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def frame_to_json(frame: DirectionFrame) -> list[list[float]]:
    return [list(d.vector) for d in frame.directions]


def state_to_json(state: ExtendedSpinState) -> dict:
    return {
        "frame": frame_to_json(state.frame),
        "amplitudes": state.amplitudes.tolist(),
    }


def state_from_json(data: dict) -> ExtendedSpinState:
    return ExtendedSpinState(DirectionFrame(data["frame"]), np.array(data["amplitudes"]))


def marginal_to_json(table: MarginalAmplitudeTable,
                     probs: ProbabilityTable | None = None) -> dict:
    k = len(table.subset)
    entries = []
    for t in range(1 << k):
        entry = {"config": list(index_to_config(t, k)),
                 "amplitude": table.amplitudes[t].tolist()}
        if probs is not None:
            entry["probability"] = float(probs.probabilities[t])
        entries.append(entry)
    return {"subset": list(table.subset), "entries": entries}


def marginal_from_json(data: dict) -> MarginalAmplitudeTable:
    amps = np.array([e["amplitude"] for e in data["entries"]], dtype=np.float64)
    return MarginalAmplitudeTable(tuple(data["subset"]), amps)


def quasiprob_to_json(table: QuasiProbTable) -> dict:
    return {"shape": list(table.shape), "values": table.values.tolist(),
            "imag_residue": table.imag_residue}


def quasiprob_from_json(data: dict) -> QuasiProbTable:
    values = np.array(data["values"], dtype=np.float64).reshape(data["shape"])
    return QuasiProbTable(values, float(data.get("imag_residue", 0.0)))


def system_to_json(system: MarginalSystem) -> dict:
    return {
        "arities": list(system.arities),
        "marginals": [{"variables": list(v), "table": t.tolist()} for v, t in system.marginals],
    }


def system_from_json(data: dict) -> MarginalSystem:
    return MarginalSystem(data["arities"],
                          [(m["variables"], np.array(m["table"], dtype=np.float64))
                           for m in data["marginals"]])


def feasibility_to_json(result: FeasibilityResult, system: MarginalSystem) -> dict:
    out = {"feasible": result.feasible,
           "phase1_objective": result.phase1_objective,
           "iterations": result.iterations}
    if result.feasible:
        out["witness"] = result.witness.tolist()
    else:
        out["certificate"] = result.certificate.tolist()
        out["certificate_valid"] = result.certificate_valid(system)
    return out
