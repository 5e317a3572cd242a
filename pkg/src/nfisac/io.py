"""File formats for solutions, grids and run summaries.

Solution container (JSON, ``format = "nfisac-solution"``, ``version = 1``)::

    {
      "format": "nfisac-solution", "version": 1,
      "scheme": str, "mu": float, "units": {...},
      "beamformers": {"real": [[...]], "imag": [[...]]},      # K x N
      "R_s": {"real": ..., "imag": ...}, "R_x": {...},        # N x N
      "relaxed": {"F": {...}, "R_s": {...}, "status": str, "duality_gap": float} | null,
      "report": {family: {...}} | null,
      "meta": {...}
    }

Complex matrices are stored as dense ``real``/``imag`` pairs. Grids are
written as CSV with unit-bearing headers (``y_m,z_m,value_dB``) or as JSON
with axis metadata.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .capon import SpatialGrid
from .optimizer import BeamformingSolution, RelaxedSolution

SOLUTION_FORMAT = "nfisac-solution"
SOLUTION_VERSION = 1
GRID_FORMAT = "nfisac-grid"
GRID_VERSION = 1


def _cplx(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"real": a.real.tolist(), "imag": a.imag.tolist()}


def _uncplx(d) -> np.ndarray:
    return np.asarray(d["real"], dtype=float) + 1j * np.asarray(d["imag"], dtype=float)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else (None if np.isnan(f) else ("inf" if f > 0 else "-inf"))
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(data), indent=2) + "\n")
    return path


def solution_to_dict(solution: BeamformingSolution, report=None, meta: dict | None = None) -> dict:
    rel = solution.relaxed
    return {
        "format": SOLUTION_FORMAT,
        "version": SOLUTION_VERSION,
        "scheme": solution.scheme,
        "mu": solution.mu,
        "units": {"beamformers": "sqrt(W)", "R_s": "W", "R_x": "W", "mu": "W (weighted gain)"},
        "beamformers": _cplx(solution.beamformers),
        "R_s": _cplx(solution.R_s),
        "R_x": _cplx(solution.R_x),
        "relaxed": None if rel is None else {
            "F": _cplx(rel.F), "R_s": _cplx(rel.R_s), "status": rel.status,
            "duality_gap": rel.duality_gap, "solve_time_s": rel.solve_time,
        },
        "report": None if report is None else report.to_dict(),
        "meta": meta or {},
    }


def save_solution(path, solution: BeamformingSolution, report=None, meta: dict | None = None) -> Path:
    return write_json(path, solution_to_dict(solution, report, meta))


def load_solution(path) -> BeamformingSolution:
    data = json.loads(Path(path).read_text())
    if data.get("format") != SOLUTION_FORMAT:
        raise ValueError(f"{path}: not a solution container")
    if data.get("version") != SOLUTION_VERSION:
        raise ValueError(f"{path}: unsupported solution version {data.get('version')}")
    beams = _uncplx(data["beamformers"])
    R_x = _uncplx(data["R_x"])
    beams = beams.reshape(-1, R_x.shape[0])
    relaxed = None
    if data.get("relaxed"):
        r = data["relaxed"]
        F = _uncplx(r["F"]).reshape(-1, *R_x.shape)
        R_s_rel = _uncplx(r["R_s"])
        relaxed = RelaxedSolution(F=F, R_s=R_s_rel, R_x=R_x, mu=float(data["mu"]),
                                  status=r.get("status", "unknown"),
                                  duality_gap=r.get("duality_gap") or float("nan"))
    return BeamformingSolution(beamformers=beams, R_s=_uncplx(data["R_s"]), R_x=R_x,
                               mu=float(data["mu"]), scheme=data.get("scheme", "unknown"),
                               relaxed=relaxed)


def _value_column(grid: SpatialGrid) -> str:
    return f"value_{grid.unit}"


def write_grid_csv(path, grid: SpatialGrid) -> Path:
    """Rows ``y_m, z_m, value_<unit>`` in ``values.ravel()`` order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pts = grid.points()
    vals = np.asarray(grid.values, dtype=float).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y_m", "z_m", _value_column(grid)])
        for p, v in zip(pts, vals):
            w.writerow([f"{p[1]:.6f}", f"{p[2]:.6f}", repr(float(v))])
    return path


def read_grid_csv(path, x: float = 0.0) -> SpatialGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    if head[:2] != ["y_m", "z_m"] or not head[2].startswith("value_"):
        raise ValueError(f"{path}: unexpected header {head}")
    arr = np.array(body, dtype=float)
    y = np.unique(arr[:, 0])
    z = np.unique(arr[:, 1])
    return SpatialGrid(y, z, x, arr[:, 2].reshape(y.size, z.size), head[2][len("value_"):])


def write_grid_json(path, grid: SpatialGrid) -> Path:
    return write_json(path, {
        "format": GRID_FORMAT, "version": GRID_VERSION,
        "axes": {"y_m": grid.y, "z_m": grid.z, "x_m": grid.x},
        "unit": grid.unit, "meta": grid.meta, "values": grid.values,
    })
