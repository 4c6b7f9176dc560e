"""JSON and CSV formats for measures, IFS specs, grids, windows, frequency sets
and reports. Floats are written with ``repr`` precision, so round trips are exact."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fourier import FrequencySet
from .groups import GroupWindow
from .measures import GridDensity, IFSMap, IFSSpec, PointMassMeasure


def measure_to_dict(mu: PointMassMeasure) -> dict:
    return {"dim": mu.dim, "points": mu.points.tolist(), "weights": mu.weights.tolist()}


def measure_from_dict(d: dict) -> PointMassMeasure:
    pts = np.asarray(d["points"], dtype=float).reshape(-1, int(d["dim"]))
    return PointMassMeasure(pts, d["weights"])


def ifs_to_dict(spec: IFSSpec) -> dict:
    return {
        "dim": spec.dim,
        "maps": [{"ratio": m.ratio, "linear": m.linear.tolist(), "translation": m.translation.tolist()}
                 for m in spec.maps],
        "probabilities": list(spec.probabilities),
        "depth": spec.depth,
    }


def ifs_from_dict(d: dict) -> IFSSpec:
    maps = tuple(IFSMap(float(m["ratio"]), m["linear"], m["translation"]) for m in d["maps"])
    return IFSSpec(int(d["dim"]), maps, tuple(d["probabilities"]), int(d["depth"]))


def window_to_dict(w: GroupWindow, seed: int | None = None) -> dict:
    out = w.to_dict()
    out["seed"] = seed
    return out


def window_from_dict(d: dict) -> GroupWindow:
    return GroupWindow(d["kind"], int(d.get("dim", 2)), float(d.get("C", 2.0)),
                       d.get("chart", "KP"), int(d.get("blocks", 1)), int(d.get("block_dim", 2)))


def _listify(x):
    if isinstance(x, tuple):
        return [_listify(v) for v in x]
    return x


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def frequency_set_to_dict(fs: FrequencySet) -> dict:
    return {"dim": fs.dim, "scheme": fs.scheme, "seed": fs.seed, "radius": fs.radius,
            "recipe": _listify(fs.recipe)}


def frequency_set_from_dict(d: dict) -> FrequencySet:
    return FrequencySet.from_recipe(_tuplify(d["recipe"]))


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_grid(path, rho: GridDensity) -> None:
    """Flat CSV (``i0..i{d-1}, value``) plus a ``.json`` header sidecar."""
    path = Path(path)
    idx = np.argwhere(np.ones(rho.shape, bool))
    header = [f"i{k}" for k in range(rho.dim)] + ["value"]
    write_csv(path, header, ([*map(int, i), float(v)] for i, v in zip(idx, rho.values.reshape(-1))))
    write_json(path.with_suffix(".json"), {
        "dim": rho.dim, "origin": rho.origin.tolist(), "spacing": rho.spacing,
        "shape": list(rho.shape), "mass": rho.mass, "values_file": path.name,
    })


def read_grid(path) -> GridDensity:
    path = Path(path)
    meta = read_json(path.with_suffix(".json"))
    vals = np.zeros(meta["shape"])
    for row in read_csv(path):
        vals[tuple(int(row[f"i{k}"]) for k in range(meta["dim"]))] = float(row["value"])
    return GridDensity(meta["origin"], float(meta["spacing"]), vals)
