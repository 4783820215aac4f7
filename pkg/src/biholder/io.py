"""CSV readers/writers for point clouds, maps and functions, plus JSON reports."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .besov import SampledFunction
from .errors import ConfigError, MissingPointError
from .mapping import SampledMap, map_from_pairs
from .space import SampledSpace, from_matrix

SCHEMA_VERSION = 1


def _parse_id(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def read_points_csv(path, metric_path=None, name: str = "") -> SampledSpace:
    """Header ``id,x1,...,xd,weight``; an optional dense metric CSV follows the id order."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "id" or rows[0][-1] != "weight":
        raise ConfigError(f"{path}: expected header id,x1,...,xd,weight")
    body = [r for r in rows[1:] if r]
    ids = tuple(_parse_id(r[0]) for r in body)
    coords = np.array([[float(x) for x in r[1:-1]] for r in body])
    weights = np.array([float(r[-1]) for r in body])
    if metric_path is not None:
        matrix = np.loadtxt(metric_path, delimiter=",", ndmin=2)
        return from_matrix(matrix, weights, ids=ids, name=name or Path(path).stem)
    return SampledSpace(coords=coords, weights=weights, ids=ids, name=name or Path(path).stem)


def write_points_csv(space: SampledSpace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"x{k + 1}" for k in range(space.dim)] + ["weight"])
        for pid, c, wt in zip(space.ids, space.coords, space.weights):
            w.writerow([pid] + [repr(float(x)) for x in c] + [repr(float(wt))])


def read_map_csv(domain: SampledSpace, codomain: SampledSpace, path) -> SampledMap:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["id", "image_id"]:
            raise ConfigError(f"{path}: expected header id,image_id")
        pairs = [(_parse_id(r["id"]), _parse_id(r["image_id"])) for r in reader]
    return map_from_pairs(domain, codomain, pairs)


def write_map_csv(m: SampledMap, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "image_id"])
        for pid, k in zip(m.domain.ids, m.image):
            w.writerow([pid, m.codomain.ids[k]])


def read_function_csv(space: SampledSpace, path, label: str = "") -> SampledFunction:
    vals = np.full(space.n, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["id", "value"]:
            raise ConfigError(f"{path}: expected header id,value")
        for r in reader:
            vals[space.index(_parse_id(r["id"]))] = float(r["value"])
    if np.isnan(vals).any():
        raise MissingPointError(f"{path}: some points have no value")
    return SampledFunction(space, vals, label=label or Path(path).stem)


def write_function_csv(u: SampledFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "value"])
        for pid, v in zip(u.space.ids, u.values):
            w.writerow([pid, repr(float(v))])


def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dump_report(report: Any, path) -> None:
    payload = {"schema": SCHEMA_VERSION, **to_jsonable(report)}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
