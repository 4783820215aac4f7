"""Batch front end: build spaces, maps and test families from a JSON config,
run the analyzers and write one JSON report per analysis.

    biholder run config.json
    biholder preset example52 --out reports --resolution 81
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any


from . import besov, io, mapping, space
from .errors import BiholderError, BoundViolationError, ConfigError

LOG3_2 = math.log(2) / math.log(3)


@dataclass
class RunConfig:
    spaces: dict
    maps: dict
    families: dict
    analyses: list
    seed: int = 0
    out: str = "reports"
    exact: bool = False

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if "seed" not in raw:
            raise ConfigError("config needs a seed")
        unknown = set(raw) - {"spaces", "maps", "families", "analyses", "seed", "out", "exact", "name"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(spaces=raw.get("spaces", {}), maps=raw.get("maps", {}),
                  families=raw.get("families", {}), analyses=raw.get("analyses", []),
                  seed=int(raw["seed"]), out=raw.get("out", "reports"), exact=bool(raw.get("exact", False)))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for name, spec in self.maps.items():
            for key in ("domain", "codomain"):
                if key in spec and spec[key] not in self.spaces:
                    raise ConfigError(f"map {name!r}: unknown space {spec[key]!r}")
        for name, spec in self.families.items():
            if spec.get("space") not in self.spaces:
                raise ConfigError(f"family {name!r}: unknown space {spec.get('space')!r}")
        names = set()
        for a in self.analyses:
            if "name" not in a or "kind" not in a:
                raise ConfigError("every analysis needs a name and a kind")
            if a["name"] in names:
                raise ConfigError(f"duplicate analysis name {a['name']!r}")
            names.add(a["name"])
            for key, table in (("space", self.spaces), ("map", self.maps), ("family", self.families)):
                if key in a and a[key] not in table:
                    raise ConfigError(f"analysis {a['name']!r}: unknown {key} {a[key]!r}")
            for m in a.get("maps", []):
                if m not in self.maps:
                    raise ConfigError(f"analysis {a['name']!r}: unknown map {m!r}")


# -- presets -------------------------------------------------------------------


def _grid(hw, res, center=(0.0, 0.0)):
    return {"builder": "grid", "dim": len(center), "half_width": hw, "resolution": res, "offset": list(center)}


def preset(name: str) -> RunConfig:
    """Built-in deterministic config, looked up by name."""
    if name == "example51":
        ns = list(range(1, 11))
        spaces = {f"Z{n}": _grid(1.5, 61, (float(n), 0.0)) for n in ns}
        maps = {f"f{n}": {"builder": "radial_stretch", "domain": f"Z{n}"} for n in ns}
        analyses = [{"name": "growth", "kind": "ub_sequence", "maps": [f"f{n}" for n in ns], "r": 1.0,
                     "mode": "verify", "expect": {"b_min": [2 * n + 1 for n in ns], "rtol": 0.05,
                                                  "verdict": "fail"}}]
        raw = dict(spaces=spaces, maps=maps, analyses=analyses)
    elif name == "example52":
        raw = dict(
            spaces={"Z": _grid(4.0, 81)},
            maps={"f": {"builder": "sqrt_radial", "domain": "Z"}},
            analyses=[
                {"name": "ub", "kind": "uniform_boundedness", "map": "f", "r": 2.0, "mode": "verify",
                 "expect": {"a_min": 2.0, "b_max": 6.0, "rtol": 0.05}},
                {"name": "holder_fit", "kind": "biholder_fit", "map": "f", "r": 2.0, "mode": "verify",
                 "expect": {"theta1": [0.9, 1.1], "theta2": [0.45, 0.55]}},
            ])
    elif name == "snowflake-identity":
        eps, s, p = 0.5, 0.6, 2.0
        raw = dict(
            spaces={"Z": {"builder": "cantor", "ratio": 1 / 3, "depth": 8},
                    "W": {"builder": "snowflake", "of": "Z", "epsilon": eps}},
            maps={"f": {"builder": "identity", "domain": "Z", "codomain": "W"}},
            families={"noise": {"builder": "random", "space": "W", "n": 10}},
            analyses=[{"name": "embedding", "kind": "embedding", "map": "f", "family": "noise",
                       "s": s, "s_prime": eps * s, "p": p, "mode": "verify", "seminorm": "exact",
                       "holder": {"theta1": eps, "theta2": eps, "r": 1.0, "C": 1.0},
                       "Q_Z": LOG3_2, "Q_W": LOG3_2 / eps,
                       "expect": {"sup_seminorm_ratio": [1 - 1e-10, 1 + 1e-10]}}])
    elif name == "remark53":
        raw = dict(
            spaces={"Z": _grid(4.0, 41)},
            maps={"f": {"builder": "sqrt_radial", "domain": "Z"}},
            families={"bumps": {"builder": "bumps", "space": "Z", "n": 20, "width_range": [0.5, 2.0]}},
            analyses=[{"name": f"embedding_s{s:g}", "kind": "embedding", "map": "f", "family": "bumps",
                       "s": s, "s_prime": s / 2 - 1 / 2.0, "p": 2.0, "mode": "verify",
                       "holder": {"theta1": 1.0, "theta2": 0.5, "r": 2.0, "C": 4.0},
                       "Q_Z": 2.0, "Q_W": 2.0, "expect": {"sup_ratio_finite": True}}
                      for s in (1.2, 1.6, 2.0)])
    elif name == "prop14-roundtrip":
        raw = dict(
            spaces={"Z": {"builder": "cantor", "ratio": 1 / 3, "depth": 8},
                    "W": {"builder": "snowflake", "of": "Z", "epsilon": 0.5}},
            maps={"f": {"builder": "identity", "domain": "Z", "codomain": "W"}},
            analyses=[{"name": "roundtrip", "kind": "roundtrip", "map": "f", "r": 0.5, "mode": "verify",
                       "expect": {"exponent_atol": 0.05}}])
    elif name == "lemma31-equivalence":
        raw = dict(
            spaces={"Z": {"builder": "grid", "dim": 1, "half_width": 1.0, "resolution": 201}},
            families={"bumps": {"builder": "bumps", "space": "Z", "n": 20, "width_range": [0.1, 0.5]}},
            analyses=[{"name": "equivalence", "kind": "discrete_vs_pairwise", "family": "bumps",
                       "s": 0.5, "p": 2.0, "r": 1.0, "mode": "explore"}])
    else:
        raise ConfigError(f"unknown preset {name!r}")
    raw.setdefault("families", {})
    return RunConfig.from_dict({"seed": 0, **raw})


def apply_overrides(cfg: RunConfig, seed=None, resolution=None, exact=False, out=None) -> RunConfig:
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg.seed = int(seed)
    if resolution is not None:
        for spec in cfg.spaces.values():
            if spec.get("builder") == "grid":
                spec["resolution"] = int(resolution)
    if exact:
        cfg.exact = True
    if out is not None:
        cfg.out = out
    return cfg


# -- builders ------------------------------------------------------------------


class Workspace:
    """Lazily resolved spaces, maps and families of one config."""

    def __init__(self, cfg: RunConfig, base_dir: Path):
        self.cfg, self.base = cfg, base_dir
        self._spaces: dict = {}
        self._maps: dict = {}
        self._families: dict = {}

    def _path(self, p):
        return self.base / p

    def space(self, name: str) -> space.SampledSpace:
        if name not in self._spaces:
            spec = dict(self.cfg.spaces[name])
            kind = spec.pop("builder", None)
            if kind == "grid":
                sp = space.build_grid(spec["dim"], spec["half_width"], spec["resolution"], spec.get("offset"))
            elif kind == "cantor":
                sp = space.build_cantor(spec["ratio"], spec["depth"], spec.get("dim", 1))
            elif kind == "snowflake":
                sp = space.snowflake(self.space(spec["of"]), spec["epsilon"])
            elif kind == "csv":
                metric = spec.get("metric")
                sp = io.read_points_csv(self._path(spec["path"]), self._path(metric) if metric else None, name)
            else:
                raise ConfigError(f"space {name!r}: unknown builder {kind!r}")
            self._spaces[name] = sp
        return self._spaces[name]

    def map(self, name: str) -> mapping.SampledMap:
        if name not in self._maps:
            spec = self.cfg.maps[name]
            kind = spec.get("builder")
            dom = self.space(spec["domain"])
            cod = self.space(spec["codomain"]) if "codomain" in spec else None
            if kind == "radial_stretch":
                m = mapping.make_radial_stretch(dom)
            elif kind == "sqrt_radial":
                m = mapping.make_sqrt_radial(dom)
            elif kind == "identity":
                m = mapping.make_identity(dom, cod)
            elif kind == "scaling":
                m = mapping.make_scaling(dom, spec["factor"])
            elif kind == "csv":
                m = io.read_map_csv(dom, cod, self._path(spec["path"]))
            else:
                raise ConfigError(f"map {name!r}: unknown builder {kind!r}")
            self._maps[name] = m
        return self._maps[name]

    def family(self, name: str) -> list:
        if name not in self._families:
            spec = self.cfg.families[name]
            kind = spec.get("builder")
            sp = self.space(spec["space"])
            seed = spec.get("seed", self.cfg.seed)
            if kind == "bumps":
                fam = besov.gen_bumps(sp, spec["n"], tuple(spec["width_range"]), seed=seed,
                                      centers=spec.get("centers"))
            elif kind == "random":
                fam = besov.random_functions(sp, spec["n"], seed=seed)
            elif kind == "csv":
                fam = [io.read_function_csv(sp, self._path(p)) for p in spec["paths"]]
            else:
                raise ConfigError(f"family {name!r}: unknown builder {kind!r}")
            self._families[name] = fam
        return self._families[name]


# -- analyses ------------------------------------------------------------------


def _within(x, lo, hi):
    return lo <= x <= hi


def _run_analysis(ws: Workspace, a: dict) -> dict:
    """Returns the report body; ``passed`` is None when nothing was declared."""
    cfg = ws.cfg
    kind = a["kind"]
    seed = a.get("seed", cfg.seed)
    exp = a.get("expect", {})
    checks: dict[str, bool] = {}
    if kind == "regularity":
        rep = space.estimate_regularity(ws.space(a["space"]), seed=seed)
        body = {"regularity": rep}
        if "Q" in exp:
            checks["Q"] = abs(rep.Q_hat - exp["Q"]) <= exp.get("atol", 0.05)
    elif kind == "perfectness":
        rep = space.check_uniform_perfectness(ws.space(a["space"]), seed=seed)
        body = {"perfectness": rep, "verdict": rep.verdict}
        if "verdict" in exp:
            checks["verdict"] = rep.verdict == exp["verdict"]
    elif kind == "uniform_boundedness":
        rep = mapping.check_uniform_boundedness(ws.map(a["map"]), a["r"], seed=seed)
        body = {"uniform_boundedness": rep}
        tol = exp.get("rtol", 0.05)
        if "a_min" in exp:
            checks["a_min"] = rep.a >= exp["a_min"] * (1 - tol)
        if "b_max" in exp:
            checks["b_max"] = rep.b <= exp["b_max"] * (1 + tol)
    elif kind == "ub_sequence":
        reps = []
        for mname in a["maps"]:
            m = ws.map(mname)
            centre = m.domain.window.center if m.domain.window else None
            centers = [m.domain.nearest(centre)] if centre is not None else None
            reps.append(mapping.check_uniform_boundedness(m, a["r"], seed=seed, centers=centers))
        verdict = mapping.nested_ub_verdict(reps)
        body = {"reports": reps, "verdict": verdict}
        tol = exp.get("rtol", 0.05)
        if "b_min" in exp:
            checks["b_min"] = all(rep.b >= b * (1 - tol) for rep, b in zip(reps, exp["b_min"]))
        if "verdict" in exp:
            checks["verdict"] = verdict == exp["verdict"]
    elif kind == "biholder_fit":
        fit = mapping.fit_local_biholder(ws.map(a["map"]), a["r"], seed=seed)
        body = {"fit": fit}
        for key in ("theta1", "theta2"):
            if key in exp:
                checks[key] = _within(getattr(fit.params, key), *exp[key])
    elif kind == "biholder_check":
        params = mapping.HolderParams(**a["params"])
        chk = mapping.check_local_biholder(ws.map(a["map"]), params, seed=seed)
        body = {"check": chk, "verdict": chk.verdict}
        checks["verdict"] = chk.verdict == "pass"
    elif kind == "qs_fit":
        fit = mapping.fit_power_qs(ws.map(a["map"]), seed=seed)
        body = {"fit": fit}
    elif kind == "roundtrip":
        m = ws.map(a["map"])
        fwd = mapping.fit_local_biholder(m, a["r"], seed=seed)
        predicted = mapping.inverse_params(fwd.params)
        back = mapping.fit_local_biholder(mapping.invert(mapping.materialize(m)), predicted.r, seed=seed)
        body = {"forward": fwd, "predicted_inverse": predicted, "backward": back}
        if "exponent_atol" in exp:
            tol = exp["exponent_atol"]
            checks["theta1"] = abs(back.params.theta1 - predicted.theta1) <= tol
            checks["theta2"] = abs(back.params.theta2 - predicted.theta2) <= tol
    elif kind == "embedding":
        m = ws.map(a["map"])
        fam = ws.family(a["family"])
        holder = mapping.HolderParams(**a["holder"]) if "holder" in a else None
        s_prime = a["s_prime"]
        if s_prime == "max":
            s_prime = besov.admissible_smoothness(a["Q_Z"], a["Q_W"], holder.theta1, holder.theta2,
                                                  a["s"], a["p"]).s_prime_max
        seminorm = a.get("seminorm")
        center_budget = None if cfg.exact else a.get("center_budget")
        if cfg.exact and seminorm is not None:
            seminorm = "exact"
        rep = besov.embedding_ratio_study(
            m, a["s"], s_prime, a["p"], fam, mode=a.get("mode", "verify"), holder=holder,
            Q_Z=a.get("Q_Z"), Q_W=a.get("Q_W"), seminorm_budget=seminorm,
            center_budget=center_budget, seed=seed)
        body = {"embedding": rep}
        if "sup_seminorm_ratio" in exp:
            checks["sup_seminorm_ratio"] = _within(rep.sup_seminorm_ratio, *exp["sup_seminorm_ratio"])
        if exp.get("sup_ratio_finite"):
            checks["sup_ratio_finite"] = math.isfinite(rep.sup_ratio)
    elif kind == "discrete_vs_pairwise":
        fam = ws.family(a["family"])
        sp = fam[0].space
        bp = besov.BesovParams(a["s"], a["p"])
        disc = besov.default_discretization(sp, a.get("r", sp.diam_sample))
        rows = []
        for u in fam:
            d = besov.discrete_besov(u, bp, disc)
            sem = besov.besov_seminorm(u, bp)
            rows.append({"label": u.label, "scale_part": d.scale_part, "seminorm": sem,
                         "ratio": d.scale_part / sem if sem > 0 else None})
        ratios = [r["ratio"] for r in rows if r["ratio"]]
        K = max(max(ratios), 1 / min(ratios))
        body = {"rows": rows, "disc": disc, "K": K}
        if "K_max" in exp:
            checks["K_max"] = K <= exp["K_max"]
    else:
        raise ConfigError(f"analysis {a['name']!r}: unknown kind {kind!r}")
    body["checks"] = checks
    body["passed"] = all(checks.values()) if checks else None
    return body


def _strip_wall_time(obj: Any, sink: list) -> Any:
    """Move wall-clock fields out of the report so reruns are byte-identical."""
    if isinstance(obj, dict):
        if "wall_time" in obj:
            sink.append(obj.pop("wall_time"))
        return {k: _strip_wall_time(v, sink) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_strip_wall_time(v, sink) for v in obj]
    return obj


def run(cfg: RunConfig, base_dir: Path | str = ".") -> int:
    """Run every analysis; exit status 1 iff a verify-mode analysis misses its declared bound."""
    base_dir = Path(base_dir)
    out = Path(cfg.out)
    if not out.is_absolute():
        out = base_dir / out
    out.mkdir(parents=True, exist_ok=True)
    ws = Workspace(cfg, base_dir)
    failed = []
    timings = {}
    for a in cfg.analyses:
        mode = a.get("mode", "verify")
        t0 = time.perf_counter()
        try:
            body = _run_analysis(ws, a)
        except BoundViolationError as exc:
            body = {"error": str(exc), "checks": {"bound": False}, "passed": False}
        except BiholderError as exc:
            raise type(exc)(f"analysis {a['name']!r}: {exc}") from exc
        timings[a["name"]] = time.perf_counter() - t0
        body = _strip_wall_time(io.to_jsonable(body), [])
        report = {"name": a["name"], "kind": a["kind"], "mode": mode, "seed": a.get("seed", cfg.seed),
                  "config": a, **body}
        io.dump_report(report, out / f"{a['name']}.json")
        if body.get("embedding"):
            _write_rows_csv(body["embedding"]["rows"], out / f"{a['name']}_rows.csv")
        if mode == "verify" and body["passed"] is False:
            failed.append(a["name"])
        status = "FAIL" if body["passed"] is False else ("pass" if body["passed"] else "done")
        print(f"{a['name']}: {status} ({mode})")
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return 1 if failed else 0


def _write_rows_csv(rows: list[dict], path: Path) -> None:
    import csv

    keys = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="biholder", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a JSON config")
    p_run.add_argument("config")
    p_pre = sub.add_parser("preset", help="run a built-in example")
    p_pre.add_argument("name")
    p_pre.add_argument("--out", default=None)
    p_pre.add_argument("--seed", type=int, default=None)
    p_pre.add_argument("--resolution", type=int, default=None)
    p_pre.add_argument("--exact", action="store_true")
    p_pre.add_argument("--print-config", action="store_true", help="print the config and exit")
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            path = Path(args.config)
            cfg = RunConfig.from_dict(io.load_json(path))
            return run(cfg, path.parent)
        cfg = apply_overrides(preset(args.name), args.seed, args.resolution, args.exact,
                              args.out or f"reports/{args.name}")
        if args.print_config:
            print(json.dumps(cfg.__dict__, indent=2, sort_keys=True))
            return 0
        return run(cfg)
    except BiholderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
