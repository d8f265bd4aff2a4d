"""
Command-line front end.

``diracres states|counting|scattering|det|verify --config <file> --out <dir> [--threads N]``

The config is a JSON object with a ``potential`` entry (a path relative to
the config file, or an inline potential object) and command-specific
parameters.  Outputs are CSV and JSON with 17 significant digits; the JSON
metadata carries the sha256 hash of the potential.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .fredholm import det2
from .potential import Potential, PotentialError, potential_from_dict
from .scattering import scattering_phase
from .states import StateClass, WindingError, counting_report, find_states
from .verification import run_all

EXIT_FAIL = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    """Invalid or malformed configuration."""


# -- number formatting -----------------------------------------------------------

def fmt(v) -> str:
    """17 significant digits, round-trip safe."""
    return format(float(v), ".17g")


def _to_json(obj, indent: int = 0) -> str:
    pad, pad1 = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad1}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        return "[" + ", ".join(_to_json(v, indent + 1) for v in seq) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _to_json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return "null"
        return fmt(v)
    if hasattr(obj, "value"):          # enums
        return json.dumps(obj.value)
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_to_json(obj) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


# -- config ----------------------------------------------------------------------

def load_config(path) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg["_base"] = path.parent
    return cfg


def config_potential(cfg: dict) -> Potential:
    spec = cfg.get("potential")
    if spec is None:
        raise ConfigError("config needs a 'potential' entry")
    if isinstance(spec, str):
        p = Path(spec)
        if not p.is_absolute():
            p = cfg["_base"] / p
        try:
            spec = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in potential file {p}: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read potential file {p}: {exc}") from exc
    if not isinstance(spec, dict):
        raise ConfigError("potential must be an object or a path")
    try:
        return potential_from_dict(spec)
    except (PotentialError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid potential: {exc}") from exc


def _positive(cfg, key, default):
    v = cfg.get(key, default)
    if not isinstance(v, (int, float)) or v <= 0:
        raise ConfigError(f"'{key}' must be a positive number")
    return v


def _region(cfg) -> tuple:
    r = cfg.get("region")
    if not (isinstance(r, list) and len(r) == 4 and all(isinstance(v, (int, float)) for v in r)):
        raise ConfigError("'region' must be [xmin, xmax, ymin, ymax]")
    if not (r[0] < r[1] and r[2] < r[3]):
        raise ConfigError("'region' is not well formed")
    return tuple(float(v) for v in r)


def _meta(P: Potential, command: str, cfg: dict) -> dict:
    params = {k: v for k, v in cfg.items() if not k.startswith("_") and k != "potential"}
    return {"command": command, "version": __version__, "potential_sha256": P.content_hash(),
            "m": P.m, "gamma": P.gamma, "parameters": params}


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# -- commands --------------------------------------------------------------------

def cmd_states(cfg: dict, out: Path, threads: int = 1) -> int:
    P = config_potential(cfg)
    region = _region(cfg)
    states, info = find_states(P, region)
    rows = [(s.lam.real, s.lam.imag, s.k.real, s.k.imag, s.cls.value, s.multiplicity,
             s.residual, s.newton_iters, s.flag) for s in states]
    write_csv(out / "states.csv", ["re_lambda", "im_lambda", "re_k", "im_k", "class",
                                   "multiplicity", "residual", "newton_iters", "flag"], rows)
    counts = {c.value: sum(s.multiplicity for s in states if s.cls is c) for c in StateClass}
    roots = sum(r[1] for r in info["roots"])
    write_json(out / "states.json", {
        "meta": _meta(P, "states", cfg),
        "summary": {"counts": counts, "winding": info["winding"], "roots_with_multiplicity": roots,
                    "rectangles": info["rectangles"], "region": info["region"]},
        "states": [{"lambda": s.lam, "k": s.k, "class": s.cls.value,
                    "multiplicity": s.multiplicity, "residual": s.residual,
                    "newton_iters": s.newton_iters, "flag": s.flag} for s in states]})
    return 0


def cmd_counting(cfg: dict, out: Path, threads: int = 1) -> int:
    P = config_potential(cfg)
    radii = cfg.get("radii", [10.0, 20.0, 40.0])
    if not (isinstance(radii, list) and radii and all(isinstance(r, (int, float)) and r > 0
                                                       for r in radii)):
        raise ConfigError("'radii' must be a list of positive numbers")
    delta = _positive(cfg, "delta", 0.2)
    reps = _pmap(lambda r: counting_report(P, [float(r)], delta), radii, threads)
    rows = []
    for r, rep in zip(radii, reps):
        c, p, o = rep.counts[0], rep.predicted[0], rep.sector_outliers[0]
        rows.append((float(r), c, p, c / p, o, o / c if c else 0.0))
    write_csv(out / "counting.csv", ["r", "count", "predicted", "ratio", "sector_outliers",
                                     "outlier_fraction"], rows)
    write_json(out / "counting.json", {
        "meta": _meta(P, "counting", cfg),
        "rows": [dict(zip(["r", "count", "predicted", "ratio", "sector_outliers",
                           "outlier_fraction"], row)) for row in rows]})
    return 0


def _grid(cfg) -> np.ndarray:
    g = cfg.get("grid")
    if isinstance(g, dict):
        try:
            return np.linspace(float(g["start"]), float(g["stop"]), int(g["num"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("'grid' needs start, stop, num") from exc
    if isinstance(g, list) and g:
        return np.asarray(g, dtype=float)
    raise ConfigError("'grid' must be a list or {start, stop, num}")


def cmd_scattering(cfg: dict, out: Path, threads: int = 1) -> int:
    P = config_potential(cfg)
    lam = _grid(cfg)
    tr = scattering_phase(lam, P)
    tr.to_csv(out / "phase.csv")
    write_json(out / "scattering.json", {
        "meta": _meta(P, "scattering", cfg), "omega0": tr.omega0,
        "max_unimodularity_error": float(np.max(np.abs(np.abs(tr.S) - 1))),
        "points": len(tr.lam)})
    return 0


def _points(cfg) -> list:
    pts = cfg.get("points")
    if pts is not None:
        try:
            return [complex(float(a), float(b)) for a, b in pts]
        except (TypeError, ValueError) as exc:
            raise ConfigError("'points' must be a list of [re, im] pairs") from exc
    g = cfg.get("grid")
    if isinstance(g, dict) and "re" in g and "im" in g:
        re = np.linspace(*g["re"][:2], int(g["re"][2]))
        im = np.linspace(*g["im"][:2], int(g["im"][2]))
        return [complex(x, y) for y in im for x in re]
    raise ConfigError("det needs 'points' or 'grid' with 're' and 'im' = [start, stop, num]")


def cmd_det(cfg: dict, out: Path, threads: int = 1) -> int:
    P = config_potential(cfg)
    N = int(_positive(cfg, "N", 200))
    pts = _points(cfg)
    if any(z.imag == 0 for z in pts):
        raise ConfigError("det points must be off the real axis")
    res = _pmap(lambda z: det2(z, P, N), pts, threads)
    rows = [(z.real, z.imag, d.nodes, d.value.real, d.value.imag, d.hs_norm, d.bound_margin)
            for z, d in zip(pts, res)]
    write_csv(out / "det.csv", ["re_lambda", "im_lambda", "N", "re_D", "im_D", "hs_norm",
                                "bound_margin"], rows)
    write_json(out / "det.json", {
        "meta": _meta(P, "det", cfg),
        "rows": [{"lambda": z, "N": d.nodes, "D": d.value, "hs_norm": d.hs_norm,
                  "bound_margin": d.bound_margin,
                  "discretization_error": d.discretization_error} for z, d in zip(pts, res)]})
    return 0


def cmd_verify(cfg: dict, out: Path, threads: int = 1) -> int:
    P = config_potential(cfg) if "potential" in cfg else None
    only = cfg.get("criteria")
    if only is not None and not (isinstance(only, list) and all(isinstance(c, int) for c in only)):
        raise ConfigError("'criteria' must be a list of integers")
    results = run_all(only, P, log=lambda s: print(s, file=sys.stderr))
    rows = [(r.number, r.title, "pass" if r.passed else "fail", r.note) for r in results]
    write_csv(out / "verify.csv", ["criterion", "title", "verdict", "note"], rows)
    meta = _meta(P, "verify", cfg) if P is not None else {"command": "verify",
                                                           "version": __version__}
    # runtimes are left out so repeated runs give identical files
    write_json(out / "verify.json", {
        "meta": meta,
        "criteria": [{"criterion": r.number, "title": r.title, "passed": r.passed,
                      "note": r.note,
                      "metrics": {k: v for k, v in r.metrics.items() if k != "runtime_limit"}}
                     for r in results]})
    return 0 if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"states": cmd_states, "counting": cmd_counting, "scattering": cmd_scattering,
            "det": cmd_det, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diracres", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for grids")
    ap.add_argument("--version", action="version", version=__version__)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WindingError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
