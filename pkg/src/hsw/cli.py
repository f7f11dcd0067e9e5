"""Command line harness: ``hsw <subcommand> [--config path] [flags]``.

Each run writes into ``<out-dir>/<name>/`` and finishes with ``manifest.json``.
Exit status is 0 on success, 1 on a numerical failure (blow-up, non-contraction)
and 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import diagnostics, dynamics, growth, imethod, resonance, xsb
from .profiles import parse_profile
from .spectral import Grid, field_to_csv

log = logging.getLogger("hsw")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# ---- parameter tables ------------------------------------------------------------


def _int_list(v):
    if isinstance(v, str):
        v = [p for p in v.split(",") if p.strip()]
    return [int(x) for x in v]


def _float_list(v):
    if isinstance(v, str):
        v = [p for p in v.split(",") if p.strip()]
    return [float(x) for x in v]


def _bool(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("1", "true", "yes"):
        return True
    if isinstance(v, str) and v.lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


@dataclass(frozen=True)
class Param:
    name: str
    kind: Callable
    default: object
    help: str = ""


def _common_evolution(n_points, dt, t_end=None, profile="single_mode:1:0.1"):
    ps = [
        Param("j", int, 1, "dispersion order"),
        Param("n_points", int, n_points, "spatial grid size (power of two)"),
        Param("dt", float, dt, "time step"),
        Param("profile", str, profile, "initial data: single_mode:k:a, broadband:d:seed:a or a CSV path"),
    ]
    if t_end is not None:
        ps.append(Param("t_end", float, t_end, "final time"))
    return ps


def _probe_params(n_samples):
    return [
        Param("j", int, 1, "dispersion order"),
        Param("n_points", int, 32, "spatial resolution"),
        Param("n_time", int, 128, "temporal resolution"),
        Param("t_window", float, 2 * np.pi, "time window length"),
        Param("n_samples", int, n_samples, "ensemble size"),
        Param("seed", int, 0, "master seed"),
    ]


COMMANDS = {
    "simulate": _common_evolution(256, 1e-4, 1.0)
    + [
        Param("record_every", int, 100, "steps between stored states"),
        Param("s_list", _float_list, [0.5, 1.0], "extra H^s norms to log"),
        Param("snapshots", _bool, True, "write t_<i>.csv per stored state"),
    ],
    "picard-check": _common_evolution(64, 1e-3)
    + [
        Param("delta", float, None, "window length (default min(0.05, 0.1/||u0||_H1))"),
        Param("n_iter", int, 8, "maximum Picard iterations"),
        Param("s", float, 1.0, "regularity of the sup-in-time distance"),
    ],
    "imethod-scan": _common_evolution(256, 2.5e-6, profile="broadband:0.05:0:1.0")
    + [
        Param("delta", float, 0.1, "window length"),
        Param("s", float, 0.6, "regularity of the I-multiplier"),
        Param("n_ladder", _int_list, [8, 16, 32, 64], "cutoffs N"),
    ],
    "resonance-verify": [
        Param("j", int, 1, "dispersion order"),
        Param("k_max", int, 64, "scan bound"),
    ],
    "annulus-count": [
        Param("j", int, 1, "dispersion order"),
        Param("k", int, 1, "output frequency"),
        Param("windows", _int_list, [4, 16, 64, 256, 1024, 4096], "window widths M"),
        Param("k1_range", int, 128, "bound on |k1|"),
        Param("positive_only", _bool, False, "restrict to 0 < k1 < k"),
    ],
    "l4-probe": _probe_params(1000),
    "bilinear-probe": _probe_params(500)
    + [
        Param("form", str, "lemma32", "lemma31 or lemma32"),
        Param("s", float, -0.5, "regularity"),
    ],
    "growth-campaign": _common_evolution(64, 1e-3, 50.0, profile="broadband:0.5:0:0.1")
    + [
        Param("s", float, 0.8, "regularity"),
        Param("epsilon", float, None, "law parameter (default 1e-6/(2j+1))"),
        Param("record_every", int, 100, "steps between stored states"),
    ],
}

RESERVED = {"name"}


def _key_line(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _where(path, text, key):
    line = _key_line(text, key) if text else None
    if path is None:
        return f"--{key.replace('_', '-')}"
    return f"{path}:{line}" if line else f"{path}"


def load_config(path) -> tuple:
    """Parse a JSON config file; returns ``(dict, text)``."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{path}:1: config file not found")
    text = p.read_text()
    if not text.strip():
        raise ConfigError(f"{path}:1: config file is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    return data, text


def resolve_config(command: str, file_cfg: dict, overrides: dict, path=None, text="") -> dict:
    """Defaults, then file values, then CLI flags; each value coerced to its declared type."""
    table = {p.name: p for p in COMMANDS[command]}
    for key in file_cfg:
        if key not in table and key not in RESERVED and key != "command":
            raise ConfigError(f"{_where(path, text, key)}: unknown field {key!r} for {command}")
    if "command" in file_cfg and file_cfg["command"] != command:
        raise ConfigError(
            f"{_where(path, text, 'command')}: config is for {file_cfg['command']!r}, not {command!r}"
        )
    cfg = {"command": command}
    for name, p in table.items():
        src_path = path
        if overrides.get(name) is not None:
            raw, src_path = overrides[name], None
        elif name in file_cfg:
            raw = file_cfg[name]
        else:
            cfg[name] = p.default
            continue
        try:
            cfg[name] = None if raw is None else p.kind(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{_where(src_path, text, name)}: bad value for {name}: {exc}") from exc
    cfg["name"] = str(overrides.get("name") or file_cfg.get("name") or (Path(path).stem if path else command))
    return cfg


def worker_count() -> int:
    raw = os.environ.get("HSW_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"HSW_THREADS must be an integer, got {raw!r}") from None


# ---- serialization ---------------------------------------------------------------


def _num(v):
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    return repr(float(v))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class RunDir:
    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.artifacts = []

    def write(self, name: str, text: str) -> None:
        (self.root / name).write_text(text)
        self.artifacts.append(name)


# ---- setup and subcommands -----------------------------------------------------


def _grid(cfg) -> Grid:
    try:
        return Grid(cfg["n_points"], cfg["j"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _initial(cfg, grid):
    try:
        u0 = parse_profile(cfg["profile"], grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if u0.coeffs[0] != 0:
        raise ConfigError("initial data must have zero mean")
    return u0


def _params(cfg, t_end) -> dynamics.EvolutionParams:
    try:
        return dynamics.EvolutionParams(cfg["j"], cfg["dt"], t_end)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _positive(cfg, *names):
    for n in names:
        if cfg[n] is not None and not cfg[n] > 0:
            raise ConfigError(f"{n} must be positive, got {cfg[n]}")


def cmd_simulate(cfg, out: RunDir, workers):
    _positive(cfg, "record_every", "t_end")
    grid = _grid(cfg)
    u0 = _initial(cfg, grid)
    params = _params(cfg, cfg["t_end"])
    traj = dynamics.evolve(u0, params, record_every=cfg["record_every"])
    recs = diagnostics.record(traj, cfg["s_list"])
    out.write("diagnostics.csv", diagnostics.records_to_csv(recs))
    if cfg["snapshots"]:
        out.write("times.csv", csv_text(["index", "time"], enumerate(traj.times)))
        for i in range(len(traj)):
            out.write(f"t_{i}.csv", field_to_csv(traj.state(i)))
    summary = {
        "relative_energy_drift": diagnostics.relative_energy_drift(recs),
        "max_abs_mean": max(abs(r.mean) for r in recs),
        "n_records": len(recs),
        "t_end": traj.t_end,
    }
    out.write("summary.json", json_text(summary))


def cmd_picard(cfg, out: RunDir, workers):
    _positive(cfg, "n_iter", "delta")
    grid = _grid(cfg)
    u0 = _initial(cfg, grid)
    params = _params(cfg, 1.0)
    delta = cfg["delta"] if cfg["delta"] is not None else dynamics.default_picard_window(u0)
    res = dynamics.picard_iterate(u0, delta, cfg["n_iter"], params, s=cfg["s"])
    ratios = [None] + [
        res.distances[m + 1] / res.distances[m] if res.distances[m] > 0 else None
        for m in range(len(res.distances) - 1)
    ]
    out.write(
        "picard.csv",
        csv_text(["iteration", "distance", "ratio"], [(m + 1, d, r) for m, (d, r) in enumerate(zip(res.distances, ratios))]),
    )
    fixed = res.fixed_point
    ref = dynamics.evolve(u0, dynamics.EvolutionParams(cfg["j"], float(fixed.times[1] - fixed.times[0]), delta))
    err = float(np.max(np.sqrt(np.sum((1 + grid.modes.astype(float) ** 2) * np.abs(ref.coeffs - fixed.coeffs) ** 2, axis=1))))
    summary = {
        "delta": delta,
        "iterations": len(res.distances),
        "converged": res.converged,
        "contracting": res.contracting,
        "max_ratio_from_second": max(res.ratios[1:], default=None),
        "fixed_point_vs_evolve_h1": err,
    }
    out.write("summary.json", json_text(summary))
    if not res.contracting:
        raise NumericalFailure("Picard iteration is not contracting on this window")


def cmd_imethod(cfg, out: RunDir, workers):
    _positive(cfg, "delta")
    grid = _grid(cfg)
    u0 = _initial(cfg, grid)
    params = _params(cfg, cfg["delta"])
    try:
        ims = [imethod.IMultiplier(cfg["s"], n) for n in cfg["n_ladder"]]
        imethod.validate_ladder(u0, ims)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = imethod.scaling_study(u0, cfg["delta"], ims, params, workers=workers)
    out.write("scaling.csv", csv_text(["N", "increment", "abs_increment"], report.table_rows()))
    out.write("scaling.json", json_text({"s": report.s, "n_values": report.n_values, **report.summary()}))


def cmd_resonance(cfg, out: RunDir, workers):
    try:
        rep = resonance.equivalence_scan(cfg["j"], cfg["k_max"], workers=workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out.write("resonance.json", json_text(rep.to_json_dict()))


def cmd_annulus(cfg, out: RunDir, workers):
    if not cfg["windows"] or any(m < 1 for m in cfg["windows"]):
        raise ConfigError("windows must be a non-empty list of positive integers")
    if cfg["k"] == 0 or cfg["k1_range"] < 1 or cfg["j"] < 1:
        raise ConfigError("need k != 0, k1_range >= 1 and j >= 1")
    counts = [
        resonance.annulus_count(cfg["k"], cfg["j"], m, cfg["k1_range"], cfg["positive_only"])
        for m in cfg["windows"]
    ]
    out.write("annulus.csv", csv_text(["window", "count"], zip(cfg["windows"], counts)))
    exponent = resonance.count_exponent(counts, cfg["windows"]) if len(counts) > 1 else None
    out.write("annulus.json", json_text({"counts": counts, "windows": cfg["windows"], "exponent": exponent}))


def _probe_setup(cfg):
    grid = _grid(cfg)
    _positive(cfg, "n_samples", "t_window")
    nt = cfg["n_time"]
    if nt < 2 or nt & (nt - 1):
        raise ConfigError(f"n_time must be a power of two, got {nt}")
    return grid


def _write_probe(out, rep):
    out.write("probe.json", json_text(rep.to_json_dict()))
    out.write("ratios.csv", csv_text(["sample", "ratio"], enumerate(rep.ratios)))


def cmd_l4(cfg, out: RunDir, workers):
    grid = _probe_setup(cfg)
    rep = xsb.l4_probe(cfg["n_samples"], grid, cfg["n_time"], cfg["t_window"], cfg["seed"], workers=workers)
    _write_probe(out, rep)


def cmd_bilinear(cfg, out: RunDir, workers):
    grid = _probe_setup(cfg)
    form = cfg["form"]
    if form not in xsb.BILINEAR_THRESHOLDS:
        raise ConfigError(f"form must be lemma31 or lemma32, got {form!r}")
    thr = xsb.BILINEAR_THRESHOLDS[form](cfg["j"])
    if cfg["s"] < thr - 1e-12:
        raise ConfigError(f"{form} needs s >= {thr} for j={cfg['j']}, got {cfg['s']}")
    rep = xsb.bilinear_probe(
        form, cfg["s"], cfg["n_samples"], grid, cfg["n_time"], cfg["t_window"], cfg["seed"], workers=workers
    )
    _write_probe(out, rep)


def cmd_growth(cfg, out: RunDir, workers):
    _positive(cfg, "t_end", "record_every")
    grid = _grid(cfg)
    u0 = _initial(cfg, grid)
    params = _params(cfg, cfg["t_end"])
    try:
        growth.growth_exponents(cfg["j"], cfg["s"], cfg["epsilon"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = growth.growth_campaign(
        u0, cfg["j"], cfg["s"], cfg["t_end"], params, record_every=cfg["record_every"], epsilon=cfg["epsilon"]
    )
    out.write("campaign.csv", csv_text(["t", "sup_hs"], zip(res.times, res.sup_hs)))
    out.write("summary.json", json_text(res.summary()))


HANDLERS = {
    "simulate": cmd_simulate,
    "picard-check": cmd_picard,
    "imethod-scan": cmd_imethod,
    "resonance-verify": cmd_resonance,
    "annulus-count": cmd_annulus,
    "l4-probe": cmd_l4,
    "bilinear-probe": cmd_bilinear,
    "growth-campaign": cmd_growth,
}


def run(cfg: dict, out_dir="runs") -> tuple:
    """Execute a resolved config. Returns ``(exit_code, run_dir)``."""
    workers = worker_count()
    out = RunDir(Path(out_dir) / cfg["name"])
    start = time.perf_counter()
    code, error = EXIT_OK, None
    try:
        HANDLERS[cfg["command"]](cfg, out, workers)
    except ConfigError as exc:
        code, error = EXIT_CONFIG, str(exc)
    except dynamics.BlowUpError as exc:
        code, error = EXIT_NUMERICAL, f"blow-up: {exc}"
    except NumericalFailure as exc:
        code, error = EXIT_NUMERICAL, str(exc)
    except (ValueError, ArithmeticError) as exc:
        code, error = EXIT_NUMERICAL, f"{cfg['command']}: {type(exc).__name__}: {exc}"
    manifest = {
        "config": cfg,
        "artifacts": out.artifacts + ["manifest.json"],
        "exit_code": code,
        "error": error,
        "threads": workers,
        "wall_time_s": time.perf_counter() - start,
    }
    (out.root / "manifest.json").write_text(json_text(manifest))
    if error:
        print(f"hsw {cfg['command']}: {error}", file=sys.stderr)
    return code, out.root


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsw", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, params in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config; flags override its fields")
        sp.add_argument("--out-dir", default="runs", help="parent of the run directory")
        sp.add_argument("--name", help="run directory name")
        for p in params:
            sp.add_argument("--" + p.name.replace("_", "-"), dest=p.name, default=None, help=p.help)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    opts = vars(args)
    try:
        file_cfg, text = ({}, "")
        if args.config is not None:
            file_cfg, text = load_config(args.config)
        overrides = {p.name: opts[p.name] for p in COMMANDS[args.command]}
        overrides["name"] = args.name
        cfg = resolve_config(args.command, file_cfg, overrides, args.config, text)
        worker_count()
    except ConfigError as exc:
        print(f"hsw {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, root = run(cfg, args.out_dir)
    if code == EXIT_OK:
        print(root)
    return code


if __name__ == "__main__":
    sys.exit(main())
