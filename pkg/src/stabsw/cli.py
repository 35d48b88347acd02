"""Command-line experiment runner.

``stabsw <command> --config <file> [--order M] [--out DIR] [--emit-plotdata] [--term-cap K] [--seed S]``

Exit codes: 0 success, 2 config error, 3 term-cap breach, 4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import models as mdl
from .observables import (
    connected_correlation_orders,
    correlation_length_from_values,
    deviation_onset,
    order_expectations,
    perimeter_fit,
)
from .sw import TermCapExceeded, build_generator

log = logging.getLogger("stabsw")

EXIT_OK, EXIT_CONFIG, EXIT_TERMCAP, EXIT_VALIDATION = 0, 2, 3, 4
COMMANDS = ("tfim", "toric", "bilayer", "kagome", "validate")
CSV_COLUMNS = ["model", "coupling", "order", "observable", "value"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = ""
    extents: tuple[int, ...] = ()
    couplings: list[float] = field(default_factory=list)
    order: int = 2
    state: str = "all_up"
    frame: str = ""
    perturbation: str = "heisenberg"
    observables: list[str] = field(default_factory=list)
    threshold: float = 0.5
    out: str = "results"
    term_cap: int | None = None
    seed: int = 0
    emit_plotdata: bool = False
    mode: str = "ti"
    scaling: bool = True
    workers: int = 1
    oracle: bool = False
    xi_distances: list[int] = field(default_factory=lambda: [3])
    tie_break: str = "first"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.order < 1:
            raise ConfigError("order must be >= 1")
        if self.mode not in ("ti", "explicit"):
            raise ConfigError("mode must be 'ti' or 'explicit'")
        if self.tie_break not in ("first", "last"):
            raise ConfigError("tie_break must be 'first' or 'last'")
        if self.term_cap is not None and self.term_cap < 1:
            raise ConfigError("term cap must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.command == "validate":
            return
        if not self.couplings:
            raise ConfigError("coupling grid is empty")
        if any(not math.isfinite(c) for c in self.couplings):
            raise ConfigError("couplings must be finite")
        if self.command == "tfim":
            if len(self.extents) != 1 or self.extents[0] < 3:
                raise ConfigError("tfim needs extents = N with N >= 3")
            if self.state not in mdl.TFIM_STATES:
                raise ConfigError(f"state must be one of {mdl.TFIM_STATES}")
            if self.state == "all_right" and any(c == 0 for c in self.couplings):
                raise ConfigError("paramagnetic frame needs nonzero h")
        else:
            if len(self.extents) != 2 or min(self.extents) < 2:
                raise ConfigError(f"{self.command} needs extents = Lx Ly with both >= 2")
        if self.command == "kagome":
            if self.perturbation not in mdl.KAGOME_PERTURBATIONS:
                raise ConfigError(f"perturbation must be one of {mdl.KAGOME_PERTURBATIONS}")
            if self.frame and self.frame not in mdl.KAGOME_FRAMES:
                raise ConfigError(f"frame must be one of {mdl.KAGOME_FRAMES}")


# --- config parsing -------------------------------------------------------


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = line.split("=", 1)
        elif ":" in line.split()[0]:
            key, val = line.split(":", 1)
        else:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip().lower().replace("-", "_")
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val.strip()
    return out


def _floats(s: str) -> list[float]:
    s = s.replace(",", " ").strip()
    if not s:
        return []
    if ":" in s and len(s.split()) == 1:
        parts = s.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:step, got {s!r}")
        a, b, st = (float(p) for p in parts)
        if st == 0 or (b - a) / st < 0:
            raise ConfigError(f"bad range {s!r}")
        n = int(math.floor((b - a) / st + 1e-9)) + 1
        return [round(a + k * st, 12) for k in range(n)]
    return [float(t) for t in s.split()]


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


_PARSERS = {
    "model": str,
    "extents": lambda s: tuple(int(t) for t in s.replace(",", " ").replace("x", " ").split()),
    "couplings": _floats,
    "order": int,
    "state": str,
    "frame": str,
    "perturbation": str,
    "observables": lambda s: s.replace(",", " ").split(),
    "threshold": float,
    "out": str,
    "term_cap": int,
    "seed": int,
    "emit_plotdata": _bool,
    "mode": str,
    "scaling": _bool,
    "workers": int,
    "oracle": _bool,
    "xi_distances": lambda s: [int(t) for t in s.replace(",", " ").split()],
    "tie_break": str,
}


def load_config(command: str, text: str, overrides: dict | None = None) -> RunConfig:
    kv = parse_kv(text)
    if "command" in kv:
        if kv.pop("command") != command:
            raise ConfigError("config file is for a different command")
    alias = {"coupling": "couplings", "h": "couplings", "j": "couplings", "n": "extents", "m": "order"}
    cfg = RunConfig(command=command, model=command if command != "validate" else "")
    known = {f.name for f in fields(RunConfig)}
    for key, val in kv.items():
        key = alias.get(key, key)
        if key not in _PARSERS or key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(cfg, key, _PARSERS[key](val))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r} ({exc})") from None
    for key, val in (overrides or {}).items():
        if val is not None:
            setattr(cfg, key, val)
    if cfg.model and cfg.model != command and command != "validate":
        raise ConfigError(f"model {cfg.model!r} does not match command {command!r}")
    cfg.validate()
    return cfg


# --- model plumbing -------------------------------------------------------


def make_model(cfg: RunConfig, coupling: float) -> mdl.LatticeModel:
    if cfg.command == "tfim":
        return mdl.build_tfim_chain(cfg.extents[0], coupling, cfg.state)
    if cfg.command == "toric":
        return mdl.build_toric_square(*cfg.extents, coupling)
    if cfg.command == "bilayer":
        return mdl.build_toric_bilayer(*cfg.extents, coupling)
    if cfg.command == "kagome":
        return mdl.build_kagome_tc(*cfg.extents, cfg.perturbation, coupling, kagome_frame(cfg))
    raise ConfigError(f"no model for command {cfg.command!r}")


def kagome_frame(cfg: RunConfig) -> str:
    if cfg.frame:
        return cfg.frame
    return "z_loops" if cfg.perturbation == "zz_ising" else "x_loops"


def unit_scaling(cfg: RunConfig, coupling: float) -> tuple[float, float]:
    """``(unit_coupling, lam)`` with ``H1(coupling) = lam * H1(unit_coupling)``."""
    if cfg.command == "tfim" and cfg.state == "all_right":
        return 1.0, 1.0 / coupling
    if coupling < 0:
        return -1.0, -coupling
    return 1.0, coupling


@dataclass
class SeriesResult:
    """Per-order contributions at one coupling, keyed by observable name."""

    coupling: float
    values: dict[str, list[complex]]
    term_counts: list[int]
    seconds: float


def _pair_targets(names: list[str]) -> list[tuple[str, str, str]]:
    out = []
    for n in names:
        if n.startswith("conn:"):
            a, b = n[5:].split("|")
            out.append((n, a, b))
    return out


def compute_series(cfg: RunConfig, coupling: float, names: list[str]) -> SeriesResult:
    t0 = time.perf_counter()
    model = make_model(cfg, coupling)
    group = model.group if cfg.mode == "ti" else None
    M = cfg.order
    if model.H1.nterms == 0:
        vals = {}
        for n in names:
            if n.startswith("conn:"):
                vals[n] = [0j] * (M + 1)
            else:
                from .observables import ground_value

                vals[n] = [ground_value(model.observable(n), model.gs)] + [0j] * M
        return SeriesResult(coupling, vals, [0] * M, time.perf_counter() - t0)
    gen = build_generator(model.H0, model.H1, M, group=group, tie_break=cfg.tie_break, term_cap=cfg.term_cap)
    vals: dict[str, list[complex]] = {}
    for n in names:
        if n.startswith("conn:"):
            continue
        vals[n] = order_expectations(model.observable(n), gen, model.gs, M)
    for n, a, b in _pair_targets(names):
        vals[n] = connected_correlation_orders(model.observable(a), model.observable(b), gen, model.gs, M)
    return SeriesResult(coupling, vals, list(gen.term_counts), time.perf_counter() - t0)


def _scaled(unit: SeriesResult, coupling: float, lam: float) -> SeriesResult:
    vals = {n: [complex(v) * lam**m for m, v in enumerate(vs)] for n, vs in unit.values.items()}
    return SeriesResult(coupling, vals, unit.term_counts, 0.0)


def _series_job(args):
    cfg, c, names = args
    return compute_series(cfg, c, names)


def run_grid(cfg: RunConfig, names: list[str]) -> list[SeriesResult]:
    """Series for every coupling of the grid, in grid order."""
    if cfg.scaling:
        units: dict[float, SeriesResult] = {}
        out = []
        for c in cfg.couplings:
            u, lam = unit_scaling(cfg, c)
            if u not in units:
                units[u] = compute_series(cfg, u, names)
                log.info("unit series at coupling %g: %.1fs, terms %s", u, units[u].seconds, units[u].term_counts)
            out.append(_scaled(units[u], c, lam))
        return out
    jobs = [(cfg, c, names) for c in cfg.couplings]
    if cfg.workers == 1:
        return [_series_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_series_job, jobs))


def cumulative(vals: list[complex], m: int) -> float:
    return float(np.real(sum(vals[: m + 1])))


# --- output ---------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(float(v))
    return str(v)


def write_csv(path: Path, rows: list[dict], columns: list[str] | None = None) -> Path:
    columns = columns or CSV_COLUMNS
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    return path


def _json_clean(o):
    if isinstance(o, dict):
        return {str(k): _json_clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_json_clean(v) for v in o]
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    return o


def write_json(path: Path, data: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_clean(data), indent=2, sort_keys=True) + "\n")
    return path


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d.pop("out")
    d.pop("workers")
    return d


# --- commands -------------------------------------------------------------


def _tfim_oracle(cfg: RunConfig, h: float, names: list[str]) -> tuple[dict[str, float], str]:
    from .oracle import MAX_QUBITS, exact_expectation, pinning_field, sector_ground_state, to_dense
    from .pauli import PauliSum, concat

    N = cfg.extents[0]
    if N > MAX_QUBITS:
        return {}, "none"
    bonds = PauliSum.from_sparse(N, [{j: "Z", (j + 1) % N: "Z"} for j in range(N)], -np.ones(N))
    fields_ = PauliSum.from_sparse(N, [{j: "X"} for j in range(N)], -h * np.ones(N))
    H = concat([bonds, fields_])
    if cfg.state in ("all_up", "all_down"):
        pin = pinning_field(N)
        if cfg.state == "all_down":
            pin = PauliSum(N, pin.x, pin.z, -pin.coeffs)
        H = concat([H, pin])
        route, sector = "pinning", []
    else:
        route = "sector_parity"
        sector = [(1, PauliSum.from_sparse(N, [{q: "X" for q in range(N)}]))]
    _, psi = sector_ground_state(to_dense(H), sector)
    model = mdl.build_tfim_chain(N, h if h != 0 else 1.0, cfg.state)
    out = {}
    for n in names:
        out[n] = float(np.real(exact_expectation(model.observable(n), psi)))
    return out, route


def run_tfim(cfg: RunConfig) -> dict:
    N = cfg.extents[0]
    names = cfg.observables or ["Z"] + [f"YY_{d}" for d in range(1, min(N // 2, 6) + 1)]
    need = set(names)
    for d in cfg.xi_distances:
        if d + 1 > N // 2:
            raise ConfigError(f"xi distance {d} does not fit a ring of {N}")
        need |= {f"YY_{d}", f"YY_{d + 1}"}
    probe = mdl.build_tfim_chain(N, cfg.couplings[0] or 1.0, cfg.state)
    for n in need:
        if n not in probe.observables:
            _raise_unknown(n, probe)
    all_names = sorted(need)
    results = run_grid(cfg, all_names)
    rows, xi_rows, plot = [], [], []
    oracle_routes = {}
    use_oracle = cfg.oracle and N <= 14
    columns = CSV_COLUMNS + (["oracle", "abs_diff"] if use_oracle else [])
    for res in results:
        ed, route = _tfim_oracle(cfg, res.coupling, names) if use_oracle else ({}, "none")
        oracle_routes[repr(res.coupling)] = route
        for m in range(cfg.order + 1):
            for n in names:
                v = cumulative(res.values[n], m)
                row = {"model": "tfim", "coupling": res.coupling, "order": m, "observable": n, "value": v}
                if use_oracle:
                    row["oracle"] = ed[n]
                    row["abs_diff"] = abs(v - ed[n])
                rows.append(row)
                if m == cfg.order:
                    plot.append({"x": res.coupling, "y": v, "series": f"{n} M={m}"})
            for d in cfg.xi_distances:
                a = cumulative(res.values[f"YY_{d}"], m)
                b = cumulative(res.values[f"YY_{d + 1}"], m)
                xi = correlation_length_from_values(a, b) if a != 0 and b != 0 and abs(a) != abs(b) else None
                xi_rows.append({"model": "tfim", "coupling": res.coupling, "order": m, "observable": f"xi_{d}", "value": xi})
    out = Path(cfg.out)
    files = [write_csv(out / "tfim.csv", rows, columns), write_csv(out / "tfim_xi.csv", xi_rows)]
    report = {
        "command": "tfim",
        "config": _config_dict(cfg),
        "oracle_route": oracle_routes if use_oracle else None,
        "term_counts": results[0].term_counts if results else [],
    }
    files.append(write_json(out / "tfim_report.json", report))
    if cfg.emit_plotdata:
        files.append(write_csv(out / "tfim_plotdata.csv", plot, ["x", "y", "series"]))
    return {"files": [str(f) for f in files], "report": report, "rows": rows, "xi_rows": xi_rows}


def _raise_unknown(name, model):
    raise ConfigError(f"unknown observable {name!r} for model {model.name}")


def _loop_families(cfg: RunConfig) -> list[str]:
    return ["x_loop", "z_loop"] if cfg.command == "kagome" else ["x_loop"]


def run_loops(cfg: RunConfig) -> dict:
    """Shared driver of the toric, bilayer and kagome commands."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        probe = make_model(cfg, 1.0)
    fams = {f: mdl.loop_names(probe, f) for f in _loop_families(cfg)}
    names = [n for f in fams.values() for n in f]
    extra = list(cfg.observables)
    for n in extra:
        if n.startswith("conn:"):
            for part in n[5:].split("|"):
                if part not in probe.observables:
                    _raise_unknown(part, probe)
        elif n not in probe.observables:
            _raise_unknown(n, probe)
    corr_names = []
    if cfg.command == "toric":
        corr_names = [f"conn:B_p@0|B_p@{d}" for d in (1, 2) if f"B_p@{d}" in probe.observables]
    all_names = sorted(set(names + extra + corr_names))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = run_grid(cfg, all_names)
    circ = {n: probe.circumference[n] for n in names}
    rows, perim_rows, corr_rows, plot = [], [], [], []
    residual_at_M: dict[str, list[float]] = {f: [] for f in fams}
    for res in results:
        for m in range(cfg.order + 1):
            for n in names + extra:
                rows.append({"model": cfg.command, "coupling": res.coupling, "order": m, "observable": n, "value": cumulative(res.values[n], m)})
            for fam, fnames in fams.items():
                vals = [cumulative(res.values[n], m) for n in fnames]
                cs = [circ[n] for n in fnames]
                if all(v > 0 for v in vals) and len(fnames) >= 2:
                    alpha, resid, last = perimeter_fit(cs, np.log(vals))
                else:
                    alpha, resid, last = math.nan, [math.nan] * len(fnames), -math.inf
                perim_rows.append({"model": cfg.command, "coupling": res.coupling, "order": m, "observable": f"alpha:{fam}", "value": alpha})
                perim_rows.append({"model": cfg.command, "coupling": res.coupling, "order": m, "observable": f"residual:{fam}", "value": last})
                if m == cfg.order:
                    residual_at_M[fam].append(last)
                    for n, c, v in zip(fnames, cs, vals):
                        plot.append({"x": c, "y": math.log(v) if v > 0 else None, "series": f"{cfg.command} {fam} coupling={res.coupling!r}"})
            for n in corr_names:
                d = int(n.rsplit("@", 1)[1])
                corr_rows.append({"model": cfg.command, "coupling": res.coupling, "order": m, "observable": f"BBc_{d}", "value": cumulative(res.values[n], m)})
            if len(corr_names) >= 2:
                c1 = cumulative(res.values[corr_names[0]], m)
                c2 = cumulative(res.values[corr_names[1]], m)
                ok = c1 != 0 and c2 != 0 and abs(c1) != abs(c2)
                corr_rows.append({"model": cfg.command, "coupling": res.coupling, "order": m, "observable": "xi_BB", "value": correlation_length_from_values(c1, c2) if ok else None})
    onsets = {f: deviation_onset(cfg.couplings, residual_at_M[f], cfg.threshold) for f in fams}
    out = Path(cfg.out)
    stem = cfg.command
    files = [write_csv(out / f"{stem}_loops.csv", rows), write_csv(out / f"{stem}_perimeter.csv", perim_rows)]
    if corr_rows:
        files.append(write_csv(out / f"{stem}_correlators.csv", corr_rows))
    report = {
        "command": stem,
        "config": _config_dict(cfg),
        "circumference": circ,
        "threshold": cfg.threshold,
        "deviation_onset": onsets,
        "residual_at_order": {f: dict(zip(map(repr, cfg.couplings), r)) for f, r in residual_at_M.items()},
        "loop_shape": probe.meta.get("loop_shape"),
        "frame": probe.meta.get("frame"),
        "term_counts": results[0].term_counts if results else [],
    }
    files.append(write_json(out / f"{stem}_report.json", report))
    if cfg.emit_plotdata:
        files.append(write_csv(out / f"{stem}_plotdata.csv", plot, ["x", "y", "series"]))
    return {"files": [str(f) for f in files], "report": report, "rows": rows, "perimeter": perim_rows, "onsets": onsets}


def run_toric(cfg: RunConfig) -> dict:
    return run_loops(cfg)


def run_bilayer(cfg: RunConfig) -> dict:
    return run_loops(cfg)


def run_kagome(cfg: RunConfig) -> dict:
    return run_loops(cfg)


def validate(cfg: RunConfig) -> dict:
    from .validation import run_checks

    checks = run_checks(seed=cfg.seed)
    for c in checks:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: measured {c['measured']:.3e} (tol {c['tolerance']:.1e})")
    report = {"command": "validate", "seed": cfg.seed, "checks": checks, "passed": all(c["passed"] for c in checks)}
    out = Path(cfg.out)
    write_json(out / "validate_report.json", report)
    return report


RUNNERS = {"tfim": run_tfim, "toric": run_toric, "bilayer": run_bilayer, "kagome": run_kagome, "validate": validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabsw", description="Stabilizer Schrieffer-Wolff perturbation runs")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="plain-text key = value configuration file")
    p.add_argument("--order", type=int, help="perturbation order M (overrides config)")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--emit-plotdata", action="store_true", help="write (x, y, series) plot tables")
    p.add_argument("--term-cap", type=int, help="maximum terms per order")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        elif args.command == "validate":
            text = ""
        else:
            raise ConfigError("--config is required for model commands")
        overrides = {
            "order": args.order,
            "out": args.out,
            "term_cap": args.term_cap,
            "seed": args.seed,
            "emit_plotdata": True if args.emit_plotdata else None,
        }
        cfg = load_config(args.command, text, overrides)
        result = RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TermCapExceeded as exc:
        print(f"term cap exceeded: {exc}", file=sys.stderr)
        return EXIT_TERMCAP
    if args.command == "validate":
        return EXIT_OK if result["passed"] else EXIT_VALIDATION
    for f in result["files"]:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
