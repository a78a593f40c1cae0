"""Command-line front end.

Every command writes its numeric output plus ``manifest.json`` into ``--out``.
``nvberry replay DIR/manifest.json --out NEW`` recomputes the same outputs and
compares checksums.

Exit codes: 0 success, 1 configuration or usage error, 2 partial failure
(some rows failed, or a replay did not reproduce).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .adiabatic import epsilon_profile
from .dynamics import ramsey_phase
from .errors import InvalidConfig, NVBerryError
from .model import (
    ScenarioConfig, default_scenario, parse_angle,
    scenario_from_dict, validate_scenario,
)
from .phases import bloch_arrays, geometric_phase_shift
from .rotoframe import critical_ratio
from .sensing import sensitivity_sweep
from .spinham import branch_trajectory

MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# formatting

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_rows(path: Path, columns, rows, fmt: str) -> Path:
    if fmt == "json":
        path = path.with_suffix(".json")
        doc = [dict(zip(columns, r)) for r in rows]
        path.write_text(json.dumps(_jsonable(doc), indent=1) + "\n")
    else:
        path = path.with_suffix(".csv")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    return path


def _write_json(path: Path, doc) -> Path:
    path = path.with_suffix(".json")
    path.write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# grid parsing

def _parse_ratio_token(tok: str, crit: float | None) -> float:
    tok = tok.strip()
    if "critical" in tok:
        if crit is None:
            raise InvalidConfig("'critical' ratio undefined for this geometry")
        k = tok.replace("critical", "").rstrip("*").strip()
        return (float(k) if k else 1.0) * crit
    return float(tok)


def parse_grid(text: str, item) -> list[float]:
    """``a:b:n`` (inclusive linspace) or a comma separated list."""
    text = str(text).strip()
    if text.count(":") == 2 and "," not in text:
        a, b, n = text.split(":")
        n = int(n)
        if n < 1:
            raise InvalidConfig("grid needs at least one point")
        return [float(x) for x in np.linspace(item(a), item(b), n)]
    return [item(t) for t in text.split(",") if t.strip()]


# ---------------------------------------------------------------------------
# commands; each takes (scenario, params, out_dir, fmt) -> (files, failures)

def _geometry(s: ScenarioConfig, params) -> ScenarioConfig:
    th = params.get("theta", s.rotation.theta)
    be = params.get("beta", s.rotation.beta)
    return s.with_rotation(theta=th, beta=be)


def run_eigencurves(s, params, out, fmt):
    s = _geometry(s, params)
    stride = params.get("stride", 1)
    rows, failures = [], []
    for r in params["ratios"]:
        try:
            tr = branch_trajectory(s.with_ratio(r))
        except NVBerryError as exc:
            failures.append(f"ratio {r!r}: {type(exc).__name__}: {exc}")
            continue
        idx = np.unique(np.r_[np.arange(0, tr.t.size, stride), tr.t.size - 1])
        for k in idx:
            rows.append((tr.t[k] / tr.period, r, *tr.values[k]))
    cols = ("t_over_T", "ratio", "lambda1", "lambda2", "lambda3")
    return [_write_rows(out / "eigencurves", cols, rows, fmt)], failures


def run_bloch(s, params, out, fmt):
    s = _geometry(s, params)
    if "ratio" in params:
        s = s.with_ratio(params["ratio"])
    stride = params.get("stride", 1)
    t, polar, az, zero = bloch_arrays(s, params["branch"])
    idx = np.unique(np.r_[np.arange(0, t.size, stride), t.size - 1])
    T = s.period
    rows = [(t[k] / T, polar[k], az[k], zero[k]) for k in idx]
    cols = ("t_over_T", "polar", "azimuth", "zero_weight")
    return [_write_rows(out / "bloch", cols, rows, fmt)], []


def _phase_row(args):
    s, r = args
    sr = s.with_ratio(r)
    try:
        dphi = geometric_phase_shift(sr)
    except NVBerryError as exc:
        return r, None, None, None, f"{type(exc).__name__}: {exc}"
    try:
        rep = epsilon_profile(sr)
        return r, dphi, rep.worst, rep.feasible, None
    except NVBerryError as exc:
        return r, dphi, None, False, f"{type(exc).__name__}: {exc}"


def _pool_map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_phase_vs_ratio(s, params, out, fmt):
    s = _geometry(s, params)
    ratios = params["ratios"]
    d = np.diff(ratios)
    if len(ratios) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise InvalidConfig("ratio grid must be strictly monotone")
    res = _pool_map(_phase_row, [(s, r) for r in ratios], params.get("workers", 1))
    ok = [i for i, row in enumerate(res) if row[1] is not None]
    # continuous along the grid
    unwrapped = dict(zip(ok, np.unwrap([res[i][1] for i in ok]))) if ok else {}
    rows = [(r, unwrapped.get(i), eps, feas, err) for i, (r, _, eps, feas, err) in enumerate(res)]
    failures = [f"ratio {r!r}: {err}" for r, _, _, _, err in res if err]
    cols = ("ratio", "delta_phi_g", "eps_max", "feasible", "error")
    return [_write_rows(out / "phase_vs_ratio", cols, rows, fmt)], failures


def run_sensitivity_map(s, params, out, fmt):
    rows, failures = [], []
    for th in params["thetas"]:
        for p in sensitivity_sweep(th, params["betas"], s, params.get("ratio_step", 1e-3),
                                   params.get("workers", 1)):
            rows.append((p.theta, p.beta, p.ratio, p.slope, p.eta, p.eps_max, p.feasible,
                         p.singular, p.error))
            if p.error and not p.singular:
                failures.append(f"theta {p.theta!r} beta {p.beta!r}: {p.error}")
    cols = ("theta", "beta", "omega_alpha_over_gamma", "slope", "eta", "eps_max", "feasible",
            "singular", "error")
    return [_write_rows(out / "sensitivity_map", cols, rows, fmt)], failures


def run_ramsey(s, params, out, fmt):
    res = ramsey_phase(s, trials=params.get("trials", 1000))
    doc = {
        "delta_psi_true": res.delta_psi_true,
        "p_bright": res.p_bright,
        "estimator_std": res.estimator_std,
        "n_periods": res.n_periods,
        "discarded_time": res.discarded_time,
        "spin_count": s.spin_count,
        "seed": s.seed,
        "delta_psi_estimates": res.delta_psi_estimates,
    }
    return [_write_json(out / "ramsey", doc)], []


def run_check(s, params, out, fmt):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        warns = validate_scenario(s)
    doc = {"warnings": warns, "chi": s.chi, "ratio": s.ratio, "period": s.period}
    try:
        rep = epsilon_profile(s)
        doc.update(
            eps_max={f"{m}{n}": v for (m, n), v in rep.eps_max.items()},
            argmax_t_over_T={f"{m}{n}": v / rep.period for (m, n), v in rep.argmax_time.items()},
            feasible=rep.feasible,
            threshold=rep.threshold,
        )
        failures = []
    except NVBerryError as exc:
        doc["error"] = f"{type(exc).__name__}: {exc}"
        failures = [doc["error"]]
    return [_write_json(out / "check", doc)], failures


COMMANDS = {
    "eigencurves": run_eigencurves,
    "bloch": run_bloch,
    "phase-vs-ratio": run_phase_vs_ratio,
    "sensitivity-map": run_sensitivity_map,
    "ramsey": run_ramsey,
    "check": run_check,
}


# ---------------------------------------------------------------------------
# argument handling

def _add_common(p):
    p.add_argument("--config", type=Path, help="scenario JSON document (frequencies in Hz)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--steps", type=int, help="override steps_per_period")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--degrees", action="store_true", help="bare angles are degrees")
    p.add_argument("--workers", type=int, default=1, help="processes for sweep rows")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nvberry", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"nvberry {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eigencurves", help="branch-tracked eigenvalues over one period")
    _add_common(p)
    p.add_argument("--theta")
    p.add_argument("--beta")
    p.add_argument("--ratios", default="critical",
                   help="omega'_alpha/omega_gamma list or a:b:n; 'critical' and 'k*critical' allowed")
    p.add_argument("--stride", type=int, default=20, help="write every n-th sample")

    p = sub.add_parser("bloch", help="pseudo-spin trajectory of branch 1 or 2")
    _add_common(p)
    p.add_argument("--theta")
    p.add_argument("--beta")
    p.add_argument("--ratio", help="drive ratio; default keeps the configured omega_alpha")
    p.add_argument("--branch", type=int, choices=(1, 2), default=1)
    p.add_argument("--stride", type=int, default=20)

    p = sub.add_parser("phase-vs-ratio", help="geometric phase shift across a ratio grid")
    _add_common(p)
    p.add_argument("--theta")
    p.add_argument("--beta")
    p.add_argument("--ratios", default="0:2*critical:41")

    p = sub.add_parser("sensitivity-map", help="eta over (theta, beta) at the critical drive")
    _add_common(p)
    p.add_argument("--thetas", required=True)
    p.add_argument("--betas", required=True)
    p.add_argument("--ratio-step", type=float, default=1e-3)

    p = sub.add_parser("ramsey", help="Ramsey phase and shot-noise Monte Carlo")
    _add_common(p)
    p.add_argument("--trials", type=int, default=1000)

    p = sub.add_parser("check", help="adiabaticity report and scenario warnings")
    _add_common(p)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1)
    return ap


def load_scenario(args) -> ScenarioConfig:
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InvalidConfig(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise InvalidConfig("config must be a JSON object")
        s = scenario_from_dict(doc, degrees=args.degrees)
    else:
        s = default_scenario("nv14n")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.steps is not None:
        changes["steps_per_period"] = args.steps
    return s.replace(**changes) if changes else s


def resolve_params(args, s: ScenarioConfig) -> dict:
    """Turn command-line text into explicit numbers stored in the manifest."""
    deg = args.degrees
    params: dict = {}
    for name in ("theta", "beta"):
        v = getattr(args, name, None)
        if v is not None:
            params[name] = parse_angle(v, deg)
    th = params.get("theta", s.rotation.theta)
    be = params.get("beta", s.rotation.beta)
    try:
        crit = critical_ratio(th, be)
    except NVBerryError:
        crit = None
    ratio_item = lambda t: _parse_ratio_token(t, crit)  # noqa: E731
    angle_item = lambda t: parse_angle(t, deg)  # noqa: E731
    cmd = args.command
    if cmd in ("eigencurves", "phase-vs-ratio"):
        params["ratios"] = parse_grid(args.ratios, ratio_item)
        if not params["ratios"]:
            raise InvalidConfig("empty ratio grid")
    if cmd == "bloch":
        params["branch"] = args.branch
        if args.ratio is not None:
            params["ratio"] = ratio_item(args.ratio)
    if cmd in ("eigencurves", "bloch"):
        if args.stride < 1:
            raise InvalidConfig("stride must be >= 1")
        params["stride"] = args.stride
    if cmd == "sensitivity-map":
        params["thetas"] = parse_grid(args.thetas, angle_item)
        params["betas"] = parse_grid(args.betas, angle_item)
        params["ratio_step"] = args.ratio_step
    if cmd == "ramsey":
        params["trials"] = args.trials
    return params


def execute(command: str, s: ScenarioConfig, params: dict, out: Path, fmt: str, workers: int = 1):
    out.mkdir(parents=True, exist_ok=True)
    run_params = dict(params, workers=workers)
    files, failures = COMMANDS[command](s, run_params, out, fmt)
    manifest = {
        "command": command,
        "version": __version__,
        "format": fmt,
        "seed": s.seed,
        "config": s.to_dict(),
        "params": params,
        "outputs": {f.name: _sha256(f) for f in files},
        "failures": failures,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def replay(path: Path, out: Path, workers: int = 1):
    try:
        m = json.loads(Path(path).read_text())
        cmd = m["command"]
        s = scenario_from_dict(m["config"])
        params, fmt = m["params"], m["format"]
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"unreadable manifest: {exc}") from None
    if cmd not in COMMANDS:
        raise InvalidConfig(f"manifest names unknown command {cmd!r}")
    new = execute(cmd, s, params, out, fmt, workers)
    mismatched = sorted(
        k for k in set(m["outputs"]) | set(new["outputs"])
        if m["outputs"].get(k) != new["outputs"].get(k)
    )
    return new, mismatched


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "replay":
            _, bad = replay(args.manifest, args.out, args.workers)
            if bad:
                print(f"replay mismatch in: {', '.join(bad)}", file=sys.stderr)
                return 2
            print(f"replay reproduced {args.manifest} byte-identically")
            return 0
        s = load_scenario(args)
        params = resolve_params(args, s)
        manifest = execute(args.command, s, params, args.out, args.format, args.workers)
    except UsageError as exc:
        print(f"nvberry: usage error: {exc}", file=sys.stderr)
        return 1
    except InvalidConfig as exc:
        print(f"nvberry: configuration error: {exc}", file=sys.stderr)
        return 1
    except NVBerryError as exc:
        print(f"nvberry: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for line in manifest["failures"]:
        print(f"nvberry: row failed: {line}", file=sys.stderr)
    for name in manifest["outputs"]:
        print(args.out / name)
    return 2 if manifest["failures"] else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
