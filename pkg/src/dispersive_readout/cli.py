"""Command-line front end.

Every command writes either one JSON document carrying a versioned
``schema`` field, or CSV with a header row. Exit codes: 0 ok, 2 usage,
3 domain error, 4 numerical failure.
"""

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import DomainError, NumericalFailure, ReadoutError
from .figures import FIGURES
from .fidelity_opt import fidelity_joint_optimum, fidelity_jump_times, fidelity_optimal_detuning
from .montecarlo import simulate_sequential
from .physical import (
    PLATFORMS,
    PhysicalSetup,
    check_regime,
    estimate_measurement_time,
    table_setup,
    to_dimensionless,
    with_time,
)
from .pool import default_jobs, parallel_map
from .snr import (
    large_x_validity,
    snr1,
    snr_detuning_large_x_approx,
    snr_global_optimum,
    snr_optimal_detuning,
)
from .statistics import (
    DimensionlessDeltaK,
    DimensionlessDX,
    evaluate_point,
    fidelity,
    mean_counts_deltak,
    mean_counts_dx,
)

SCHEMA = "dispersive-readout/1"
TWO_PI = 2.0 * math.pi
FREQ_FIELDS = ("g", "omega_q", "omega_r", "omega_d", "kappa_1", "kappa_2")
DX_KEYS = {"D": "D", "X": "X", "tau": "tau", "tau_m": "tau"}
DK_KEYS = {"Delta": "Delta", "K": "K", "Tm": "Tm", "T_m": "Tm"}
EXIT_USAGE = 2
Z_AGREE = 4.0


class UsageError(Exception):
    exit_code = EXIT_USAGE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------- parsing


def _kv_pairs(tokens, aliases, flag):
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key not in aliases:
            allowed = ", ".join(sorted(set(aliases.values())))
            raise UsageError(f"{flag}: expected KEY=VALUE with KEY in {{{allowed}}}, got {tok!r}")
        name = aliases[key]
        if name in out:
            raise UsageError(f"{flag}: {name} given twice")
        out[name] = val
    return out


def _number(text, what):
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"{what}: not a number: {text!r}") from None


def parse_values(text, what="value"):
    """Expand ``a:b:n`` (linear), ``a:b:n:log`` (geometric), ``x,y,z`` or a
    single number into a list of floats."""
    if ":" in text:
        parts = text.split(":")
        log = len(parts) == 4 and parts[3] == "log"
        if len(parts) not in (3, 4) or (len(parts) == 4 and not log):
            raise UsageError(f"{what}: range must be a:b:n or a:b:n:log, got {text!r}")
        a, b = _number(parts[0], what), _number(parts[1], what)
        try:
            n = int(parts[2])
        except ValueError:
            raise UsageError(f"{what}: point count must be an integer, got {parts[2]!r}") from None
        if n < 1:
            raise UsageError(f"{what}: point count must be >= 1")
        if log:
            if a <= 0 or b <= 0:
                raise UsageError(f"{what}: log range needs positive ends")
            return [float(v) for v in np.geomspace(a, b, n)]
        return [float(v) for v in np.linspace(a, b, n)]
    return [_number(t, what) for t in text.split(",") if t.strip()]


def _require(values, keys, flag):
    missing = [k for k in keys if k not in values]
    if missing:
        raise UsageError(f"{flag}: missing {', '.join(missing)}")


def _read_ini(path):
    cp = configparser.ConfigParser()
    cp.optionxform = str  # field names are case sensitive
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path!r}: {exc}") from None
    return cp


def load_physical(path, units):
    """Read a ``[physical]`` section whose keys are PhysicalSetup fields."""
    cp = _read_ini(path)
    if not cp.has_section("physical"):
        raise UsageError(f"config {path!r} has no [physical] section")
    sec = dict(cp.items("physical"))
    names = PhysicalSetup.field_names()
    unknown = sorted(set(sec) - set(names))
    if unknown:
        raise UsageError(f"unknown [physical] keys: {', '.join(unknown)}")
    optional = {"t_m", "n_bins"}
    _require(sec, [n for n in names if n not in optional], "[physical]")
    vals = {}
    for name, text in sec.items():
        if name == "t_m" and text.strip().lower() in ("", "none"):
            vals[name] = None
        elif name == "n_bins":
            try:
                vals[name] = int(text)
            except ValueError:
                raise UsageError(f"n_bins must be an integer, got {text!r}") from None
        else:
            vals[name] = _number(text, name)
    if units == "cyclic":
        for name in FREQ_FIELDS:
            vals[name] *= TWO_PI
    return PhysicalSetup(**vals)


def _run_defaults(path):
    """Flag defaults from an optional ``[run]`` section."""
    if path is None:
        return {}
    cp = _read_ini(path)
    if not cp.has_section("run"):
        return {}
    out = {}
    for key, val in cp.items("run"):
        key = key.replace("-", "_")
        if key == "asymmetric":
            out[key] = cp.getboolean("run", key)
        elif key in ("seed", "trials", "jobs"):
            out[key] = int(val)
        else:
            out[key] = val
    return out


# ----------------------------------------------------------------- output


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest string that round-trips
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_jsonable(v))
    return str(v)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def to_csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _records_csv(records):
    flat = [_flatten(r) for r in records]
    cols = []
    for r in flat:
        cols.extend(k for k in r if k not in cols)
    return to_csv(cols, [[r.get(c) for c in cols] for r in flat])


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def emit(command, result, fmt, out):
    """Write a single result (dict) or a record list (``{"rows": [...]}``)."""
    if fmt == "json":
        doc = {"schema": SCHEMA, "command": command, "result": _jsonable(result)}
        _write(json.dumps(doc, indent=2) + "\n", out)
    else:
        records = result["rows"] if "rows" in result else [result]
        _write(_records_csv(records), out)


def error_doc(exc, kind, code):
    err = {"type": kind, "exit_code": code, "message": str(exc)}
    bracket = getattr(exc, "bracket", None)
    if bracket is not None:
        err["bracket"] = _jsonable(list(bracket))
    return {"schema": SCHEMA, "error": err}


# ----------------------------------------------------------------- points


def _single_point(args):
    """Resolve exactly one parametrization into a dict of pieces."""
    chosen = [n for n in ("dx", "deltak", "physical") if getattr(args, n, None)]
    if len(chosen) != 1:
        raise UsageError("give exactly one of --dx, --deltak, --physical")
    kind = chosen[0]
    if kind == "dx":
        v = _kv_pairs(args.dx, DX_KEYS, "--dx")
        _require(v, ("D", "X", "tau"), "--dx")
        p = DimensionlessDX(_number(v["D"], "D"), _number(v["X"], "X"), _number(v["tau"], "tau"))
        return {"kind": kind, "dx": p, "mc": mean_counts_dx(p), "inputs": {"D": p.D, "X": p.X, "tau": p.tau_m}}
    if kind == "deltak":
        v = _kv_pairs(args.deltak, DK_KEYS, "--deltak")
        _require(v, ("Delta", "K", "Tm"), "--deltak")
        p = DimensionlessDeltaK(_number(v["Delta"], "Delta"), _number(v["K"], "K"), _number(v["Tm"], "Tm"))
        return {"kind": kind, "deltak": p, "mc": mean_counts_deltak(p),
                "inputs": {"Delta": p.Delta, "K": p.K, "Tm": p.T_m}}
    setup = load_physical(args.physical, args.units)
    if setup.t_m is None:
        raise UsageError("[physical] needs t_m for this command")
    dim = to_dimensionless(setup)
    mc = mean_counts_dx(dim.dx)
    return {
        "kind": kind,
        "setup": setup,
        "dim": dim,
        "dx": dim.dx,
        "mc": mc,
        "inputs": {"D": dim.dx.D, "X": dim.dx.X, "tau": dim.dx.tau_m},
    }


def _physical_extras(pt):
    dim = pt["dim"]
    return {
        "dimensionless": {
            "D": dim.dx.D, "X": dim.dx.X, "tau_m": dim.dx.tau_m,
            "Delta": dim.deltak.Delta, "K": dim.deltak.K, "T_m": dim.deltak.T_m,
            "degenerate": dim.degenerate, "states_swapped": dim.states_swapped,
            "port_factor": dim.port_factor,
        },
        "regime": check_regime(pt["setup"]).as_dict(),
    }


# ----------------------------------------------------------------- commands


def cmd_stats(args):
    pt = _single_point(args)
    res = {"parametrization": pt["kind"], "inputs": pt["inputs"]}
    res.update(evaluate_point(pt["mc"]).as_dict())
    if pt["kind"] == "physical":
        res.update(_physical_extras(pt))
    return res


def cmd_optimize_snr(args):
    given = [n for n in ("X", "dx", "deltak") if getattr(args, n, None) is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --X, --dx X=..., --deltak K=...")
    if args.X is not None:
        X = args.X
    elif args.dx:
        v = _kv_pairs(args.dx, DX_KEYS, "--dx")
        _require(v, ("X",), "--dx")
        X = _number(v["X"], "X")
    else:
        v = _kv_pairs(args.deltak, DK_KEYS, "--deltak")
        _require(v, ("K",), "--deltak")
        k = _number(v["K"], "K")
        if not k > 0:
            raise DomainError(f"K must be > 0, got {k!r}")
        X = 1.0 / k
    opt = snr_optimal_detuning(X, rel_tol=args.rel_tol)
    naive = snr1(X, X)
    delta, k, c = snr_global_optimum(args.asymmetric)
    v_ratio, xi_sq = large_x_validity(X)
    return {
        "X": opt.X,
        "d_opt": opt.d_opt,
        "d_opt_minus_X": opt.d_opt - opt.X,
        "snr1": opt.snr1,
        "snr1_naive": naive,
        "snr1_gain": opt.snr1 / naive - 1.0,
        "bracket": list(opt.bracket),
        "method": opt.method,
        "approx": {
            "xi": snr_detuning_large_x_approx(X, "xi"),
            "simple": snr_detuning_large_x_approx(X, "simple"),
            "validity_ratio": v_ratio,
            "xi_squared": xi_sq,
        },
        "global": {"Delta": delta, "K": k, "c": c, "asymmetric": bool(args.asymmetric)},
    }


def cmd_optimize_fidelity(args):
    chosen = [n for n in ("dx", "deltak", "physical") if getattr(args, n, None)]
    if len(chosen) != 1:
        raise UsageError("give exactly one of --dx, --deltak, --physical")
    if chosen[0] == "deltak":
        v = _kv_pairs(args.deltak, DK_KEYS, "--deltak")
        _require(v, ("Tm",), "--deltak")
        opt = fidelity_joint_optimum(_number(v["Tm"], "Tm"), asymmetric=args.asymmetric)
        return opt.as_dict()
    if chosen[0] == "dx":
        v = _kv_pairs(args.dx, DX_KEYS, "--dx")
        _require(v, ("X", "tau"), "--dx")
        X, tau = _number(v["X"], "X"), _number(v["tau"], "tau")
    else:
        pt = _single_point(args)
        X, tau = pt["dx"].X, pt["dx"].tau_m
    opt = fidelity_optimal_detuning(X, tau)
    res = opt.as_dict()
    if args.jumps:
        lo, sep, hi = args.jumps.partition(":")
        if not sep:
            raise UsageError("--jumps expects LO:HI")
        jumps = fidelity_jump_times(X, (_number(lo, "--jumps"), _number(hi, "--jumps")))
        res["jump_times"] = [j.as_dict() for j in jumps]
    return res


def _estimate_rows(setup, name, units, targets, asymmetric, published=None):
    rows = []
    for target in targets:
        est = estimate_measurement_time(setup, target, asymmetric=asymmetric)
        regime = check_regime(with_time(setup, est.t_m))
        row = {
            "name": name,
            "units": units,
            "asymmetric": asymmetric,
            "target_fidelity": target,
            "t_m": est.t_m,
            "T_m": est.T_m,
            "Delta": est.optimum.delta_opt,
            "K": est.optimum.k_opt,
            "fidelity": est.optimum.fidelity,
            "n_th": est.optimum.n_th,
            "omega_dr": est.omega_dr,
            "kappa": est.kappa,
            "regime_ok": regime.ok,
            "verdicts": regime.verdicts,
        }
        if published is not None:
            ref = published.get(target)
            row["published_t_m"] = ref
            row["ratio_to_published"] = None if ref is None else est.t_m / ref
        rows.append(row)
    return rows


def cmd_estimate(args):
    targets = parse_values(args.target_fidelity, "--target-fidelity")
    if bool(args.physical) == bool(args.table):
        raise UsageError("give exactly one of --physical or --table")
    if args.physical:
        setup = load_physical(args.physical, args.units)
        name = os.path.splitext(os.path.basename(args.physical))[0]
        return {"rows": _estimate_rows(setup, name, args.units, targets, args.asymmetric)}
    names = [r.name for r in PLATFORMS]
    if args.table != "all" and args.table not in names:
        raise UsageError(f"--table must be one of {', '.join(names)} or all")
    rows = []
    for r in PLATFORMS:
        if args.table in ("all", r.name):
            setup = table_setup(r, units=args.units)
            published = {0.95: r.t95, 0.99: r.t99}
            rows.extend(_estimate_rows(setup, r.name, args.units, targets, args.asymmetric, published))
    return {"rows": rows}


SWEEP_OUTPUTS = ["n_up", "n_down", "snr", "n_th", "n_th_cont", "fidelity", "fidelity_on_off",
                 "fidelity_gaussian", "fidelity_gaussian_snr", "status"]


def sweep_point(task):
    """Evaluate one sweep row; ``task`` is ``(kind, a, b, c)``."""
    kind, a, b, c = task
    if kind == "dx":
        mc = mean_counts_dx(DimensionlessDX(a, b, c))
    else:
        mc = mean_counts_deltak(DimensionlessDeltaK(a, b, c))
    s = evaluate_point(mc).as_dict()
    return [a, b, c] + [s[k] for k in SWEEP_OUTPUTS]


def cmd_sweep(args):
    if bool(args.dx) == bool(args.deltak):
        raise UsageError("sweep needs exactly one of --dx, --deltak")
    if args.dx:
        kind, keys, aliases = "dx", ("D", "X", "tau"), DX_KEYS
    else:
        kind, keys, aliases = "deltak", ("Delta", "K", "Tm"), DK_KEYS
    v = _kv_pairs(getattr(args, kind), aliases, f"--{kind}")
    _require(v, keys, f"--{kind}")
    axes = [parse_values(v[k], k) for k in keys]
    tasks = [(kind,) + combo for combo in itertools.product(*axes)]
    rows = parallel_map(sweep_point, tasks, args.jobs)
    columns = list(keys) + SWEEP_OUTPUTS
    return columns, rows


def cmd_mc_check(args):
    pt = _single_point(args)
    mc = pt["mc"]
    n_bins = args.bins
    if n_bins is None:
        n_bins = pt["setup"].n_bins if pt["kind"] == "physical" else 1
    if n_bins < 1:
        raise DomainError("--bins must be >= 1")
    per_bin = mc.scaled(1.0 / n_bins)
    res = simulate_sequential(per_bin, n_bins, args.trials, args.seed, jobs=args.jobs)
    analytic = fidelity(mc)
    z = 0.0 if res.std_error == 0 else (res.empirical_fidelity - analytic) / res.std_error
    out = {"inputs": pt["inputs"], "n_up": mc.n_up, "n_down": mc.n_down, "analytic_fidelity": analytic}
    out.update(res.as_dict())
    out["z_score"] = z
    out["verdict"] = "agree" if abs(z) <= Z_AGREE else "disagree"
    return out


def cmd_figures(args):
    which = list(FIGURES) if args.which == "all" else [args.which]
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in which:
        func = FIGURES[name]
        tables = func(jobs=args.jobs) if name in ("fig3", "fig5") else func()
        if args.format == "json":
            path = os.path.join(out_dir, f"{name}.json")
            doc = {"schema": SCHEMA, "command": "figures", "figure": name,
                   "tables": {k: {"columns": t.columns, "rows": _jsonable(t.rows)} for k, t in tables.items()}}
            _write(json.dumps(doc) + "\n", path)
            written.append(path)
        else:
            for tname, t in tables.items():
                path = os.path.join(out_dir, f"{tname}.csv")
                _write(to_csv(t.columns, t.rows), path)
                written.append(path)
    return {"files": written}


# ----------------------------------------------------------------- parser


def build_parser():
    p = _Parser(prog="dispersive-readout", description="Photon-counting qubit readout calculator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", help="output file ('-' for stdout); a directory for figures")
    common.add_argument("--jobs", type=int, default=None, help="worker count (default: all CPUs)")
    common.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    common.add_argument("--config", help="INI file whose [run] section supplies flag defaults")
    common.add_argument("--units", choices=("angular", "cyclic"), default=None)

    def point_flags(sp, physical=True):
        sp.add_argument("--dx", nargs="+", metavar="KEY=VAL", help="D= X= tau=")
        sp.add_argument("--deltak", nargs="+", metavar="KEY=VAL", help="Delta= K= Tm=")
        if physical:
            sp.add_argument("--physical", metavar="FILE", help="INI file with a [physical] section")

    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sp = sub.add_parser("stats", parents=[common], help="statistics at one operating point")
    point_flags(sp)

    sp = sub.add_parser("optimize-snr", parents=[common], help="SNR-optimal detuning")
    sp.add_argument("--X", type=float, default=None)
    point_flags(sp, physical=False)
    sp.add_argument("--asymmetric", action="store_true", default=None)
    sp.add_argument("--rel-tol", type=float, default=1e-12)

    sp = sub.add_parser("optimize-fidelity", parents=[common], help="fidelity-optimal operating point")
    point_flags(sp)
    sp.add_argument("--asymmetric", action="store_true", default=None)
    sp.add_argument("--jumps", metavar="LO:HI", help="also locate threshold jumps in tau_m")

    sp = sub.add_parser("estimate", parents=[common], help="measurement time for a target fidelity")
    sp.add_argument("--physical", metavar="FILE")
    sp.add_argument("--table", metavar="NAME", help="built-in platform row, or 'all'")
    sp.add_argument("--target-fidelity", default=None, help="value or comma list (default 0.95,0.99)")
    sp.add_argument("--asymmetric", action="store_true", default=None)

    sp = sub.add_parser("sweep", parents=[common], help="grid of operating points")
    point_flags(sp, physical=False)

    sp = sub.add_parser("mc-check", parents=[common], help="Monte Carlo check of the analytic fidelity")
    point_flags(sp)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--bins", type=int, default=None)

    sp = sub.add_parser("figures", parents=[common], help="emit figure data")
    sp.add_argument("--which", choices=list(FIGURES) + ["all"], default="all")
    return p


DEFAULTS = {
    "units": "angular",
    "asymmetric": False,
    "target_fidelity": "0.95,0.99",
    "trials": 1_000_000,
    "seed": 0,
}


def _apply_defaults(args):
    # precedence: flag > [run] section (of --config, else --physical) > built-in
    cfg_path = args.config or getattr(args, "physical", None)
    try:
        file_vals = _run_defaults(cfg_path)
    except ValueError as exc:
        raise UsageError(f"bad [run] value: {exc}") from None
    for key in ("units", "asymmetric", "target_fidelity", "trials", "seed", "format", "jobs", "out"):
        if not hasattr(args, key) or getattr(args, key) is not None:
            continue
        if key in file_vals:
            setattr(args, key, file_vals[key])
        elif key in DEFAULTS:
            setattr(args, key, DEFAULTS[key])
    if args.units not in ("angular", "cyclic"):
        raise UsageError(f"units must be angular or cyclic, got {args.units!r}")
    if args.format is None:
        args.format = "csv" if args.command in ("sweep", "figures") else "json"
    if args.format not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {args.format!r}")
    if args.jobs is None:
        args.jobs = default_jobs()
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if getattr(args, "trials", None) is not None and args.trials < 1:
        raise UsageError("--trials must be >= 1")


COMMANDS = {
    "stats": cmd_stats,
    "optimize-snr": cmd_optimize_snr,
    "optimize-fidelity": cmd_optimize_fidelity,
    "estimate": cmd_estimate,
    "mc-check": cmd_mc_check,
    "figures": cmd_figures,
}


def run(argv=None):
    """Run one command and return its exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
        _apply_defaults(args)
        if args.command == "sweep":
            cols, rows = cmd_sweep(args)
            if args.format == "csv":
                _write(to_csv(cols, rows), args.out)
            else:
                emit("sweep", {"rows": [dict(zip(cols, r)) for r in rows]}, "json", args.out)
        elif args.command == "figures":
            emit("figures", cmd_figures(args), "json", None)
        else:
            emit(args.command, COMMANDS[args.command](args), args.format, args.out)
        return 0
    except UsageError as exc:
        return _fail(exc, "usage", EXIT_USAGE, json_errors)
    except NumericalFailure as exc:
        return _fail(exc, "numerical", exc.exit_code, json_errors)
    except DomainError as exc:
        return _fail(exc, "domain", exc.exit_code, json_errors)
    except ReadoutError as exc:
        return _fail(exc, "error", exc.exit_code, json_errors)


def _fail(exc, kind, code, json_errors):
    if json_errors:
        sys.stderr.write(json.dumps(error_doc(exc, kind, code)) + "\n")
    else:
        sys.stderr.write(f"dispersive-readout: {kind} error: {exc}\n")
    return code


def main(argv=None):
    sys.exit(run(argv))
