"""Command-line front end.

Four batch subcommands: ``analyze`` (plant characteristics), ``bound``
(evaluate a floor), ``verify`` (simulate a loop and certify it against the
floors), and ``szego`` (entropy rate from a power spectrum). Reports are
JSON on stdout, optionally mirrored to files under ``--out`` together with
CSV tables. Exit codes: 0 success, 2 input or validation error, 3 a
certification came back unsatisfied, 4 the simulated loop is unstable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    error_bound_generic,
    error_bound_lti,
    error_bound_p2,
    error_bound_pinf,
    error_bound_spectral,
    output_bound,
)
from .controllers import parse_controller
from .disturbance import (
    SpectralDensity,
    entropy_summary,
    load_disturbance,
    szego_entropy_rate,
    szego_log_integral,
)
from .errors import (
    CertificationRefusedError,
    FundlimError,
    UnstableLoopError,
)
from .plant import AnalysisWarning, analyze_plant, load_plant
from .simulation import SimulationConfig, run_closed_loop, verify_bound

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNSATISFIED = 3
EXIT_UNSTABLE = 4

_THEOREMS = ("T1", "T2", "T3", "C2", "C3", "C4", "KS")


def _parse_p_list(text: str) -> tuple:
    orders = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token.lower() in ("inf", "infinity"):
            orders.append(math.inf)
            continue
        try:
            orders.append(float(token))
        except ValueError:
            raise FundlimError(f"bad norm order {token!r} in --p") from None
    if not orders:
        raise FundlimError("--p must name at least one norm order")
    return tuple(orders)


def _p_tag(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def _manifest(command: str, inputs: dict, parameters: dict) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "parameters": parameters,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _emit(payload: dict, out_dir, filename: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(text + "\n", encoding="utf-8")


def _write_csv(out_dir, filename: str, header: list, rows) -> None:
    if out_dir is None:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / filename, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _captured_analysis(model):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        chars = analyze_plant(model)
    notes = [str(w.message) for w in caught if issubclass(w.category, AnalysisWarning)]
    return chars, notes


def cmd_analyze(args) -> int:
    model = load_plant(args.plant)
    chars, notes = _captured_analysis(model)
    payload = chars.to_dict()
    payload["warnings"] = notes
    payload["manifest"] = _manifest(
        "analyze", {"plant": str(args.plant)}, {}
    )
    _emit(payload, args.out, "analyze_report.json")
    return EXIT_OK


def cmd_bound(args) -> int:
    dist = load_disturbance(args.dist)
    theorem = args.theorem
    if theorem is None:
        theorem = "T3" if args.plant is None else "T1"
    if theorem not in _THEOREMS:
        raise FundlimError(f"unknown theorem {theorem!r}")
    needs_plant = theorem != "T3"
    if needs_plant and args.plant is None:
        raise FundlimError(f"theorem {theorem} needs --plant (only T3 is plant-free)")

    chars = None
    notes: list = []
    if args.plant is not None:
        model = load_plant(args.plant)
        chars, notes = _captured_analysis(model)
    ent = entropy_summary(dist)

    if theorem == "C2":
        p_list = (2.0,)
    elif theorem == "C3":
        p_list = (math.inf,)
    elif theorem == "KS":
        p_list = (2.0,)
    else:
        p_list = _parse_p_list(args.p)

    reports = []
    for p in p_list:
        if theorem == "T1":
            reports.append(error_bound_lti(p, chars, ent))
        elif theorem == "T2":
            reports.append(output_bound(p, chars, ent))
        elif theorem == "T3":
            reports.append(error_bound_generic(p, ent))
        elif theorem == "C2":
            reports.append(error_bound_p2(chars, ent))
        elif theorem == "C3":
            reports.append(error_bound_pinf(chars, ent))
        else:  # C4, KS: the spectral route
            spectrum = dist.power_spectrum(args.grid)
            reports.append(
                error_bound_spectral(p, chars, spectrum, dist.negentropy_rate())
            )

    payload = {
        "reports": [report.to_dict() for report in reports],
        "warnings": notes,
        "manifest": _manifest(
            "bound",
            {"plant": None if args.plant is None else str(args.plant), "dist": str(args.dist)},
            {
                "theorem": theorem,
                "p": [_p_tag(p) for p in p_list],
                "grid": args.grid,
            },
        ),
    }
    _emit(payload, args.out, "bound_report.json")
    return EXIT_OK


def _resolve_sim_config(args) -> SimulationConfig:
    file_cfg = {}
    if args.sim_config is not None:
        with open(args.sim_config, "r", encoding="utf-8") as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FundlimError(f"simulation config is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise FundlimError("simulation config file must hold a JSON object")

    def pick(flag_value, key, fallback):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, fallback)

    p_raw = pick(args.p, "p_list", "2")
    if isinstance(p_raw, str):
        p_list = _parse_p_list(p_raw)
    else:
        p_list = tuple(math.inf if str(tok).lower() == "inf" else float(tok) for tok in p_raw)

    return SimulationConfig(
        horizon=int(pick(args.horizon, "horizon", 200)),
        trajectories=int(pick(args.traj, "trajectories", 10000)),
        seed=int(pick(args.seed, "seed", 0)),
        p_list=p_list,
        burn_in=pick(args.burn_in, "burn_in", None),
        tail_window=pick(args.tail_window, "tail_window", None),
        divergence_threshold=float(
            pick(args.divergence_threshold, "divergence_threshold", 1e12)
        ),
        x0_std=float(pick(args.x0_std, "x0_std", 0.0)),
    )


def cmd_verify(args) -> int:
    model = load_plant(args.plant)
    dist = load_disturbance(args.dist)
    controller = parse_controller(args.controller)
    cfg = _resolve_sim_config(args)
    chars, notes = _captured_analysis(model)
    ent = entropy_summary(dist)

    manifest = _manifest(
        "verify",
        {"plant": str(args.plant), "dist": str(args.dist)},
        {
            "controller": args.controller,
            "which": args.which,
            "resamples": args.resamples,
            "sim": cfg.to_dict(),
        },
    )

    try:
        result = run_closed_loop(model, controller, dist, cfg)
    except UnstableLoopError as exc:
        payload = {
            "stable": False,
            "error": str(exc),
            "results": [],
            "warnings": notes,
            "manifest": manifest,
        }
        _emit(payload, args.out, "verify_report.json")
        return EXIT_UNSTABLE

    results = []
    exit_code = EXIT_OK
    if result.stable:
        for p in cfg.p_list:
            if args.which == "output":
                report = output_bound(p, chars, ent)
            else:
                report = error_bound_lti(p, chars, ent)
            cert = verify_bound(result, report, which=args.which, resamples=args.resamples)
            row = cert.to_dict()
            row["factors"] = report.to_dict()["factors"]
            results.append(row)
        if any(not row["satisfied"] for row in results):
            exit_code = EXIT_UNSATISFIED
    else:
        exit_code = EXIT_UNSTABLE

    payload = {
        "stable": bool(result.stable),
        "diverged": int(result.diverged),
        "which": args.which,
        "results": results,
        "warnings": notes,
        "manifest": manifest,
    }
    _emit(payload, args.out, "verify_report.json")

    if args.out is not None:
        header = ["k"]
        for p in cfg.p_list:
            header += [f"e_p{_p_tag(p)}", f"y_p{_p_tag(p)}"]
        rows = []
        for k in range(cfg.horizon):
            row = [k]
            for p in cfg.p_list:
                row += [repr(float(result.error_norms[p][k])),
                        repr(float(result.output_norms[p][k]))]
            rows.append(row)
        _write_csv(args.out, "verify_norms.csv", header, rows)
    return exit_code


def _spectrum_from_csv(path) -> SpectralDensity:
    omegas, values = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                w, s = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                continue  # header or stray line
            omegas.append(w)
            values.append(s)
    if len(omegas) < 16:
        raise FundlimError(f"spectrum CSV {path} holds fewer than 16 numeric rows")
    return SpectralDensity.from_samples(np.asarray(omegas), np.asarray(values))


def cmd_szego(args) -> int:
    if (args.dist is None) == (args.spectrum_csv is None):
        raise FundlimError("szego needs exactly one of --dist or --spectrum-csv")
    if args.dist is not None:
        dist = load_disturbance(args.dist)
        spectrum = dist.power_spectrum(args.grid)
        negentropy = dist.negentropy_rate()
        inputs = {"dist": str(args.dist)}
    else:
        spectrum = _spectrum_from_csv(args.spectrum_csv)
        negentropy = 0.0  # Gaussian assumption for bare spectra
        inputs = {"spectrum_csv": str(args.spectrum_csv)}

    log_integral = szego_log_integral(spectrum)
    rate = szego_entropy_rate(spectrum, negentropy)
    payload = {
        "szego_log_integral_bits": log_integral,
        "entropy_rate_bits": rate,
        "negentropy_bits": negentropy,
        "grid_points": int(spectrum.grid.size),
        "manifest": _manifest("szego", inputs, {"grid": args.grid}),
    }
    _emit(payload, args.out, "szego_report.json")
    _write_csv(
        args.out,
        "spectrum.csv",
        ["omega", "S"],
        ((repr(float(w)), repr(float(s))) for w, s in zip(spectrum.grid, spectrum.values)),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundlim",
        description="Information-theoretic performance floors for feedback loops "
        "and their Monte Carlo certification.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="plant poles, zeros, relative degree")
    analyze.add_argument("--plant", required=True, help="plant JSON file (fields A, B, C)")
    analyze.add_argument("--out", default=None, help="directory for report files")
    analyze.set_defaults(handler=cmd_analyze)

    bound = sub.add_parser("bound", help="evaluate a performance floor")
    bound.add_argument("--dist", required=True, help="disturbance JSON file")
    bound.add_argument("--plant", default=None, help="plant JSON file (omit for the plant-free floor)")
    bound.add_argument("--theorem", default=None, choices=_THEOREMS,
                       help="bound route (default: T1 with a plant, T3 without)")
    bound.add_argument("--p", default="2", help="comma list of norm orders, e.g. 2,inf")
    bound.add_argument("--grid", type=int, default=4096, help="spectrum grid size for C4/KS")
    bound.add_argument("--out", default=None)
    bound.set_defaults(handler=cmd_bound)

    verify = sub.add_parser("verify", help="simulate a loop and certify it against the floors")
    verify.add_argument("--plant", required=True)
    verify.add_argument("--dist", required=True)
    verify.add_argument("--controller", default="zero",
                        help="'zero' | 'gain:<c>' | 'arma:<b0,...;a1,...>'")
    verify.add_argument("--which", default="error", choices=("error", "output"),
                        help="certify the error signal (T1) or the measurement (T2)")
    verify.add_argument("--horizon", type=int, default=None)
    verify.add_argument("--traj", type=int, default=None)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--p", default=None, help="comma list of norm orders")
    verify.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    verify.add_argument("--tail-window", dest="tail_window", type=int, default=None)
    verify.add_argument("--divergence-threshold", dest="divergence_threshold",
                        type=float, default=None)
    verify.add_argument("--x0-std", dest="x0_std", type=float, default=None)
    verify.add_argument("--resamples", type=int, default=200,
                        help="bootstrap resamples for the certification margin")
    verify.add_argument("--sim-config", dest="sim_config", default=None,
                        help="JSON file with simulation settings (flags win)")
    verify.add_argument("--out", default=None)
    verify.set_defaults(handler=cmd_verify)

    szego = sub.add_parser("szego", help="entropy rate from a power spectrum")
    szego.add_argument("--dist", default=None, help="disturbance JSON file")
    szego.add_argument("--spectrum-csv", dest="spectrum_csv", default=None,
                       help="CSV of omega,S rows covering one period")
    szego.add_argument("--grid", type=int, default=4096)
    szego.add_argument("--out", default=None)
    szego.set_defaults(handler=cmd_szego)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (CertificationRefusedError, UnstableLoopError) as exc:
        print(f"fundlim: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except FundlimError as exc:
        print(f"fundlim: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"fundlim: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
