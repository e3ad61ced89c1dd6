"""Command-line front end: reproducible experiment runs with JSON/CSV
outputs (and optional rendered figures)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys

from . import approx_bounds, simulator, thresholds
from .channels import NoiseModelSpec, make_channel
from .errors import GroupTestError, ParameterError
from .simulator import EnsembleSpec, gen_matrix, load_matrix, save_matrix

SCHEMA_VERSION = 1

_RANDOMIZED = {"simulate", "sweep", "verify", "bound"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtbounds",
        description="Converse bounds and Monte Carlo simulation for noisy group testing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_seed):
        sp.add_argument("--config", help="JSON config file; flags override its entries")
        sp.add_argument("--output", help="output file (default: stdout)")
        if needs_seed:
            sp.add_argument("--seed", help="integer seed, or 'auto'")

    sp = sub.add_parser("threshold", help="strong and weak converse thresholds")
    common(sp, needs_seed=False)
    sp.add_argument("--channel", help="noiseless | symmetric:R | zchannel:R | dilution:Q")
    sp.add_argument("--p", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--c0", type=float)
    sp.add_argument("--numerator", choices=thresholds.NUMERATORS)
    sp.add_argument("--mixture-atoms", type=int, help="optimize a <=N-atom mixture (0 = skip)")
    sp.add_argument("--format", choices=("json", "csv"))
    sp.add_argument("--plot", help="render the per-ell breakdown to this image file")

    sp = sub.add_parser("bound", help="Chebyshev error lower bound for a matrix file")
    common(sp, needs_seed=True)
    sp.add_argument("--channel")
    sp.add_argument("--k", type=int)
    sp.add_argument("--matrix", help="matrix file in the 'p n' text format")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--delta1", type=float)
    sp.add_argument("--sampler", choices=("auto", "exhaustive", "mc"))
    sp.add_argument("--trials", type=int)

    sp = sub.add_parser("simulate", help="empirical error probability on one design")
    common(sp, needs_seed=True)
    sp.add_argument("--channel")
    sp.add_argument("--p", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--ensemble", help="iid:NU | ccw:W | profile:w@nu,...")
    sp.add_argument("--matrix", help="use this matrix file instead of an ensemble draw")
    sp.add_argument("--decoder", choices=("map", "infodensity"))
    sp.add_argument("--gamma", type=float, help="info-density decoder threshold")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--save-matrix", help="write the matrix used to this path")

    sp = sub.add_parser("sweep", help="error vs test count (phase transition)")
    common(sp, needs_seed=True)
    sp.add_argument("--channel")
    sp.add_argument("--p", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--n-grid", help="comma list '4,6,8' or range 'lo:hi:step'")
    sp.add_argument("--ensemble")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--fixed-matrix", action="store_true", default=None)
    sp.add_argument("--plot", help="render the phase-transition figure to this image file")

    sp = sub.add_parser("verify", help="run the approximation-bound test suites")
    common(sp, needs_seed=True)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--grid", choices=("full", "small"))
    return parser


_DEFAULTS = {
    "threshold": {"eta": 0.0, "c0": 1.0, "numerator": "ell_log", "mixture_atoms": 0,
                  "format": "json"},
    "bound": {"delta": 0.1, "sampler": "auto", "trials": 2000},
    "simulate": {"decoder": "map", "trials": 1000},
    "sweep": {"trials": 1000, "fixed_matrix": False},
    "verify": {"trials": 10000, "grid": "full"},
}


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and explicit flags (flags win)."""
    cfg = dict(_DEFAULTS.get(args.command, {}))
    cfg["command"] = args.command
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ParameterError("config file must hold a JSON object")
        cfg.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        cfg[key] = value
    return cfg


def _resolve_seed(cfg: dict) -> int:
    seed = cfg.get("seed")
    if seed is None:
        raise ParameterError(
            "this command is randomized: pass --seed N or --seed auto"
        )
    if isinstance(seed, str):
        if seed == "auto":
            seed = secrets.randbits(63)
            print(f"seed auto -> {seed}", file=sys.stderr)
        else:
            seed = int(seed)
    cfg["seed"] = seed
    return seed


def _require(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ParameterError(f"missing required option(s): {', '.join('--' + m for m in missing)}")


def _json_payload(cfg: dict, results: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "config": cfg, "results": results}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, output) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_n_grid(text: str) -> list[int]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ParameterError(f"bad n grid {text!r}")
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        return list(range(lo, hi + 1, step))
    return [int(x) for x in text.split(",")]


def cmd_threshold(cfg: dict) -> int:
    _require(cfg, "channel", "p", "k")
    spec = NoiseModelSpec.from_string(cfg["channel"])
    channel = make_channel(spec, cfg["k"])
    nu_star, istar = thresholds.i_star(channel)
    cap = thresholds.capacity_output_dist(channel)
    strong = thresholds.strong_converse_threshold(cfg["p"], cfg["k"], channel, cfg["eta"])
    weak = thresholds.weak_converse_threshold(
        cfg["p"], cfg["k"], channel, cfg["eta"], cfg["c0"], cfg["numerator"]
    )
    results = {
        "i_star": istar,
        "i_star_nu": nu_star,
        "capacity": cap.capacity,
        "capacity_minus_i_star": cap.capacity - istar,
        "q_star": list(cap.q_star.probs),
        "strong_threshold": strong,
        "weak_threshold": weak.to_json_dict(),
        "bits_per_nat": 1.0 / math.log(2.0),
    }
    if cfg["mixture_atoms"] > 0:
        mix = thresholds.optimize_mixture_threshold(
            cfg["p"], cfg["k"], channel, cfg["eta"], cfg["c0"],
            max_atoms=cfg["mixture_atoms"], numerator=cfg["numerator"],
        )
        results["mixture_threshold"] = mix.to_json_dict()
    if cfg.get("plot"):
        from .plotting import plot_threshold

        plot_threshold(weak, cfg["plot"])
    if cfg["format"] == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        for key in ("strong_threshold",):
            buf.write(f"# {key}={results[key]!r}\n")
        buf.write(f"# config={json.dumps(cfg, sort_keys=True)}\n")
        writer.writerow(thresholds.ThresholdResult.CSV_HEADER)
        writer.writerows(weak.to_csv_rows())
        _emit(buf.getvalue(), cfg.get("output"))
    else:
        _emit(_json_payload(cfg, results), cfg.get("output"))
    return 0


def cmd_bound(cfg: dict) -> int:
    _require(cfg, "channel", "k", "matrix")
    if cfg["sampler"] == "exhaustive":
        cfg["seed"] = cfg.get("seed") or 0
        if isinstance(cfg["seed"], str):
            _resolve_seed(cfg)
    else:
        _resolve_seed(cfg)
    channel = make_channel(NoiseModelSpec.from_string(cfg["channel"]), cfg["k"])
    matrix = load_matrix(cfg["matrix"])
    bound = thresholds.chebyshev_error_lower_bound(
        matrix,
        channel,
        cfg["k"],
        delta1=cfg.get("delta1"),
        delta=cfg["delta"],
        sampler=cfg["sampler"],
        trials=cfg["trials"],
        seed=cfg["seed"],
    )
    results = {
        "value": bound.value,
        "vacuous": bound.vacuous,
        "reason": bound.reason,
        "delta": bound.delta,
        "delta1": bound.delta1,
        "i_star": bound.i_star,
        "n_sets": bound.n_sets,
        "avg_variance": bound.avg_variance,
        "stderr": bound.stderr,
        "matrix_shape": [matrix.n, matrix.p],
    }
    _emit(_json_payload(cfg, results), cfg.get("output"))
    return 0


def _build_decoder(cfg: dict, channel):
    if cfg["decoder"] == "map":
        return simulator.map_decoder
    cap = thresholds.capacity_output_dist(channel)
    gamma = cfg.get("gamma")
    if gamma is None:
        raise ParameterError("--gamma is required for the info-density decoder")

    def decoder(matrix, y, k, ch):
        return simulator.info_density_decoder(matrix, y, k, ch, cap.q_star, gamma)

    return decoder


def cmd_simulate(cfg: dict) -> int:
    _require(cfg, "channel", "k", "trials")
    seed = _resolve_seed(cfg)
    channel = make_channel(NoiseModelSpec.from_string(cfg["channel"]), cfg["k"])
    if cfg.get("matrix"):
        matrix = load_matrix(cfg["matrix"])
        cfg["p"], cfg["n"] = matrix.p, matrix.n
    else:
        _require(cfg, "p", "k", "n", "ensemble")
        spec = EnsembleSpec.from_string(cfg["ensemble"], seed=seed)
        matrix = gen_matrix(spec, cfg["n"], cfg["p"], cfg["k"])
    if cfg.get("save_matrix"):
        save_matrix(matrix, cfg["save_matrix"])
    decoder = _build_decoder(cfg, channel)
    est = simulator.estimate_pe(matrix, channel, cfg["k"], decoder, cfg["trials"], seed)
    _emit(_json_payload(cfg, {"estimate": est.to_json_dict()}), cfg.get("output"))
    return 0


def cmd_sweep(cfg: dict) -> int:
    _require(cfg, "channel", "p", "k", "n_grid", "ensemble", "trials")
    seed = _resolve_seed(cfg)
    channel = make_channel(NoiseModelSpec.from_string(cfg["channel"]), cfg["k"])
    spec = EnsembleSpec.from_string(cfg["ensemble"], seed=seed)
    grid = _parse_n_grid(str(cfg["n_grid"]))
    result = simulator.sweep_n(
        spec, channel, cfg["p"], cfg["k"], grid, cfg["trials"], seed,
        fixed_matrix=cfg["fixed_matrix"],
    )
    strong = thresholds.strong_converse_threshold(cfg["p"], cfg["k"], channel, 0.0)
    weak = thresholds.weak_converse_threshold(cfg["p"], cfg["k"], channel, 0.0)
    buf = io.StringIO()
    buf.write(f"# config={json.dumps(cfg, sort_keys=True)}\n")
    buf.write(f"# strong_threshold={strong!r}\n")
    buf.write(f"# weak_threshold={weak.n_threshold!r}\n")
    crossing = simulator.crossing_n(result)
    buf.write(f"# crossing_pe_0.5={crossing!r}\n")
    writer = csv.writer(buf)
    writer.writerow(simulator.SweepResult.CSV_HEADER)
    writer.writerows(result.to_csv_rows())
    _emit(buf.getvalue(), cfg.get("output"))
    if cfg.get("plot"):
        from .plotting import plot_sweep

        plot_sweep(result, cfg["plot"],
                   {"strong converse": strong, "weak converse": weak.n_threshold})
    return 0


def cmd_verify(cfg: dict) -> int:
    seed = _resolve_seed(cfg)
    if cfg["grid"] == "full":
        reports = approx_bounds.run_tv_grid()
    else:
        reports = approx_bounds.run_tv_grid(ps=(50,), ks=range(2, 6))
    tv_violations = [r.to_json_dict() for r in reports if not r.satisfied]
    mi_report = approx_bounds.verify_mi_continuity(cfg["trials"], seed)
    results = {
        "tv_chain": {
            "checks": len(reports),
            "violations": tv_violations,
            "passed": not tv_violations,
        },
        "mi_continuity": mi_report.to_json_dict(),
        "passed": not tv_violations and mi_report.passed,
    }
    _emit(_json_payload(cfg, results), cfg.get("output"))
    return 0


_COMMANDS = {
    "threshold": cmd_threshold,
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except GroupTestError as exc:
        print(f"gtbounds: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
