"""Command-line front end: ber, mu-ber, theory, xcorr, and codebook runs.

A JSON config file may supply any `ber`/`mu-ber` option; flags given on
the command line override file values.  Exits 0 on success, 2 on config or
I/O errors with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import theory
from .channel import ChannelSpec
from .codebook import (
    WaveformParams,
    build_css,
    build_fsk,
    build_sims,
    codebook_to_json,
)
from .harness import SimConfig, emit, run_ber, run_mu_ber, run_xcorr_study
from .sequences import generate_random_root

THEORY_MODELS = {
    "awgn-exact": theory.ber_awgn_exact,
    "awgn-approx": theory.ber_awgn_approx,
    "rayleigh-exact": theory.ber_rayleigh_exact,
    "rayleigh-approx": theory.ber_rayleigh_approx,
}

OFFSET_MODES = ("sync", "uniform")


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with any of these options")
    p.add_argument("--scheme", choices=["sims", "fsk", "css"])
    p.add_argument("--sf", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--channel", choices=["awgn", "rayleigh", "two-tap"])
    p.add_argument("--rho", type=float)
    p.add_argument("--fading", action="store_true", default=None)
    p.add_argument("--snr-start", type=float)
    p.add_argument("--snr-stop", type=float)
    p.add_argument("--snr-step", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--users", type=int)
    p.add_argument("--offsets", choices=list(OFFSET_MODES))
    p.add_argument("--seed", type=int)
    p.add_argument("--stop-rule", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--dump-z", metavar="PATH", help="write detection traces")


def _merge_config(args) -> dict:
    merged = {
        "scheme": "sims",
        "sf": 7,
        "k": 4,
        "channel": "awgn",
        "rho": 0.0,
        "fading": False,
        "snr_start": -2.0,
        "snr_stop": 14.0,
        "snr_step": 2.0,
        "trials": 100_000,
        "users": 1,
        "offsets": "uniform",
        "seed": 0,
        "stop_rule": 200,
    }
    if args.config:
        with open(args.config) as fh:
            merged.update(json.load(fh))
    for key in list(merged):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _sim_config(args) -> SimConfig:
    raw = _merge_config(args)
    grid = np.arange(
        raw["snr_start"], raw["snr_stop"] + 1e-9, raw["snr_step"]
    ).tolist()
    spec = ChannelSpec(
        model=raw["channel"],
        es_n0_db=0.0,
        rho=raw["rho"],
        fading=raw["fading"],
    )
    return SimConfig(
        scheme=raw["scheme"],
        sf=raw["sf"],
        k=raw["k"],
        channel=spec,
        snr_grid_db=grid,
        trials_per_point=raw["trials"],
        users=raw["users"],
        offsets_mode=raw["offsets"],
        master_seed=raw["seed"],
        stop_rule=raw["stop_rule"],
    )


def _cmd_ber(args, require_multi: bool = False) -> int:
    config = _sim_config(args)
    if require_multi and config.users < 2:
        raise ValueError("mu-ber needs --users >= 2")
    runner = run_mu_ber if require_multi else run_ber
    kwargs = {} if require_multi else {"dump_z_path": args.dump_z}
    curve = runner(config, workers=args.workers, **kwargs)
    emit(curve, args.out, args.format)
    return 0


def _cmd_theory(args) -> int:
    fn = THEORY_MODELS[args.model]
    grid = np.arange(args.snr_start, args.snr_stop + 1e-9, args.step)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "ber"])
        for snr_db in grid:
            writer.writerow([repr(float(snr_db)), repr(fn(args.sf, 10 ** (snr_db / 10)))])
    return 0


def _cmd_xcorr(args) -> int:
    params = WaveformParams(k=args.k, sf=args.sf)
    if args.scheme == "fsk":
        cb = build_fsk(params)
    elif args.scheme == "css":
        cb = build_css(params)
    else:
        cb = build_sims(generate_random_root(args.root_seed, params.n_sf, params.k), params)
    eps_grid = [float(e) for e in args.eps.split(",") if e]
    rows = run_xcorr_study(cb, eps_grid, args.pairs, args.seed)
    if args.format == "json":
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=1)
    else:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps", "empirical_tail", "bernstein_bound"])
            for row in rows:
                writer.writerow(
                    [repr(row["eps"]), repr(row["empirical_tail"]), repr(row["bernstein_bound"])]
                )
    return 0


def _cmd_codebook(args) -> int:
    params = WaveformParams(k=args.k, sf=args.sf, f0=args.f0, theta=args.theta)
    if args.scheme == "fsk":
        cb = build_fsk(params)
    elif args.scheme == "css":
        cb = build_css(params)
    else:
        root = generate_random_root(args.root_seed, params.n_sf, params.k)
        cb = build_sims(root, params)
    with open(args.out, "w") as fh:
        fh.write(codebook_to_json(cb, include_samples=args.materialize))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockspread",
        description="Block-spreading PHY simulations and analytic curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ber = sub.add_parser("ber", help="Monte Carlo BER sweep")
    _add_sim_flags(p_ber)

    p_mu = sub.add_parser("mu-ber", help="multi-user BER sweep")
    _add_sim_flags(p_mu)

    p_th = sub.add_parser("theory", help="closed-form BER curve")
    p_th.add_argument("--model", choices=list(THEORY_MODELS), required=True)
    p_th.add_argument("--sf", type=int, required=True)
    p_th.add_argument("--snr-start", type=float, required=True)
    p_th.add_argument("--snr-stop", type=float, required=True)
    p_th.add_argument("--step", "--snr-step", type=float, required=True)
    p_th.add_argument("--out", required=True)

    p_x = sub.add_parser("xcorr", help="correlation tail vs analytic bound")
    p_x.add_argument("--scheme", choices=["sims", "fsk", "css"], default="sims")
    p_x.add_argument("--sf", type=int, default=8)
    p_x.add_argument("--k", type=int, default=4)
    p_x.add_argument("--root-seed", type=int, default=1)
    p_x.add_argument("--eps", default="0.02,0.05,0.1")
    p_x.add_argument("--pairs", type=int, default=10_000)
    p_x.add_argument("--seed", type=int, default=0)
    p_x.add_argument("--out", required=True)
    p_x.add_argument("--format", choices=["csv", "json"], default="csv")

    p_cb = sub.add_parser("codebook", help="build and export a codebook")
    p_cb.add_argument("--scheme", choices=["sims", "fsk", "css"], default="sims")
    p_cb.add_argument("--sf", type=int, required=True)
    p_cb.add_argument("--k", type=int, required=True)
    p_cb.add_argument("--f0", type=float, default=1.0)
    p_cb.add_argument("--theta", type=float, default=1.0)
    p_cb.add_argument("--root-seed", type=int, default=1)
    p_cb.add_argument("--materialize", action="store_true")
    p_cb.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ber":
            return _cmd_ber(args)
        if args.command == "mu-ber":
            return _cmd_ber(args, require_multi=True)
        if args.command == "theory":
            return _cmd_theory(args)
        if args.command == "xcorr":
            return _cmd_xcorr(args)
        if args.command == "codebook":
            return _cmd_codebook(args)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
