"""Command-line entry point: ``eplbayes {simulate,fit,recovery,oracle-check,summarize}``."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dataio import (FORMATS, RunManifest, format_rho_table, load_dataset, save_dataset,
                     write_json, write_recovery, write_summary)
from .diagnostics import export_traces, import_traces, summarize_posterior
from .experiments import PRESETS, oracle_check, recovery_experiment, simulate_dataset
from .model import Dataset
from .perm import ReferenceOrder
from .sampler import SWAP_RULES, ChainConfig, chain_seed, run_chain


class _Parser(argparse.ArgumentParser):
    # argparse prints usage plus the message and exits 2; keep it to one line
    def error(self, message: str):
        self.exit(2, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _chain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iters", type=_positive_int, default=10000, help="total sweeps per chain")
    p.add_argument("--burnin", type=int, default=2000, help="sweeps discarded at the start")
    p.add_argument("--alpha0", type=float, default=50.0, help="Dirichlet concentration of the joint proposal")
    p.add_argument("--h", type=float, default=0.1, help="Bernoulli probability floor in (0, 0.5)")
    p.add_argument("--lambda1", type=float, default=0.5, help="P(W_1 = 1) in the joint proposal")
    p.add_argument("--c", type=float, default=1.0, help="Gamma prior shape")
    p.add_argument("--d", type=float, default=1.0, help="Gamma prior rate")
    p.add_argument("--mc-size", type=_positive_int, default=None,
                   help="Monte Carlo sample size for the proposal tables (default N)")
    p.add_argument("--swap-rule", choices=SWAP_RULES, default="exact")
    p.add_argument("--seed", type=int, default=0)


def _config(args, seed: int | None = None) -> ChainConfig:
    return ChainConfig(
        iterations=args.iters, burn_in=args.burnin, c=args.c, d=args.d, alpha0=args.alpha0,
        h=args.h, lambda1=args.lambda1, mc_size=args.mc_size,
        seed=args.seed if seed is None else seed, swap_rule=args.swap_rule,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eplbayes", description="Bayesian order-constrained Extended Plackett-Luce.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw a synthetic dataset and its true parameters")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=FORMATS, default="ordering")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("fit", help="run MCMC chains on a dataset")
    p.add_argument("data", type=Path, help="CSV file, one ordering (or ranking) per row")
    p.add_argument("--format", choices=FORMATS, default="ordering")
    p.add_argument("--chains", type=_positive_int, default=4)
    p.add_argument("--workers", type=_positive_int, default=1, help="chains run in parallel")
    p.add_argument("--top", type=_positive_int, default=5, help="rows of the printed rho table")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _chain_flags(p)

    p = sub.add_parser("recovery", help="simulation study of reference-order recovery")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--replications", type=_positive_int, default=None, help="override the preset")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", type=Path, required=True)
    _chain_flags(p)
    p.set_defaults(iters=None, burnin=None)

    p = sub.add_parser("oracle-check", help="compare MCMC with the exact posterior on a tiny problem")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--N", type=_positive_int, default=10)
    p.add_argument("--data", type=Path, default=None, help="use this CSV instead of simulating")
    p.add_argument("--format", choices=FORMATS, default="ordering")
    p.add_argument("--mc-draws", type=_positive_int, default=10**6)
    p.add_argument("--n-se", type=float, default=3.0)
    p.add_argument("--out", type=Path, default=None)
    _chain_flags(p)
    p.set_defaults(iters=50000, burnin=2000)

    p = sub.add_parser("summarize", help="recompute a posterior summary from trace files")
    p.add_argument("traces", type=Path, nargs="+")
    p.add_argument("--top", type=_positive_int, default=5)
    p.add_argument("--out", type=Path, default=None, help="summary JSON path")
    return parser


def _cmd_simulate(args) -> int:
    if args.K < 2:
        raise ValueError("--K must be at least 2")
    rng = np.random.default_rng(args.seed)
    data, rho, p = simulate_dataset(args.K, args.N, rng)
    manifest = RunManifest("simulate", {}, simulation={"K": args.K, "N": args.N, "seed": args.seed},
                           output=str(args.out), data_format=args.format)
    save_dataset(data, args.out / "data.csv", format=args.format)
    ref = ReferenceOrder(rho)
    write_json({"rho": list(rho), "w_code": ref.bits, "p": [float(x) for x in p],
                "p_normalized": [float(x) for x in p / p.sum()], "manifest": manifest.to_dict()},
               args.out / "truth.json")
    print(f"wrote {args.N} orderings of {args.K} items to {args.out / 'data.csv'}; true rho {rho}")
    return 0


def _run_one(job):
    data, config = job
    return run_chain(data, config)


def _cmd_fit(args) -> int:
    data = load_dataset(args.data, args.format)
    configs = [_config(args, chain_seed(args.seed, i)) for i in range(args.chains)]
    jobs = [(data, cfg) for cfg in configs]
    if args.workers > 1 and args.chains > 1:
        with ProcessPoolExecutor(max_workers=min(args.workers, args.chains)) as pool:
            chains = list(pool.map(_run_one, jobs))
    else:
        chains = [_run_one(job) for job in jobs]
    manifest = RunManifest("fit", _config(args).to_dict(), chains=args.chains,
                           data=str(args.data), output=str(args.out), data_format=args.format)
    # the trace CSVs hold exactly one header plus one row per draw, so the manifest sits beside them
    write_json(manifest.to_dict(), args.out / "manifest.json")
    for i, ch in enumerate(chains):
        export_traces(ch, args.out / f"trace_chain{i}.csv")
    summary = summarize_posterior(chains)
    write_summary(summary, args.out / "summary.json", manifest)
    print(f"N={data.N} K={data.K} chains={args.chains} draws/chain={len(chains[0])}")
    for i, ch in enumerate(chains):
        print(f"chain {i}: seed {configs[i].seed}  TJM accept {ch.accept_tjm:.3f}  "
              f"swap accept {ch.accept_swap:.3f}")
    print(format_rho_table(summary, args.top))
    print("modal ordering:", summary.modal_ordering)
    return 0


def _cmd_recovery(args) -> int:
    preset = PRESETS[args.preset]
    iters = args.iters if args.iters is not None else preset["iterations"]
    burnin = args.burnin if args.burnin is not None else preset["burn_in"]
    args.iters, args.burnin = iters, burnin
    config = _config(args)
    reps = args.replications or preset["replications"]
    reports = recovery_experiment(preset["grid"], reps, config, seed=args.seed, workers=args.workers)
    manifest = RunManifest("recovery", config.to_dict(), output=str(args.out),
                           extra={"preset": args.preset, "grid": [list(c) for c in preset["grid"]],
                                  "replications": reps})
    write_recovery(reports, args.out, manifest)
    for r in reports:
        print(r.line())
    return 0


def _cmd_oracle(args) -> int:
    config = _config(args)
    if args.data is not None:
        data = load_dataset(args.data, args.format)
        truth = None
    else:
        if args.K < 2:
            raise ValueError("--K must be at least 2")
        data, truth, _ = simulate_dataset(args.K, args.N, np.random.default_rng(args.seed))
    cmp = oracle_check(data, config, args.mc_draws, seed=args.seed)
    ok = cmp.agrees(args.n_se)
    if truth is not None:
        print(f"simulated K={data.K} N={data.N}, true rho {truth}")
    for line in cmp.lines():
        print(line)
    print(f"{'AGREE' if ok else 'DISAGREE'} (max |z| = {np.max(np.abs(cmp.z)):.2f}, limit {args.n_se})")
    if args.out is not None:
        manifest = RunManifest("oracle-check", config.to_dict(), data=None if args.data is None else str(args.data),
                               simulation=None if args.data else {"K": args.K, "N": args.N, "seed": args.seed},
                               output=str(args.out), data_format=args.format,
                               extra={"mc_draws": args.mc_draws, "n_se": args.n_se})
        write_json({"manifest": manifest.to_dict(), "agrees": ok,
                    "cells": [{"rho": list(r), "chain": float(a), "chain_se": float(b),
                               "oracle": float(c), "oracle_se": float(e), "z": float(z)}
                              for r, a, b, c, e, z in zip(cmp.rhos, cmp.chain_probs, cmp.chain_se,
                                                          cmp.oracle_probs, cmp.oracle_se, cmp.z)]},
                   args.out / "oracle_check.json")
    return 0 if ok else 1


def _cmd_summarize(args) -> int:
    chains = [import_traces(path) for path in args.traces]
    if len({ch.K for ch in chains}) != 1:
        raise ValueError("trace files disagree on the number of items")
    summary = summarize_posterior(chains)
    print(format_rho_table(summary, args.top))
    print("modal ordering:", summary.modal_ordering)
    if args.out is not None:
        write_summary(summary, args.out, {"command": "summarize", "config": None,
                                          "traces": [str(p) for p in args.traces]})
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "recovery": _cmd_recovery,
    "oracle-check": _cmd_oracle,
    "summarize": _cmd_summarize,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"eplbayes {args.command}: error: {msg}", file=sys.stderr)
        return 1


def cli(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return the exit status instead of raising ``SystemExit``."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 1)


if __name__ == "__main__":
    sys.exit(main())
