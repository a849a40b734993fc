"""Batch command-line front end.

Three subcommands: ``fuse-demo`` fuses a pair of Gaussians on a grid and
by sampling, ``run`` executes a Monte-Carlo tracking batch from a
scenario file, ``compare`` runs the same scenario under several fusion
rules with shared truth and measurement streams.  Each command writes
CSV files (and PNG figures unless ``--no-plot``) into ``--out`` and
prints a one-line summary.  Divergence of filter runs is data, not
failure: the exit code is 0 whenever parsing and execution succeeded.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_scenario
from .densities import Gaussian1D, GridDensity1D, gaussian_pair_grid, grid_bayes_fuse, grid_pcr5_fuse
from .distributed import FusionRule
from .report import (
    OutputBundle,
    render_clouds_figure,
    render_compare_figure,
    render_density_figure,
    render_error_figure,
    render_samples_figure,
    render_trajectory_figure,
    write_cloud,
    write_compare,
    write_density_grid,
    write_sample_hist,
    write_summary,
    write_trajectory,
)
from .rng import generator, seed_sequence
from .sampling import gaussian_source, pcr5_sample_batch
from .scenario import run_monte_carlo

RULE_NAMES = [r.value for r in FusionRule]
EMIT_CHOICES = ("traj", "cloud", "metrics")


def _positive(name: str):
    def convert(raw: str) -> float:
        value = float(raw)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"{name} must be > 0, got {raw}")
        return value

    return convert


def _positive_int(name: str):
    def convert(raw: str) -> int:
        value = int(raw)
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {raw}")
        return value

    return convert


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppcr5",
        description="Density-fusion demos and distributed bearing-only tracking experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("fuse-demo", help="fuse two Gaussians on a grid and by sampling")
    demo.add_argument("--mean1", type=float, default=0.0)
    demo.add_argument("--sigma1", type=_positive("sigma1"), default=1.0)
    demo.add_argument("--mean2", type=float, default=1.0)
    demo.add_argument("--sigma2", type=_positive("sigma2"), default=1.0)
    demo.add_argument("--n-samples", type=_positive_int("n-samples"), default=10000)
    demo.add_argument("--grid-points", type=_positive_int("grid-points"), default=4001)
    demo.add_argument("--bins", type=_positive_int("bins"), default=200)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--out", type=Path, default=Path("ppcr5_out"))
    demo.add_argument("--no-plot", action="store_true", help="skip PNG figures")

    run = sub.add_parser("run", help="Monte-Carlo tracking batch from a scenario file")
    run.add_argument("--scenario", required=True, help="scenario file path or bundled name")
    run.add_argument("--fusion", choices=RULE_NAMES, default=None)
    run.add_argument("--runs", type=_positive_int("runs"), default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--particles", type=_positive_int("particles"), default=None)
    run.add_argument("--steps", type=_positive_int("steps"), default=None)
    run.add_argument("--out", type=Path, default=Path("ppcr5_out"))
    run.add_argument(
        "--emit",
        default="traj,metrics",
        help=f"comma list of outputs, from: {','.join(EMIT_CHOICES)}",
    )
    run.add_argument("--cloud-every", type=_positive_int("cloud-every"), default=10)
    run.add_argument("--no-plot", action="store_true", help="skip PNG figures")

    cmp_ = sub.add_parser("compare", help="run several fusion rules on one scenario, paired")
    cmp_.add_argument("--scenario", required=True)
    cmp_.add_argument("--rules", default=",".join(RULE_NAMES), help="comma list of fusion rules")
    cmp_.add_argument("--runs", type=_positive_int("runs"), default=None)
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--particles", type=_positive_int("particles"), default=None)
    cmp_.add_argument("--steps", type=_positive_int("steps"), default=None)
    cmp_.add_argument("--out", type=Path, default=Path("ppcr5_out"))
    cmp_.add_argument("--no-plot", action="store_true", help="skip PNG figures")

    return parser


def cmd_fuse_demo(args) -> int:
    g1 = Gaussian1D(args.mean1, args.sigma1)
    g2 = Gaussian1D(args.mean2, args.sigma2)
    lo, hi, n = gaussian_pair_grid(g1, g2, n=args.grid_points)
    d1 = GridDensity1D.from_gaussian(g1, lo, hi, n)
    d2 = GridDensity1D.from_gaussian(g2, lo, hi, n)
    fused, defect = grid_pcr5_fuse(d1, d2)
    bayes = grid_bayes_fuse(d1, d2)

    rng = generator(seed_sequence(args.seed))
    samples = pcr5_sample_batch(gaussian_source(g1), gaussian_source(g2), args.n_samples, rng)
    counts, edges = np.histogram(samples, bins=args.bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])

    bundle = OutputBundle(args.out)
    bundle.add(write_density_grid(args.out / "density_grid.csv", d1.x, d1.values, d2.values,
                                  fused.values, bayes.values))
    bundle.add(write_sample_hist(args.out / "sample_hist.csv", centers, counts))
    if not args.no_plot:
        bundle.add(render_density_figure(args.out / "densities.png", d1.x, d1.values, d2.values,
                                         fused.values, bayes.values))
        bundle.add(render_samples_figure(args.out / "samples.png", centers, counts, fused))
    print(
        f"fuse-demo: N({args.mean1}, {args.sigma1}) + N({args.mean2}, {args.sigma2}) "
        f"samples={args.n_samples} quadrature_defect={defect:.3e} out={args.out}"
    )
    return 0


def _parse_emit(raw: str) -> set[str]:
    tokens = {tok.strip() for tok in raw.split(",") if tok.strip()}
    unknown = tokens - set(EMIT_CHOICES)
    if unknown:
        raise ConfigError(
            f"unknown --emit token(s) {sorted(unknown)}; valid: {','.join(EMIT_CHOICES)}"
        )
    return tokens


def _overrides(args) -> dict:
    return {
        "fusion": getattr(args, "fusion", None),
        "runs": args.runs,
        "seed": args.seed,
        "particles": args.particles,
        "steps": args.steps,
    }


def cmd_run(args) -> int:
    emit = _parse_emit(args.emit)
    config = load_scenario(args.scenario, _overrides(args))
    summary = run_monte_carlo(config, keep_clouds_run0="cloud" in emit)

    bundle = OutputBundle(args.out)
    if "metrics" in emit:
        bundle.add(write_summary(args.out / "summary.csv", summary, config.seed))
    if "traj" in emit:
        bundle.add(write_trajectory(args.out / "trajectory.csv", summary.truth,
                                    summary.mean_estimates, summary.mean_pos_rmse))
    if "cloud" in emit:
        bundle.add(write_cloud(args.out / "cloud.csv", summary.clouds_run0, every=args.cloud_every))
    if not args.no_plot:
        if "traj" in emit:
            bundle.add(render_trajectory_figure(args.out / "trajectory.png", summary.truth,
                                                summary.mean_estimates, config.sensors))
        bundle.add(render_error_figure(args.out / "error.png", summary.mean_pos_rmse,
                                       config.fusion.value))
        if "cloud" in emit:
            bundle.add(render_clouds_figure(args.out / "clouds.png", summary.clouds_run0,
                                            summary.truth, every=args.cloud_every))
    print(
        f"run: rule={config.fusion.value} runs={config.runs} "
        f"divergence_rate={summary.divergence_rate:.3f} "
        f"mean_final_error={summary.mean_final_error:.3f} out={args.out}"
    )
    return 0


def cmd_compare(args) -> int:
    names = [tok.strip() for tok in args.rules.split(",") if tok.strip()]
    if not names:
        raise ConfigError(f"--rules needs at least one rule; valid: {', '.join(RULE_NAMES)}")
    try:
        rules = [FusionRule.from_name(name) for name in names]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    base = load_scenario(args.scenario, _overrides(args) | {"fusion": None})
    summaries = []
    for rule in rules:
        config = replace(base, fusion=rule)
        summaries.append(run_monte_carlo(config))
        print(
            f"compare: rule={rule.value} runs={config.runs} "
            f"divergence_rate={summaries[-1].divergence_rate:.3f} "
            f"mean_final_error={summaries[-1].mean_final_error:.3f}"
        )

    bundle = OutputBundle(args.out)
    bundle.add(write_compare(args.out / "compare.csv", summaries, base.seed))
    if not args.no_plot:
        bundle.add(render_compare_figure(args.out / "compare.png", summaries))
    print(f"compare: wrote {len(summaries)} rule rows to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fuse-demo":
            return cmd_fuse_demo(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_compare(args)
    except ConfigError as exc:
        print(f"ppcr5: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
