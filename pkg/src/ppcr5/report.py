"""CSV and figure output.

All delimited files carry a header row, locale-independent ``.`` decimal
formatting and single-newline line endings, and are written atomically
(temp file + rename) so a crashed run never leaves a truncated file.
Figures are rendered to PNG next to the CSVs they illustrate; the CSVs
remain the data contract.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .densities import GridDensity1D
from .filtering import ParticleCloud, Sensor, StateVector4
from .scenario import MonteCarloSummary


@dataclass
class OutputBundle:
    """Directory plus the files a command emitted into it."""

    out_dir: Path
    files: list[Path] = field(default_factory=list)

    def add(self, path: Path) -> None:
        self.files.append(path)


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> Path:
    """Atomically write one CSV file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(format_value(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_density_grid(
    path: Path,
    grid_x: np.ndarray,
    p1: np.ndarray,
    p2: np.ndarray,
    p12_pcr5: np.ndarray,
    p12_bayes: np.ndarray,
) -> Path:
    rows = zip(grid_x, p1, p2, p12_pcr5, p12_bayes)
    return write_csv(path, ["x", "p1", "p2", "p12_pcr5", "p12_bayes"], rows)


def write_sample_hist(path: Path, centers: np.ndarray, counts: np.ndarray) -> Path:
    return write_csv(path, ["bin", "count_pcr5"], zip(centers, counts))


def write_trajectory(
    path: Path,
    truth: list[StateVector4],
    mean_estimates: np.ndarray,
    mean_pos_rmse: np.ndarray,
) -> Path:
    rows = []
    for t in range(1, len(truth)):
        est = mean_estimates[t - 1]
        rows.append(
            (t, truth[t].x, truth[t].y, est[0], est[1], est[2], est[3], mean_pos_rmse[t - 1])
        )
    header = ["step", "truth_x", "truth_y", "est_x", "est_y", "est_vx", "est_vy", "pos_error"]
    return write_csv(path, header, rows)


def write_cloud(
    path: Path,
    clouds: list[ParticleCloud | None],
    every: int = 10,
) -> Path:
    """Fused-cloud snapshots for steps where step % every == 0, plus the last."""
    rows = []
    last = len(clouds)
    for t in range(1, last + 1):
        if t % every != 0 and t != last:
            continue
        cloud = clouds[t - 1]
        if cloud is None:  # aborted step, nothing to dump
            continue
        for i in range(len(cloud)):
            x, y, vx, vy = cloud.states[i]
            rows.append((t, i, x, y, vx, vy))
    return write_csv(path, ["step", "particle_id", "x", "y", "vx", "vy"], rows)


def write_summary(path: Path, summary: MonteCarloSummary, seed: int) -> Path:
    rows = []
    for run_id, m in enumerate(summary.per_run):
        rows.append(
            (
                run_id,
                summary.rule.value,
                seed,
                m.diverged,
                m.diverge_step,
                m.final_error,
                float(np.mean(m.pos_rmse)),
            )
        )
    header = ["run_id", "rule", "seed", "diverged", "diverge_step", "final_error", "mean_pos_rmse"]
    return write_csv(path, header, rows)


def write_compare(path: Path, summaries: list[MonteCarloSummary], seed: int) -> Path:
    rows = []
    for s in summaries:
        rows.append(
            (
                s.rule.value,
                s.runs,
                seed,
                s.truth_hash,
                s.divergence_rate,
                s.mean_final_error,
                float(np.mean(s.mean_pos_rmse)),
            )
        )
    header = [
        "rule",
        "runs",
        "seed",
        "truth_hash",
        "divergence_rate",
        "mean_final_error",
        "mean_pos_rmse",
    ]
    return write_csv(path, header, rows)


# --- figures -----------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_density_figure(
    path: Path,
    grid_x: np.ndarray,
    p1: np.ndarray,
    p2: np.ndarray,
    p12_pcr5: np.ndarray,
    p12_bayes: np.ndarray,
) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(grid_x, p1, "--", color="tab:gray", label="p1")
    ax.plot(grid_x, p2, ":", color="tab:gray", label="p2")
    ax.plot(grid_x, p12_pcr5, color="tab:red", label="p-PCR5 fusion")
    ax.plot(grid_x, p12_bayes, color="tab:blue", label="Bayes fusion")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_samples_figure(
    path: Path,
    centers: np.ndarray,
    counts: np.ndarray,
    fused: GridDensity1D,
) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    width = centers[1] - centers[0] if len(centers) > 1 else 1.0
    total = counts.sum() * width
    ax.bar(centers, counts / total, width=width, color="tab:orange", alpha=0.6,
           label="sampled (normalized)")
    ax.plot(fused.x, fused.values, color="tab:red", label="computed")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_trajectory_figure(
    path: Path,
    truth: list[StateVector4],
    mean_estimates: np.ndarray,
    sensors: tuple[Sensor, ...],
) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 6))
    tx = [s.x for s in truth]
    ty = [s.y for s in truth]
    ax.plot(tx, ty, color="black", label="truth")
    ax.plot(mean_estimates[:, 0], mean_estimates[:, 1], color="tab:red", label="estimate (mean)")
    for i, sen in enumerate(sensors):
        ax.plot(sen.pos_x, sen.pos_y, "^", color="tab:blue", markersize=10)
        ax.annotate(f"sensor {i + 1}", (sen.pos_x, sen.pos_y), textcoords="offset points",
                    xytext=(6, 6))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_error_figure(path: Path, mean_pos_rmse: np.ndarray, rule_name: str) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    steps = np.arange(1, len(mean_pos_rmse) + 1)
    ax.plot(steps, mean_pos_rmse, color="tab:red", label=rule_name)
    ax.set_xlabel("time step")
    ax.set_ylabel("mean position error")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_clouds_figure(
    path: Path,
    clouds: list[ParticleCloud | None],
    truth: list[StateVector4],
    every: int,
) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 6))
    last = len(clouds)
    shown = [t for t in range(1, last + 1) if (t % every == 0 or t == last) and clouds[t - 1] is not None]
    cmap = plt.get_cmap("viridis")
    for rank, t in enumerate(shown):
        cloud = clouds[t - 1]
        color = cmap(rank / max(len(shown) - 1, 1))
        ax.scatter(cloud.states[:, 0], cloud.states[:, 1], s=4, color=color, alpha=0.5,
                   label=f"step {t}" if len(shown) <= 8 else None)
    ax.plot([s.x for s in truth], [s.y for s in truth], color="black", lw=1, label="truth")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal", adjustable="datalim")
    if len(shown) <= 8:
        ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_compare_figure(path: Path, summaries: list[MonteCarloSummary]) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for s in summaries:
        steps = np.arange(1, len(s.mean_pos_rmse) + 1)
        ax.plot(steps, s.mean_pos_rmse, label=f"{s.rule.value} ({s.divergence_rate:.0%} diverged)")
    ax.set_xlabel("time step")
    ax.set_ylabel("mean position error")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
