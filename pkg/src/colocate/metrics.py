"""Error metrics, CSV traces and the error plot.

Translation error is Euclidean distance between estimated and true positions;
rotation error is the geodesic angle of R_est' R_true. The CSV schema is

    t,avg_terr_m,avg_rerr_rad,terr_r1..terr_rn

with every value printed to 12 significant digits, so a given (scenario,
seed, flags) triple always produces byte-identical files. Plots are rendered
from the CSV alone and can be regenerated offline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lie import rotation_angle


@dataclass
class MetricsRow:
    t: float
    avg_terr_m: float
    avg_rerr_rad: float
    per_robot_terr: tuple


@dataclass
class RunReport:
    scenario: str
    seed: int
    filters: str
    initial_error_m: float
    final_error_m: float
    longrun_error_m: float
    max_discrepancy_m: float
    max_discrepancy_rad: float
    wall_time_s: float

    def lines(self):
        out = [
            f"scenario                 {self.scenario}",
            f"seed                     {self.seed}",
            f"filters                  {self.filters}",
            f"initial avg terr         {self.initial_error_m:.6f} m",
            f"final avg terr           {self.final_error_m:.6f} m",
            f"long-run avg terr        {self.longrun_error_m:.6f} m",
        ]
        if not math.isnan(self.max_discrepancy_m):
            out.append(f"max pose discrepancy     {self.max_discrepancy_m:.3e} m / "
                       f"{self.max_discrepancy_rad:.3e} rad")
        out.append(f"wall time                {self.wall_time_s:.2f} s")
        return out


def pose_errors(est_poses, truth_poses):
    """Per-robot translation (m) and rotation (rad) errors."""
    est = np.asarray(est_poses)
    tru = np.asarray(truth_poses)
    terr = np.linalg.norm(est[:, :3, 3] - tru[:, :3, 3], axis=1)
    rerr = np.array([rotation_angle(e[:3, :3].T @ t[:3, :3])
                     for e, t in zip(est, tru)])
    return terr, rerr


def metrics_row(t, est_poses, truth_poses) -> MetricsRow:
    terr, rerr = pose_errors(est_poses, truth_poses)
    return MetricsRow(t, float(terr.mean()), float(rerr.mean()), tuple(terr))


def pose_discrepancy(poses_a, poses_b):
    """Largest translation and rotation difference between two estimate stacks."""
    terr, rerr = pose_errors(poses_a, poses_b)
    return float(terr.max()), float(rerr.max())


def longrun_average(rows) -> float:
    """Mean average translation error over the final half of the run."""
    if not rows:
        return float("nan")
    t_end = rows[-1].t
    tail = [r.avg_terr_m for r in rows if r.t >= 0.5 * t_end]
    return float(np.mean(tail)) if tail else float("nan")


def csv_text(rows) -> str:
    n = len(rows[0].per_robot_terr) if rows else 0
    header = "t,avg_terr_m,avg_rerr_rad," + ",".join(
        f"terr_r{i + 1}" for i in range(n))
    lines = [header]
    for r in rows:
        vals = [r.t, r.avg_terr_m, r.avg_rerr_rad, *r.per_robot_terr]
        lines.append(",".join(f"{v:.12g}" for v in vals))
    return "\n".join(lines) + "\n"


def write_csv(rows, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(rows))


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.array([[float(v) for v in line.strip().split(",")]
                         for line in fh if line.strip()])
    return header, data


def plot_errors(csv_path, out_paths, title="Average translation error"):
    """Render the average-translation-error curve from a metrics CSV."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, data = read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(data[:, 0], data[:, 1], lw=1.5)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("average translation error [m]")
    ax.set_title(title)
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    for path in out_paths:
        fig.savefig(path)
    plt.close(fig)
