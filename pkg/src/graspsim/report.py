"""Report generation: delimited summaries plus rendered figures.

Every report path emits machine-readable CSV alongside PNG figures so a
run can be inspected without replaying it: per-run telemetry panels
(per-finger sensor amplitudes, yaw, pitch), slip-curve fits, spatial
activation maps, and the max-mass summary table across runs.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .colormap import BIN_COUNT, map_to_text
from .fitting import quadratic
from .plant import GraspStatus
from .recording import ExperimentRecord

FINGER_TITLES = ("Thumb", "Index", "Ring")


def save_run_figure(record: ExperimentRecord, path) -> Path:
    """Five-panel telemetry figure: finger amplitudes, yaw and pitch."""
    path = Path(path)
    times = np.array([row.timestamp_us for row in record.rows]) / 1e6
    fig, axes = plt.subplots(5, 1, figsize=(10, 12), sharex=True)
    for finger in range(3):
        values = np.array([row.normalized[finger] for row in record.rows])
        axes[finger].plot(times, values, linewidth=0.6)
        axes[finger].set_ylabel("amplitude")
        axes[finger].set_title(f"{FINGER_TITLES[finger]} fingertip sensors")
    axes[3].plot(times, [row.yaw_deg for row in record.rows], color="tab:blue")
    axes[3].set_ylabel("yaw (deg)")
    axes[4].plot(times, [row.pitch_deg for row in record.rows], color="tab:orange")
    axes[4].set_ylabel("pitch (deg)")
    axes[4].set_xlabel("time (s)")
    status = record.outcome.status.value if record.outcome else "n/a"
    fig.suptitle(f"{record.object_name} / {record.kind} "
                 f"(+{record.added_mass_g:.0f} g): {status}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_slip_figure(results, path) -> Path:
    """Scatter of slip vs pull force with the fitted quadratics."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 5))
    for result in results:
        forces = np.array([f for f, _ in result.samples])
        slips = np.array([s for _, s in result.samples])
        ax.scatter(forces, slips, s=12, label=f"{result.kind} samples")
        xs = np.linspace(forces.min(), forces.max(), 200)
        ax.plot(xs, np.maximum(0.0, quadratic(result.coefficients, xs)),
                linewidth=1.2, label=f"{result.kind} quadratic fit")
    ax.set_xlabel("pull force (N)")
    ax.set_ylabel("slip (mm)")
    ax.set_title(f"Slip resistance: {results[0].object_name}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_colormap_figure(grid, path, title: str = "") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4, 6))
    ax.imshow(grid, cmap="hot", vmin=0, vmax=BIN_COUNT - 1, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def write_colormap_text(grid, path) -> Path:
    path = Path(path)
    path.write_text(map_to_text(grid))
    return path


def write_slip_samples_csv(result, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["pull_force_n", "slip_mm"])
        for force, slip in result.samples:
            writer.writerow([repr(force), repr(slip)])
    return path


def write_slip_coefficients(result, path) -> Path:
    path = Path(path)
    a, b, c = result.coefficients
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kind", "object", "a", "b", "c", "onset_n"])
        writer.writerow([result.kind, result.object_name,
                         repr(a), repr(b), repr(c), repr(result.onset_n)])
    return path


def summarize_records(records) -> list[dict]:
    """Aggregate run records into max-mass rows per (object, family).

    A mass counts as failing once at least half of its runs dropped or
    lost contact; the summary reports the heaviest passing total mass.
    """
    cells = defaultdict(lambda: defaultdict(list))
    base_masses = {}
    for record in records:
        if record.outcome is None:
            continue
        cells[(record.object_name, record.kind)][record.added_mass_g].append(record.outcome)
        base_masses[record.object_name] = None
    rows = []
    for (object_name, kind), masses in sorted(cells.items()):
        max_total = 0.0
        annotation = ""
        for added in sorted(masses):
            outcomes = masses[added]
            failures = sum(1 for o in outcomes if o.failed)
            total = _total_mass(object_name, added)
            if failures * 2 >= len(outcomes):
                if any(o.status is GraspStatus.CONTACT_LOST for o in outcomes):
                    annotation = f"contact lost above {max_total:.0f} g"
                break
            max_total = total
        rows.append({"object": object_name, "kind": kind,
                     "max_mass_g": max_total, "runs": sum(len(v) for v in masses.values()),
                     "annotation": annotation})
    return rows


def _total_mass(object_name: str, added_g: float) -> float:
    from .objects import get_object

    return get_object(object_name).base_mass_g + added_g


def write_summary_csv(rows, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle,
                                fieldnames=["object", "kind", "max_mass_g", "runs", "annotation"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def write_sweep_csv(result, path) -> Path:
    """Per-mass detail of one weight sweep."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["object", "kind", "seed", "added_mass_g", "total_mass_g",
                         "failures", "statuses"])
        for mass in result.results:
            writer.writerow([result.object_name, result.kind, result.seed,
                             mass.added_mass_g, mass.total_mass_g, mass.failures,
                             "|".join(mass.statuses)])
    return path
