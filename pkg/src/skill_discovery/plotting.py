"""
Trajectory plots written to image files.
"""

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_prototypes(
    prototypes: dict[int, np.ndarray],
    times: np.ndarray,
    path: str | Path,
    labels: Optional[dict[int, str]] = None,
    objects: Optional[dict[int, Sequence[float]]] = None,
) -> Path:
    """
    Plot decoded skill trajectories: top-down x-y view and height/gripper over time.

    Args:
        prototypes: Codebook index -> (T, d) trajectory, workspace units
        times: Time grid the prototypes were decoded on
        path: Output image path
        labels: Optional legend label per index
        objects: Optional object position per index, drawn as a marker
    """
    path = Path(path)
    labels = labels or {}
    fig, (ax_xy, ax_z) = plt.subplots(1, 2, figsize=(11, 4.5))

    for k, trajectory in sorted(prototypes.items()):
        name = labels.get(k, f"v{k}")
        (line,) = ax_xy.plot(trajectory[:, 0], trajectory[:, 1], label=name)
        ax_xy.plot(trajectory[0, 0], trajectory[0, 1], "o", color=line.get_color())
        ax_z.plot(times, trajectory[:, 2], color=line.get_color(), label=name)
        if trajectory.shape[1] > 3:
            ax_z.plot(times, trajectory[:, 3], "--", color=line.get_color(), alpha=0.5)
        if objects and k in objects:
            ax_xy.plot(objects[k][0], objects[k][1], "x", color=line.get_color(), markersize=9)

    ax_xy.set_xlabel("x [m]")
    ax_xy.set_ylabel("y [m]")
    ax_xy.set_title("top view")
    ax_xy.set_aspect("equal", adjustable="datalim")
    ax_z.set_xlabel("t")
    ax_z.set_ylabel("z [m] / gripper (dashed)")
    ax_z.set_title("height over time")
    ax_z.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
