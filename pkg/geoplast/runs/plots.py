"""SVG figures of a computed trajectory."""

from __future__ import annotations

from pathlib import Path
from typing import Any, List, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402
import seaborn as sns  # noqa: E402

from geoplast.engine.tensors import COMPONENT_NAMES  # noqa: E402
from geoplast.models.errors import PreconditionError  # noqa: E402
from geoplast.models.models import MeshKind, Trajectory  # noqa: E402
from geoplast.utils.logger_config import get_logger  # noqa: E402

logger = get_logger("plots")

PLOT_DIR = "plots"
# Fixed salt and no date keep the SVG bytes reproducible.
SVG_RC = {"svg.hashsalt": "geoplast", "svg.fonttype": "none"}
SVG_METADATA = {"Date": None, "Creator": "geoplast"}


def _volume_mean(values: np.ndarray, volumes: np.ndarray) -> float:
    return float(volumes @ values / volumes.sum())


def axial_component(trajectory: Trajectory, volumes: np.ndarray) -> int:
    """Component of the total strain with the largest final mean magnitude."""
    last = trajectory.snapshots[-1]
    total = (last.e + last.p).components
    means = np.abs(volumes @ total) / volumes.sum()
    return int(np.argmax(means))


def _save(fig: Any, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def emit_plots(
    trajectory: Trajectory,
    out_dir: Union[str, Path],
    mesh: Any = None,
    volumes: Optional[np.ndarray] = None,
) -> List[Path]:
    """Write stress-strain, dilatancy, energy and damage figures under ``out_dir/plots``."""
    if len(trajectory) < 2:
        raise PreconditionError("plots need a trajectory with at least two snapshots")
    snaps = trajectory.snapshots
    if volumes is None:
        volumes = mesh.volumes if mesh is not None else np.ones(snaps[0].p.batch_shape[0])
    target = Path(out_dir) / PLOT_DIR
    target.mkdir(parents=True, exist_ok=True)

    times = trajectory.times
    dim = snaps[0].p.dim
    comp = axial_component(trajectory, volumes)
    name = COMPONENT_NAMES[dim][comp]
    strain_axial = [_volume_mean((s.e + s.p).components[:, comp], volumes) for s in snaps]
    stress_axial = [_volume_mean(s.sigma.components[:, comp], volumes) for s in snaps]
    tr_p = [_volume_mean(s.p.trace(), volumes) for s in snaps]
    ledger = trajectory.ledger()

    written: List[Path] = []
    with plt.rc_context(SVG_RC), sns.axes_style("whitegrid"), sns.plotting_context("paper"):
        palette = sns.color_palette("deep")

        fig, ax = plt.subplots(figsize=(5, 3.6))
        ax.plot(strain_axial, stress_axial, "-o", color=palette[0], markersize=2, linewidth=1.2)
        ax.set_xlabel(rf"axial strain $\varepsilon_{{{name}}}$")
        ax.set_ylabel(rf"axial stress $\sigma_{{{name}}}$")
        written.append(_save(fig, target / "stress_strain.svg"))

        fig, ax = plt.subplots(figsize=(5, 3.6))
        ax.plot(times, tr_p, color=palette[1], linewidth=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(r"mean $\mathrm{tr}\,p$")
        written.append(_save(fig, target / "dilatancy.svg"))

        fig, ax = plt.subplots(figsize=(5, 3.6))
        series = {
            "elastic Q": [e.Q for e in ledger],
            "damage D": [e.D for e in ledger],
            "gradient": [e.grad for e in ledger],
            "hardening": [e.Qtilde for e in ledger],
            "plastic dissipation": [e.VH_cum for e in ledger],
        }
        for color, (label, values) in zip(palette, series.items()):
            ax.plot(times, values, label=label, color=color, linewidth=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.legend(frameon=False)
        written.append(_save(fig, target / "energy.svg"))

        written.append(_damage_figure(trajectory, target, mesh, palette))

    logger.info(f"wrote {len(written)} figures to {target}")
    return written


def _damage_figure(trajectory: Trajectory, target: Path, mesh: Any, palette: Any) -> Path:
    snaps = trajectory.snapshots
    fig, ax = plt.subplots(figsize=(5, 3.6))
    kind = mesh.kind if mesh is not None else MeshKind.POINT

    if kind == MeshKind.SEGMENT:
        x = mesh.vertices[:, 0]
        picks = sorted({0, len(snaps) // 2, len(snaps) - 1})
        for color, i in zip(sns.color_palette("crest", len(picks)), picks):
            ax.plot(x, snaps[i].alpha, color=color, linewidth=1.2, label=f"t = {snaps[i].t:.3g}")
        ax.set_xlabel("x")
        ax.set_ylabel(r"damage $\alpha$")
        ax.legend(frameon=False)
    elif kind == MeshKind.RECT:
        tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.elements)
        shading = ax.tripcolor(tri, snaps[-1].alpha, shading="gouraud", cmap="viridis", vmin=0.0, vmax=1.0)
        fig.colorbar(shading, ax=ax, label=r"$\alpha$")
        ax.set_aspect("equal")
        ax.set_title(f"t = {snaps[-1].t:.3g}")
    else:
        ax.plot(trajectory.times, [s.alpha.min() for s in snaps], color=palette[2], linewidth=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(r"damage $\alpha$")
    return _save(fig, target / "damage.svg")
