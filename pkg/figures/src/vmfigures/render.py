"""Render experiment-manifest CSVs as multi-panel figures.

Reads a vmlab run manifest, groups the per-run CSVs into panels, and
writes one PNG and one SVG per figure.  Every plotted curve carries an
SVG group id ``series-<csv name>`` and every panel ``panel-<row>-<col>``
so downstream checks can count them; envelope overlays use
``envelope-<csv name>`` and are drawn thin dash-dotted.  Rendering is
strictly read-only over the run directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_IDS = ("fig1_right", "fig2", "fig3", "fig4", "fig5", "fig6")

PANEL_COLUMNS = ("vs_cn", "vs_lm", "to_opt")
COLUMN_TITLES = {"vs_cn": "distance to Newton flow",
                 "vs_lm": "distance to damped Newton flow",
                 "to_opt": "distance to optimum"}

# blue shades where the mass dominates, red where the damping does
BLUES = ("#08306b", "#2171b5", "#6baed6", "#bdd7e7")
REDS = ("#67000d", "#cb181d", "#fb6a4a", "#fcae91")


class RenderError(Exception):
    """Manifest or CSV problem that prevents rendering."""


@dataclass(frozen=True)
class FigureSpec:
    manifest_path: Path
    figure: str
    log_y: bool = True
    overlay_envelopes: bool = True
    legend_from_tags: bool = True


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RenderError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(manifest, dict) or \
            not isinstance(manifest.get("files"), dict):
        raise RenderError(f"manifest {path} lacks a 'files' mapping")
    manifest["_dir"] = path.parent
    return manifest


def _read_csv(manifest: dict, name: str) -> np.ndarray:
    path = Path(manifest["_dir"]) / name
    if not path.exists():
        raise RenderError(
            f"manifest entry {name!r} is missing on disk ({path})")
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.size == 0:
        raise RenderError(f"manifest entry {name!r} is empty")
    return data


def _tag_of(name: str) -> str:
    for suffix in ("_bound_vs_cn.csv", "_vs_cn.csv", "_vs_lm.csv",
                   "_to_opt.csv", "_traj.csv"):
        if name.endswith(suffix):
            return name[:-len(suffix)]
    return name.rsplit(".", 1)[0]


def _eps_alpha_labels(tag: str):
    """('pow1_a1', 'zero') from a run tag like vm_e-pow1_a1_a-zero."""
    try:
        rest = tag.split("_e-", 1)[1]
        eps_label, alpha_label = rest.split("_a-", 1)
        return eps_label, alpha_label
    except (IndexError, ValueError):
        return tag, ""


def _grouped_sweep(manifest: dict):
    """{alpha label: {column: [csv names sorted by eps label]}}."""
    rows = {}
    for name in sorted(manifest["files"]):
        for col in PANEL_COLUMNS:
            if name.endswith(f"_{col}.csv") and not \
                    name.endswith(f"_bound_{col}.csv"):
                eps_label, alpha_label = _eps_alpha_labels(_tag_of(name))
                rows.setdefault(alpha_label, {}).setdefault(
                    col, []).append(name)
    return rows


def render_panel_grid(spec: FigureSpec, manifest: dict, out_dir: Path):
    rows = _grouped_sweep(manifest)
    if not rows:
        raise RenderError("manifest holds no sweep CSVs to plot")
    row_labels = sorted(rows)
    cols = [c for c in PANEL_COLUMNS
            if any(c in rows[r] for r in row_labels)]
    fig, axes = plt.subplots(len(row_labels), len(cols), squeeze=False,
                             figsize=(4.2 * len(cols),
                                      3.2 * len(row_labels)))
    bounds = [n for n in sorted(manifest["files"])
              if n.endswith("_bound_vs_cn.csv")]
    for i, alpha_label in enumerate(row_labels):
        for j, col in enumerate(cols):
            ax = axes[i][j]
            ax.set_gid(f"panel-{i}-{j}")
            for k, name in enumerate(rows[alpha_label].get(col, [])):
                data = _read_csv(manifest, name)
                ycol = "distance" if col != "to_opt" else "dist_to_opt"
                eps_label, _ = _eps_alpha_labels(_tag_of(name))
                (line,) = ax.plot(data["t"], data[ycol],
                                  color=BLUES[k % len(BLUES)],
                                  label=f"eps {eps_label}")
                line.set_gid(f"series-{name}")
            if spec.overlay_envelopes and col == "vs_cn":
                for name in bounds:
                    _, alpha_of = _eps_alpha_labels(_tag_of(name))
                    if alpha_of != alpha_label:
                        continue
                    data = _read_csv(manifest, name)
                    (line,) = ax.plot(data["t"], data["envelope"],
                                      linestyle="-.", linewidth=0.7,
                                      color="0.4")
                    line.set_gid(f"envelope-{name}")
            if spec.log_y:
                ax.set_yscale("log")
            ax.set_xlabel("t")
            ax.set_title(f"{COLUMN_TITLES[col]} (alpha {alpha_label})",
                         fontsize=9)
            if spec.legend_from_tags:
                ax.legend(fontsize=6)
    fig.tight_layout()
    return _save(fig, out_dir, spec.figure)


def render_trajectories(spec: FigureSpec, manifest: dict, out_dir: Path):
    names = [n for n in sorted(manifest["files"])
             if n.endswith("_traj.csv") or n == "traj_cn.csv"]
    if not names:
        raise RenderError("manifest holds no trajectory CSVs to plot")
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.set_gid("panel-0-0")
    k = 0
    for name in names:
        data = _read_csv(manifest, name)
        if "x_1" not in (data.dtype.names or ()):
            raise RenderError(
                f"trajectory {name!r} is not two-dimensional")
        if name == "traj_cn.csv":
            style = dict(color="black", linewidth=2.0, label="Newton flow")
        else:
            style = dict(color=BLUES[k % len(BLUES)],
                         label=_tag_of(name))
            k += 1
        (line,) = ax.plot(data["x_0"], data["x_1"], **style)
        line.set_gid(f"series-{name}")
    ax.set_xlabel("x_0")
    ax.set_ylabel("x_1")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_dir, spec.figure)


def render_mode_comparison(spec: FigureSpec, manifest: dict,
                           out_dir: Path):
    names = [n for n in sorted(manifest["files"])
             if n.endswith("_lg.csv")]
    if not names:
        raise RenderError("manifest holds no per-mode CSVs to plot")
    fig, axes = plt.subplots(1, len(names), squeeze=False,
                             figsize=(4.2 * len(names), 3.4))
    for j, name in enumerate(names):
        ax = axes[0][j]
        ax.set_gid(f"panel-0-{j}")
        data = _read_csv(manifest, name)
        eps_label, alpha_label = _eps_alpha_labels(_tag_of(name))
        palette = REDS if alpha_label not in ("", "zero") else BLUES
        for k, col in enumerate(("x_vm", "x_cn", "x_lm", "x_lg")):
            (line,) = ax.plot(data["t"], np.abs(data[col]),
                              color=palette[k % len(palette)], label=col)
            line.set_gid(f"series-{name}:{col}")
        band = ax.fill_between(data["t"], np.abs(data["lg_lower"]),
                               np.abs(data["lg_upper"]), alpha=0.2,
                               color=palette[0])
        band.set_gid(f"envelope-{name}")
        if spec.log_y:
            ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_title(f"eps {eps_label}, alpha {alpha_label}", fontsize=8)
        ax.legend(fontsize=6)
    fig.tight_layout()
    return _save(fig, out_dir, spec.figure)


def _save(fig, out_dir: Path, figure_id: str):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ext in ("png", "svg"):
        path = out_dir / f"{figure_id}.{ext}"
        fig.savefig(path, format=ext, dpi=120)
        written.append(path)
    plt.close(fig)
    return written


def render_figure(manifest_path, figure: str, out_dir) -> list:
    """Render one figure from a manifest; returns the written paths."""
    if figure not in FIGURE_IDS:
        raise RenderError(f"unknown figure id {figure!r}")
    manifest = load_manifest(manifest_path)
    spec = FigureSpec(manifest_path=Path(manifest_path), figure=figure)
    out_dir = Path(out_dir)
    if figure == "fig1_right":
        return render_trajectories(spec, manifest, out_dir)
    if figure == "fig5":
        return render_mode_comparison(spec, manifest, out_dir)
    return render_panel_grid(spec, manifest, out_dir)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="vmfigures",
        description="Render vmlab manifest CSVs as PNG/SVG figures")
    p.add_argument("--manifest", required=True)
    p.add_argument("--figure", required=True, choices=FIGURE_IDS)
    p.add_argument("--out", required=True)
    args = p.parse_args(argv)
    try:
        written = render_figure(args.manifest, args.figure, args.out)
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
