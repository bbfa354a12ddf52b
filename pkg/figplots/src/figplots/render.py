"""Render flockcert CSV tables into figure images.

Each figure id owns exactly one CSV schema and one style preset:

  fig1   lambda_mu,critical_paper,critical_numeric   two curves, log y
  fig2   a,max_length                                one curve, linear y
  fig3   b,critical_v0_over_lambda2                  one curve, linear y
  fig4   a,critical_v0_over_lambda2                  one curve, log y
  decay  t,V,...                                     V(t) panel, log y

Rendering is deterministic: fixed style, pinned SVG hash salt, no
timestamps in the output metadata, so repeated runs produce byte-identical
files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

matplotlib.rcParams["svg.hashsalt"] = "figplots"

__all__ = ["FigureSpec", "SchemaError", "FIGURE_PRESETS", "load_table", "render"]


class SchemaError(ValueError):
    """Input CSV does not match the figure's schema or has no data rows."""


@dataclass(frozen=True)
class Preset:
    columns: tuple
    min_columns: bool  # True: extra columns allowed (schema is a prefix set)
    x: str
    curves: tuple  # (column, label) pairs
    xlabel: str
    ylabel: str
    log_y: bool
    title: str


FIGURE_PRESETS = {
    "fig1": Preset(
        columns=("lambda_mu", "critical_paper", "critical_numeric"),
        min_columns=False,
        x="lambda_mu",
        curves=(("critical_paper", "printed closed form"), ("critical_numeric", "numeric inversion")),
        xlabel="lambda*mu",
        ylabel="V(0)/lambda^2 (log scale)",
        log_y=True,
        title="Critical initial fluctuation, exponential delay",
    ),
    "fig2": Preset(
        columns=("a", "max_length"),
        min_columns=False,
        x="a",
        curves=(("max_length", None),),
        xlabel="a",
        ylabel="critical interval length b - a",
        log_y=False,
        title="Critical delay-interval length, uniform delay",
    ),
    "fig3": Preset(
        columns=("b", "critical_v0_over_lambda2"),
        min_columns=False,
        x="b",
        curves=(("critical_v0_over_lambda2", None),),
        xlabel="b",
        ylabel="V(0)/lambda^2",
        log_y=False,
        title="Critical initial fluctuation, uniform delay on [0, b]",
    ),
    "fig4": Preset(
        columns=("a", "critical_v0_over_lambda2"),
        min_columns=False,
        x="a",
        curves=(("critical_v0_over_lambda2", None),),
        xlabel="a",
        ylabel="V(0)/lambda^2 (log scale)",
        log_y=True,
        title="Critical initial fluctuation, triangular delay on [0, a]",
    ),
    "decay": Preset(
        columns=("t", "V"),
        min_columns=True,
        x="t",
        curves=(("V", None),),
        xlabel="t",
        ylabel="V(t) (log scale)",
        log_y=True,
        title="Velocity fluctuation decay",
    ),
}


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    input_csv: str
    output_path: str

    def preset(self) -> Preset:
        if self.figure_id not in FIGURE_PRESETS:
            raise SchemaError(
                f"unknown figure id {self.figure_id!r}; expected one of "
                f"{sorted(FIGURE_PRESETS)}"
            )
        return FIGURE_PRESETS[self.figure_id]


def load_table(spec: FigureSpec) -> dict:
    """Read and schema-check the CSV; returns column name -> list of floats."""
    preset = spec.preset()
    with open(spec.input_csv, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{spec.input_csv}: empty file, expected header {preset.columns}")
        if preset.min_columns:
            missing = [c for c in preset.columns if c not in header]
            if missing:
                raise SchemaError(
                    f"{spec.input_csv}: missing column(s) {missing} for {spec.figure_id}; "
                    f"got {header}"
                )
        elif tuple(header) != preset.columns:
            raise SchemaError(
                f"{spec.input_csv}: header {header} does not match the "
                f"{spec.figure_id} schema {list(preset.columns)}"
            )
        idx = {name: header.index(name) for name in preset.columns}
        table = {name: [] for name in preset.columns}
        for row in reader:
            for name, j in idx.items():
                table[name].append(float(row[j]))
    if not table[preset.x]:
        raise SchemaError(f"{spec.input_csv}: no data rows")
    return table


def build_figure(spec: FigureSpec, table: dict):
    preset = spec.preset()
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    x = table[preset.x]
    for column, label in preset.curves:
        ax.plot(x, table[column], lw=1.6, label=label)
    if preset.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(preset.xlabel)
    ax.set_ylabel(preset.ylabel)
    ax.set_title(preset.title)
    ax.grid(True, alpha=0.35)
    if any(label for _, label in preset.curves):
        ax.legend()
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure to spec.output_path (PNG or SVG by extension)."""
    table = load_table(spec)
    fig = build_figure(spec, table)
    try:
        if spec.output_path.lower().endswith(".svg"):
            fig.savefig(spec.output_path, metadata={"Date": None})
        else:
            fig.savefig(spec.output_path, metadata={"Software": "figplots"})
    finally:
        plt.close(fig)
    return spec.output_path
