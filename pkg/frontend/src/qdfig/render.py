"""Builds matplotlib figures from the simulator's CSV output.

Everything is read-only: tables come in from disk, a Figure goes out.
Time axes are converted ns -> ps at plot time; the stored numbers are
never touched, so the plotted series equal the file contents up to that
single unit factor.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .spec import FigureSpec, SpecError


class RenderError(ValueError):
    """Missing or malformed input data."""


_UNIT_SCALE = {"time_ns": 1e3, "delay_ns": 1e3, "detuning_ghz": 1.0, "power_nw": 1.0}
_AXIS_LABEL = {
    "time_ns": "time (ps)",
    "delay_ns": "delay (ps)",
    "detuning_ghz": "detuning (GHz)",
    "power_nw": "average power (nW)",
}


def read_table(path: Path) -> dict[str, np.ndarray]:
    """CSV -> ordered column dict. Header row names the columns."""
    try:
        text = Path(path).read_text()
    except OSError:
        raise RenderError(f"missing input file: {path}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise RenderError(f"{path}: no data rows")
    names = [c.strip() for c in lines[0].split(",")]
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(names):
            raise RenderError(
                f"{path}: row {k} has {len(cells)} cells, header has {len(names)}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise RenderError(f"{path}: row {k}: {exc}") from None
    data = np.array(rows)
    return {name: data[:, j] for j, name in enumerate(names)}


def _column(table, name: str, path: Path, kind: str) -> np.ndarray:
    if name not in table:
        raise RenderError(
            f"{path}: missing column {name!r} (required for kind {kind!r}; "
            f"found: {', '.join(table)})"
        )
    return table[name]


def _axis(table, name: str, path: Path, kind: str):
    return _column(table, name, path, kind) * _UNIT_SCALE[name]


def _sidecar_caption(spec: FigureSpec) -> str:
    """seed/version from the run's meta file next to the first input."""
    first = spec.inputs[0]
    prefix = first.name.split("_", 1)[0]
    meta_path = first.parent / f"{prefix}_meta.json"
    try:
        meta = json.loads(meta_path.read_text())
    except (OSError, json.JSONDecodeError):
        return "no run metadata sidecar"
    return f"qdcav {meta.get('version', '?')}, seed {meta.get('seed')}"


def _finish(fig: Figure, spec: FigureSpec):
    fig.text(0.01, 0.005, _sidecar_caption(spec), fontsize=7, color="0.35")
    if spec.title:
        fig.suptitle(spec.title)
    return fig


def _overlay(spec: FigureSpec, axis_col: str, y_col: str, y_label: str) -> Figure:
    fig = Figure(figsize=(5.2, 3.6), constrained_layout=True)
    ax = fig.subplots()
    for i, path in enumerate(spec.inputs):
        table = read_table(path)
        x = _axis(table, axis_col, path, spec.kind)
        y = _column(table, y_col, path, spec.kind)
        ax.plot(x, y, label=spec.label_for(i))
    ax.set_xlabel(spec.x_label or _AXIS_LABEL[axis_col])
    ax.set_ylabel(spec.y_label or y_label)
    ax.legend(fontsize=8)
    return fig


def _build_spectrum(spec):
    return _overlay(spec, "detuning_ghz", "T", "transmission (1/ns)")


def _build_saturation(spec):
    return _overlay(spec, "detuning_ghz", "T", "transmission (1/ns)")


def _build_two_pulse(spec):
    return _overlay(spec, "delay_ns", "y", "normalized transmission")


def _build_pl_decay(spec):
    fig = Figure(figsize=(5.2, 5.0), constrained_layout=True)
    ax_i, ax_p = fig.subplots(2, 1, sharex=True)
    for i, path in enumerate(spec.inputs):
        table = read_table(path)
        x = _axis(table, "time_ns", path, spec.kind)
        ax_i.plot(x, _column(table, "I", path, spec.kind), label=spec.label_for(i))
        ax_p.plot(x, _column(table, "p_e", path, spec.kind), label=spec.label_for(i))
    ax_i.set_ylabel(spec.y_label or "emission rate (1/ns)")
    ax_p.set_ylabel("excited-state population")
    ax_p.set_xlabel(spec.x_label or _AXIS_LABEL["time_ns"])
    ax_i.legend(fontsize=8)
    return fig


def _build_cw_pulse(spec):
    # files named ..._delta go to their own panel under the raw traces
    main = [(i, p) for i, p in enumerate(spec.inputs) if not p.stem.endswith("_delta")]
    diff = [(i, p) for i, p in enumerate(spec.inputs) if p.stem.endswith("_delta")]
    rows = 2 if (main and diff) else 1
    fig = Figure(figsize=(5.2, 2.8 * rows), constrained_layout=True)
    axes = fig.subplots(rows, 1, sharex=True)
    axes = np.atleast_1d(axes)
    ax_main = axes[0]
    ax_diff = axes[-1]
    for i, path in main or diff:
        table = read_table(path)
        x = _axis(table, "time_ns", path, spec.kind)
        ax_main.plot(x, _column(table, "T", path, spec.kind), label=spec.label_for(i))
    if main and diff:
        for i, path in diff:
            table = read_table(path)
            x = _axis(table, "time_ns", path, spec.kind)
            ax_diff.plot(
                x, _column(table, "T", path, spec.kind), label=spec.label_for(i)
            )
        ax_diff.set_ylabel("differential transmission (1/ns)")
        ax_diff.axhline(0.0, lw=0.6, color="0.6")
    ax_main.set_ylabel(spec.y_label or "transmission (1/ns)")
    ax_diff.set_xlabel(spec.x_label or _AXIS_LABEL["time_ns"])
    ax_main.legend(fontsize=8)
    return fig


_BUILDERS = {
    "spectrum": _build_spectrum,
    "pl-decay": _build_pl_decay,
    "cw-pulse": _build_cw_pulse,
    "detuned-control": _build_cw_pulse,
    "two-pulse": _build_two_pulse,
    "saturation": _build_saturation,
}


def build_figure(spec: FigureSpec) -> Figure:
    try:
        builder = _BUILDERS[spec.kind]
    except KeyError:
        raise SpecError(
            f"no figure renderer for kind {spec.kind!r}; "
            f"renderable: {', '.join(sorted(_BUILDERS))}"
        ) from None
    return _finish(builder(spec), spec)


def render(spec: FigureSpec, out: str | Path | None = None) -> Path:
    """Build and save; returns the written path."""
    target = Path(out) if out is not None else spec.out
    if target is None:
        raise SpecError("no output path: pass one or set 'out' in the spec")
    fig = build_figure(spec)
    target = Path(target)
    if target.parent != Path(""):
        target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target)
    return target
