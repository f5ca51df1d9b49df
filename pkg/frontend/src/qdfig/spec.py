"""Figure specs: which CSVs to plot, as what, where to.

A spec is a small JSON object:

    {
      "kind": "two-pulse",            # simulator scenario name
      "inputs": ["out/two-pulse_gd0.csv", "out/two-pulse_gd5.csv"],
      "labels": ["no dephasing", "gamma_d = 5"],   # optional, per input
      "title": "...",                                # optional
      "x_label": "...", "y_label": "...",            # optional overrides
      "out": "fig.png"                # optional, --out wins
    }

Kinds mirror the simulator's scenario enum; the renderer knows the axis
column and required channels for each.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class SpecError(ValueError):
    """Bad figure spec or inputs that do not match it."""


# scenario enum of the simulator CLI
SCENARIO_NAMES = (
    "spectrum",
    "pl-decay",
    "cw-pulse",
    "detuned-control",
    "two-pulse",
    "saturation",
    "nonlinear-map",
    "eigenfrequencies",
)


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[Path, ...]
    labels: tuple[str, ...] | None = None
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    out: Path | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_NAMES:
            raise SpecError(
                f"unknown figure kind {self.kind!r}; "
                f"choices: {', '.join(SCENARIO_NAMES)}"
            )
        if not self.inputs:
            raise SpecError("inputs must list at least one CSV")
        if self.labels is not None and len(self.labels) != len(self.inputs):
            raise SpecError(
                f"{len(self.labels)} labels for {len(self.inputs)} inputs"
            )

    def label_for(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return self.inputs[index].stem


def load_figure_spec(path: str | Path) -> FigureSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read figure spec: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(
            f"figure spec parse failure at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise SpecError("figure spec root must be a JSON object")
    known = {"kind", "inputs", "labels", "title", "x_label", "y_label", "out"}
    extra = sorted(set(raw) - known)
    if extra:
        raise SpecError(f"unknown figure spec fields: {', '.join(extra)}")
    for name in ("kind", "inputs"):
        if name not in raw:
            raise SpecError(f"missing required field {name!r}")
    inputs = raw["inputs"]
    if not isinstance(inputs, list) or not all(isinstance(p, str) for p in inputs):
        raise SpecError("inputs must be a list of paths")
    # relative input paths count from the spec file, not the cwd
    base = path.parent
    labels = raw.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or not all(
            isinstance(s, str) for s in labels
        ):
            raise SpecError("labels must be a list of strings")
        labels = tuple(labels)
    out = raw.get("out")
    return FigureSpec(
        kind=str(raw["kind"]),
        inputs=tuple((base / p) for p in inputs),
        labels=labels,
        title=str(raw.get("title", "")),
        x_label=str(raw.get("x_label", "")),
        y_label=str(raw.get("y_label", "")),
        out=(base / out) if out is not None else None,
    )
