"""Two-panel SVG line chart of the simulation means."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

from jinja2 import Environment, FileSystemLoader, select_autoescape

from ..models import SimulationResult

_TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"

_PANEL_WIDTH = 360.0
_PANEL_HEIGHT = 240.0
_MARGIN = 48.0
_DASHES: Dict[str, str] = {"solid": "", "dotted": "2 4", "dashed": "8 5"}


@dataclass(slots=True)
class Series:
    label: str
    style: str
    points: str
    axis: str


@dataclass(slots=True)
class Panel:
    title: str
    offset: float
    left_max: float
    right_max: float
    series: List[Series]


def _scale_points(values: Sequence[float], top: float) -> str:
    count = len(values)
    top = top if top > 0.0 else 1.0
    coordinates = []
    for index, value in enumerate(values):
        x = _MARGIN + (_PANEL_WIDTH * index / (count - 1) if count > 1 else _PANEL_WIDTH / 2.0)
        y = _MARGIN + _PANEL_HEIGHT * (1.0 - value / top)
        coordinates.append(f"{x:.2f},{y:.2f}")
    return " ".join(coordinates)


def _panel(title: str, offset: float, left: Dict[str, Sequence[float]], right: Dict[str, Sequence[float]], styles: Dict[str, str]) -> Panel:
    left_max = max((max(values) for values in left.values()), default=1.0) * 1.05
    right_max = max((max(values) for values in right.values()), default=1.0) * 1.05
    series = [Series(label, styles[label], _scale_points(values, left_max), "left") for label, values in left.items()]
    series += [Series(label, styles[label], _scale_points(values, right_max), "right") for label, values in right.items()]
    return Panel(title=title, offset=offset, left_max=left_max, right_max=right_max, series=series)


def render_figure(result: SimulationResult) -> str:
    """Render investments with liability probabilities (left) and costs with liabilities (right)."""

    records = result.records
    investment = [record.investment for record in records]
    p_direct = [record.p_direct for record in records]
    p_indirect = [record.p_indirect for record in records]
    cost = [record.expected_cost for record in records]
    direct = [record.direct_liability for record in records]
    indirect = [record.indirect_liability for record in records]

    styles = {
        "investment": "solid",
        "p_direct": "dotted",
        "p_indirect": "dashed",
        "expected_cost": "solid",
        "direct_liability": "dotted",
        "indirect_liability": "dashed",
    }
    panels = [
        _panel("Investments and liability probabilities", 0.0, {"investment": investment}, {"p_direct": p_direct, "p_indirect": p_indirect}, styles),
        _panel(
            "Expected costs and liabilities",
            _PANEL_WIDTH + 2.5 * _MARGIN,
            {"expected_cost": cost, "direct_liability": direct, "indirect_liability": indirect},
            {},
            styles,
        ),
    ]

    env = Environment(
        loader=FileSystemLoader(str(_TEMPLATE_DIR)),
        autoescape=select_autoescape(["html", "xml", "svg", "svg.jinja"]),
        trim_blocks=True,
        lstrip_blocks=True,
    )
    template = env.get_template("figure.svg.jinja")
    return template.render(
        panels=panels,
        agents=len(records),
        reps=result.reps,
        seed=result.seed,
        width=2 * _PANEL_WIDTH + 5 * _MARGIN,
        height=_PANEL_HEIGHT + 2.5 * _MARGIN,
        panel_width=_PANEL_WIDTH,
        panel_height=_PANEL_HEIGHT,
        margin=_MARGIN,
        dashes=_DASHES,
    )


__all__ = ["render_figure"]
