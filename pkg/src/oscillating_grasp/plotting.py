"""Plotly figures for sweep summaries and single episodes."""

from __future__ import annotations

import importlib.util
import logging
from pathlib import Path
from typing import TYPE_CHECKING

import plotly.graph_objects as go
from plotly.subplots import make_subplots

from oscillating_grasp.models import AmplitudeLevel

if TYPE_CHECKING:
    from oscillating_grasp.bench import SummaryPoint
    from oscillating_grasp.sim import EpisodeLog

logger = logging.getLogger(__name__)

LEVEL_COLORS = {
    AmplitudeLevel.NONE: "#7f7f7f",
    AmplitudeLevel.LOW: "#2ca02c",
    AmplitudeLevel.MEDIUM: "#1f77b4",
    AmplitudeLevel.HIGH: "#d62728",
}
POSE_LABELS = ("x (m)", "y (m)", "z (m)", "roll (rad)", "pitch (rad)", "yaw (rad)")


def _level_traces(
    points: list[SummaryPoint], metric: str, show_legend: bool = True
) -> list[go.Scatter]:
    traces = []
    for level in AmplitudeLevel:
        selected = sorted((p for p in points if p.level is level), key=lambda p: p.rho)
        if not selected:
            continue
        stats = [getattr(p, metric) for p in selected]
        traces.append(
            go.Scatter(
                x=[p.rho for p in selected],
                y=[s[0] for s in stats],
                error_y=dict(type="data", array=[s[1] for s in stats], visible=True),
                mode="lines+markers",
                name=level.value,
                legendgroup=level.value,
                showlegend=show_legend,
                line=dict(color=LEVEL_COLORS[level], width=2),
                marker=dict(size=6),
            )
        )
    return traces


def accuracy_figure(points: list[SummaryPoint], title: str, threshold: float) -> go.Figure:
    """Final approach accuracy against control cost, one line per amplitude level."""
    fig = go.Figure()
    for trace in _level_traces(points, "accuracy"):
        fig.add_trace(trace)
    fig.add_hline(
        y=threshold,
        line_dash="dash",
        line_color="gray",
        annotation_text="Required accuracy",
        annotation_position="bottom right",
    )
    fig.update_layout(
        title=title,
        xaxis_title="Control cost ρ",
        yaxis_title="Final approach accuracy",
        hovermode="x unified",
        height=400,
    )
    fig.update_yaxes(range=[0, 1.05])
    return fig


def distance_figure(points: list[SummaryPoint], title: str) -> go.Figure:
    """Translation and rotation travelled against control cost."""
    fig = make_subplots(rows=1, cols=2, subplot_titles=("Translation", "Rotation"))
    for trace in _level_traces(points, "translation"):
        fig.add_trace(trace, row=1, col=1)
    for trace in _level_traces(points, "rotation", show_legend=False):
        fig.add_trace(trace, row=1, col=2)
    fig.update_xaxes(title_text="Control cost ρ")
    fig.update_yaxes(title_text="Distance (m)", row=1, col=1)
    fig.update_yaxes(title_text="Distance (rad)", row=1, col=2)
    fig.update_layout(title=title, hovermode="x unified", height=400)
    return fig


def episode_figure(log: EpisodeLog, title: str = "") -> go.Figure:
    """End-effector pose against the target pose, one panel per dimension."""
    fig = make_subplots(rows=2, cols=3, subplot_titles=POSE_LABELS)
    for d in range(6):
        row, col = d // 3 + 1, d % 3 + 1
        fig.add_trace(
            go.Scatter(
                x=log.times,
                y=log.targets[:, d],
                name="target",
                legendgroup="target",
                showlegend=d == 0,
                line=dict(color="#7f7f7f", dash="dash"),
            ),
            row=row,
            col=col,
        )
        fig.add_trace(
            go.Scatter(
                x=log.times,
                y=log.states[:, d],
                name="end-effector",
                legendgroup="end-effector",
                showlegend=d == 0,
                line=dict(color="#1f77b4", width=2),
            ),
            row=row,
            col=col,
        )
    fig.update_xaxes(title_text="Time (s)", row=2)
    fig.update_layout(title=title or log.method, height=600)
    return fig


def svg_export_available() -> bool:
    """Whether the kaleido engine for static image export is installed."""
    return importlib.util.find_spec("kaleido") is not None


def write_figure(fig: go.Figure, stem: Path) -> list[Path]:
    """Write stem.html, plus stem.svg when static export is available.

    HTML is always written. SVG needs the optional kaleido engine (the
    `export` extra); without it a warning names the HTML-only fallback.

    Returns:
        Paths written
    """
    stem.parent.mkdir(parents=True, exist_ok=True)
    html = stem.with_suffix(".html")
    fig.write_html(html, include_plotlyjs="cdn")
    written = [html]
    if svg_export_available():
        svg = stem.with_suffix(".svg")
        fig.write_image(svg, format="svg")
        written.append(svg)
    else:
        logger.warning(
            "kaleido is not installed; wrote %s without an SVG copy "
            "(install the 'export' extra for SVG)",
            html.name,
        )
    return written
