"""Minimal SVG plotting: polylines, markers, colored cells and a frame."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f")


def diverging_color(x: float, vmax: float) -> str:
    """Blue (negative) through white to red (positive); NaN maps to grey."""
    if not math.isfinite(x):
        return "#bbbbbb"
    s = 0.0 if vmax <= 0 else max(-1.0, min(1.0, x / vmax))
    if s >= 0:
        r, g, b = 255, int(255 * (1 - s)), int(255 * (1 - s))
    else:
        r, g, b = int(255 * (1 + s)), int(255 * (1 + s)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def sequential_color(x: float, vmax: float) -> str:
    """White to red for nonnegative values (excess fields are nonnegative)."""
    return diverging_color(max(0.0, x) if math.isfinite(x) else x, vmax)


def simplex_xy(p: np.ndarray) -> np.ndarray:
    """Barycentric points of the 2-simplex mapped into the unit-base triangle."""
    p = np.atleast_2d(p)
    x = p[:, 1] + 0.5 * p[:, 2]
    y = p[:, 2] * math.sqrt(3) / 2
    return np.column_stack([x, y])


@dataclass
class Plot:
    xlim: tuple[float, float] = (0.0, 1.0)
    ylim: tuple[float, float] = (0.0, 1.0)
    size: int = 420
    margin: int = 36
    title: str = ""
    items: list[str] = field(default_factory=list)

    def _px(self, x, y) -> tuple[float, float]:
        w = self.size - 2 * self.margin
        px = self.margin + (x - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * w
        py = self.size - self.margin - (y - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * w
        return px, py

    def polyline(self, xy: np.ndarray, color: str = "#000000", width: float = 1.2, dash: str | None = None):
        pts = " ".join("{:.2f},{:.2f}".format(*self._px(x, y)) for x, y in np.asarray(xy))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def polygon(self, xy: np.ndarray, fill: str, stroke: str = "none"):
        pts = " ".join("{:.2f},{:.2f}".format(*self._px(x, y)) for x, y in np.asarray(xy))
        self.items.append(f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}"/>')

    def marker(self, x: float, y: float, color: str = "#000000", r: float = 3.0):
        px, py = self._px(x, y)
        self.items.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r}" fill="{color}"/>')

    def cell(self, x0: float, y0: float, x1: float, y1: float, fill: str):
        a, b = self._px(x0, y1)
        c, d = self._px(x1, y0)
        self.items.append(f'<rect x="{a:.2f}" y="{b:.2f}" width="{c - a:.2f}" height="{d - b:.2f}" fill="{fill}"/>')

    def text(self, x: float, y: float, s: str, size: int = 11):
        px, py = self._px(x, y)
        self.items.append(f'<text x="{px:.2f}" y="{py:.2f}" font-size="{size}" font-family="sans-serif">{escape(s)}</text>')

    def frame(self, xlabel: str = "", ylabel: str = ""):
        corners = np.array([[self.xlim[0], self.ylim[0]], [self.xlim[1], self.ylim[0]],
                            [self.xlim[1], self.ylim[1]], [self.xlim[0], self.ylim[1]], [self.xlim[0], self.ylim[0]]])
        self.polyline(corners, "#444444", 1.0)
        lo_x, lo_y = self._px(self.xlim[0], self.ylim[0])
        hi_x, _ = self._px(self.xlim[1], self.ylim[0])
        _, hi_y = self._px(self.xlim[0], self.ylim[1])
        fs = 10
        self.items.append(f'<text x="{lo_x:.1f}" y="{lo_y + 14:.1f}" font-size="{fs}" font-family="sans-serif">{self.xlim[0]:g}</text>')
        self.items.append(f'<text x="{hi_x - 8:.1f}" y="{lo_y + 14:.1f}" font-size="{fs}" font-family="sans-serif">{self.xlim[1]:g}</text>')
        self.items.append(f'<text x="{lo_x - 22:.1f}" y="{hi_y + 4:.1f}" font-size="{fs}" font-family="sans-serif">{self.ylim[1]:g}</text>')
        if xlabel:
            self.items.append(f'<text x="{(lo_x + hi_x) / 2:.1f}" y="{lo_y + 26:.1f}" font-size="{fs + 1}" '
                              f'font-family="sans-serif">{escape(xlabel)}</text>')
        if ylabel:
            self.items.append(f'<text x="{lo_x - 30:.1f}" y="{(lo_y + hi_y) / 2:.1f}" font-size="{fs + 1}" '
                              f'font-family="sans-serif">{escape(ylabel)}</text>')

    def svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">')
        body = ['<rect width="100%" height="100%" fill="white"/>']
        if self.title:
            body.append(f'<text x="{self.margin}" y="{self.margin - 14}" font-size="13" '
                        f'font-family="sans-serif">{escape(self.title)}</text>')
        return "\n".join([head, *body, *self.items, "</svg>"]) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.svg(), encoding="utf-8")
        return path

