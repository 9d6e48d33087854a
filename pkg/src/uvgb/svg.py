"""Minimal deterministic SVG line/scatter plots."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 480, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 50


def _num(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / n for i in range(n + 1)]


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    _items: list[str] = field(default_factory=list)

    def _sx(self, x: float) -> float:
        x0, x1 = self.xlim
        return MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R)

    def _sy(self, y: float) -> float:
        y0, y1 = self.ylim
        return HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B)

    def line(self, xs: Sequence[float], ys: Sequence[float], color: str = "#1f77b4", step: bool = False) -> None:
        pts = []
        prev_y = None
        for x, y in zip(xs, ys):
            if step and prev_y is not None:
                pts.append(f"{_num(self._sx(x))},{_num(self._sy(prev_y))}")
            pts.append(f"{_num(self._sx(x))},{_num(self._sy(y))}")
            prev_y = y
        if pts:
            self._items.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>'
            )

    def scatter(self, xs: Sequence[float], ys: Sequence[float], color: str = "#d62728") -> None:
        for x, y in zip(xs, ys):
            self._items.append(f'<circle cx="{_num(self._sx(x))}" cy="{_num(self._sy(y))}" r="3" fill="{color}"/>')

    def text(self, x: float, y: float, s: str) -> None:
        self._items.append(f'<text x="{_num(self._sx(x))}" y="{_num(self._sy(y))}" font-size="11">{escape(s)}</text>')

    def render(self) -> str:
        x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
        x1, y1 = WIDTH - MARGIN_R, MARGIN_T
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
            '<rect width="100%" height="100%" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="13">{escape(self.title)}</text>',
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        ]
        for t in _ticks(*self.xlim):
            sx = _num(self._sx(t))
            parts.append(f'<line x1="{sx}" y1="{y0}" x2="{sx}" y2="{y0 + 4}" stroke="black"/>')
            parts.append(f'<text x="{sx}" y="{y0 + 16}" text-anchor="middle" font-size="10">{t:g}</text>')
        for t in _ticks(*self.ylim):
            sy = _num(self._sy(t))
            parts.append(f'<line x1="{x0 - 4}" y1="{sy}" x2="{x0}" y2="{sy}" stroke="black"/>')
            parts.append(f'<text x="{x0 - 6}" y="{sy}" text-anchor="end" font-size="10">{t:g}</text>')
        parts.append(
            f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="11">{escape(self.xlabel)}</text>'
        )
        parts.append(
            f'<text x="14" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="11" '
            f'transform="rotate(-90 14 {(y0 + y1) / 2})">{escape(self.ylabel)}</text>'
        )
        parts.extend(self._items)
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path


def calibration_plot(pixels: Sequence[float], reflectance: Sequence[float], slope: float, intercept: float, r2: float) -> Plot:
    p = Plot("Reflectance vs pixel value", "mean pixel value", "% reflectance", (0.0, 255.0), (0.0, 100.0))
    p.scatter(pixels, reflectance)
    xs = [0.0, 255.0]
    ys = [min(100.0, max(0.0, slope * x + intercept)) for x in xs]
    p.line(xs, ys)
    p.text(10.0, 92.0, f"%R = {slope:.4f} px + {intercept:.3f}   R^2 = {r2:.4f}")
    return p


def pr_plot(curves: dict[str, Sequence[tuple[float, float]]], title: str = "Precision-recall") -> Plot:
    p = Plot(title, "recall", "precision", (0.0, 1.0), (0.0, 1.0))
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"]
    for i, (name, pts) in enumerate(curves.items()):
        if pts:
            p.line([r for r, _ in pts], [q for _, q in pts], palette[i % len(palette)], step=True)
            p.text(0.05, 0.1 + 0.06 * i, name)
    return p
