"""Minimal deterministic SVG 1.1 writer for scatter-style figures."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape, quoteattr

FONT = "font-family=\"Helvetica, Arial, sans-serif\""
MARGIN = (48, 24, 56, 64)  # top, right, bottom, left


def fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-12:
        return lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


class Chart:
    """Canvas with linear x/y scales. Elements are appended in call order."""

    def __init__(self, width: int, height: int, xrange: tuple[float, float], yrange: tuple[float, float],
                 *, title: str = "", pad: bool = True,
                 margin: tuple[int, int, int, int] = MARGIN) -> None:
        if width <= 0 or height <= 0:
            raise ValueError("width and height must be positive")
        self.width, self.height = width, height
        self.xrange = _padded(*xrange) if pad else xrange
        self.yrange = _padded(*yrange) if pad else yrange
        top, right, bottom, left = margin
        self.x0, self.x1 = left, width - right
        self.y0, self.y1 = height - bottom, top
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        ]
        if title:
            self.text(width / 2, top / 2 + 4, title, size=14, anchor="middle", cls="title")

    def sx(self, x: float) -> float:
        lo, hi = self.xrange
        return self.x0 + (x - lo) / (hi - lo) * (self.x1 - self.x0)

    def sy(self, y: float) -> float:
        lo, hi = self.yrange
        return self.y0 + (y - lo) / (hi - lo) * (self.y1 - self.y0)

    def text(self, x: float, y: float, content: str, *, size: int = 11, anchor: str = "start",
             cls: str = "label", rotate: bool = False) -> None:
        transform = f' transform="rotate(-90 {fmt(x)} {fmt(y)})"' if rotate else ""
        self.parts.append(
            f'<text class="{cls}" x="{fmt(x)}" y="{fmt(y)}" font-size="{size}" text-anchor="{anchor}" '
            f'{FONT}{transform}>{escape(content)}</text>'
        )

    def axes(self, xlabel: str, ylabel: str | None, *, xticks: Sequence[float] | None = None,
             yticks: Sequence[float] | None = None) -> None:
        self.parts.append('<g class="axes" stroke="#333333" stroke-width="1" fill="none">')
        self.parts.append(f'<line x1="{fmt(self.x0)}" y1="{fmt(self.y0)}" x2="{fmt(self.x1)}" y2="{fmt(self.y0)}"/>')
        if ylabel is not None:
            self.parts.append(
                f'<line x1="{fmt(self.x0)}" y1="{fmt(self.y0)}" x2="{fmt(self.x0)}" y2="{fmt(self.y1)}"/>')
        for t in xticks if xticks is not None else ticks(*self.xrange):
            x = self.sx(t)
            self.parts.append(f'<line x1="{fmt(x)}" y1="{fmt(self.y0)}" x2="{fmt(x)}" y2="{fmt(self.y0 + 4)}"/>')
        if ylabel is not None:
            for t in yticks if yticks is not None else ticks(*self.yrange):
                y = self.sy(t)
                self.parts.append(
                    f'<line x1="{fmt(self.x0 - 4)}" y1="{fmt(y)}" x2="{fmt(self.x0)}" y2="{fmt(y)}"/>')
        self.parts.append("</g>")
        for t in xticks if xticks is not None else ticks(*self.xrange):
            self.text(self.sx(t), self.y0 + 16, fmt(t), size=9, anchor="middle", cls="tick")
        if ylabel is not None:
            for t in yticks if yticks is not None else ticks(*self.yrange):
                self.text(self.x0 - 6, self.sy(t) + 3, fmt(t), size=9, anchor="end", cls="tick")
            self.text(16, (self.y0 + self.y1) / 2, ylabel, anchor="middle", cls="axis-label", rotate=True)
        self.text((self.x0 + self.x1) / 2, self.height - 16, xlabel, anchor="middle", cls="axis-label")

    def series(self, name: str, points: Iterable[tuple[float, float, str]], color: str, radius: float) -> None:
        self.parts.append(f'<g class="series" id={quoteattr("series-" + name)} fill="{color}" '
                          f'fill-opacity="0.85">')
        for x, y, label in points:
            self.marker(x, y, radius, None, label)
        self.parts.append("</g>")

    def marker(self, x: float, y: float, radius: float, color: str | None, label: str = "") -> None:
        fill = f' fill="{color}"' if color else ""
        title = f"<title>{escape(label)}</title>" if label else ""
        self.parts.append(f'<circle class="marker" cx="{fmt(self.sx(x))}" cy="{fmt(self.sy(y))}" '
                          f'r="{fmt(radius)}"{fill}>{title}</circle>')

    def tick_mark(self, x: float, y: float, half: float, color: str, label: str = "") -> None:
        """Vertical bar at data position (x, y), ``half`` pixels above and below."""
        px, py = self.sx(x), self.sy(y)
        title = f"<title>{escape(label)}</title>" if label else ""
        self.parts.append(f'<line class="tick-mark" x1="{fmt(px)}" y1="{fmt(py - half)}" x2="{fmt(px)}" '
                          f'y2="{fmt(py + half)}" stroke="{color}" stroke-width="1.5" '
                          f'stroke-opacity="0.7">{title}</line>')

    def raw(self, element: str) -> None:
        self.parts.append(element)

    def finish(self, out: str | Path | None = None) -> str:
        doc = '<?xml version="1.0" encoding="UTF-8"?>\n' + "\n".join(self.parts + ["</svg>"]) + "\n"
        if out is not None:
            Path(out).write_text(doc, encoding="utf-8")
        return doc
