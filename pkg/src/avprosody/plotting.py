"""Deterministic SVG figures: audio contours, head pitch, eyebrow raise.

Output depends only on the data (no timestamps, no random ids), so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .io import PathLike
from .pipeline import AnalysisResult
from .types import MotionTrack

WIDTH = 720
PANEL_H = 180
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 150, 28, 34
PALETTE = ["#d62728", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def _f(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10) + 0.0)
        v += step
    return ticks


class _Panel:
    def __init__(self, top: float, title: str, ylabel: str, xlim: tuple[float, float],
                 ylim: tuple[float, float]):
        self.x0, self.x1 = MARGIN_L, WIDTH - MARGIN_R
        self.y0, self.y1 = top + MARGIN_T, top + PANEL_H - MARGIN_B
        self.xlim, self.ylim = xlim, ylim
        self.title, self.ylabel = title, ylabel
        self.parts: list[str] = []
        self.legend: list[tuple[str, str, bool]] = []

    def sx(self, t):
        a, b = self.xlim
        return self.x0 + (np.asarray(t) - a) / (b - a) * (self.x1 - self.x0)

    def sy(self, v, ylim=None):
        a, b = ylim or self.ylim
        return self.y1 - (np.asarray(v) - a) / (b - a) * (self.y1 - self.y0)

    def series(self, times, values, label: str, color: str, *, dashed=False,
               width=1.5, ylim=None, legend=True):
        xs, ys = self.sx(times), self.sy(values, ylim)
        runs, cur = [], []
        for x, y in zip(xs, ys):
            if np.isnan(y):
                if cur:
                    runs.append(cur)
                cur = []
            else:
                cur.append(f"{_f(x)},{_f(y)}")
        if cur:
            runs.append(cur)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        lines = [f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} '
                 f'points="{" ".join(r)}"/>' for r in runs]
        self.parts.append(f'<g class="series" data-label={quoteattr(label)}>'
                          + "".join(lines) + "</g>")
        if legend:
            self.legend.append((label, color, dashed))

    def render(self) -> str:
        out = [f'<g class="panel" data-title={quoteattr(self.title)}>']
        out.append(f'<rect x="{self.x0}" y="{_f(self.y0)}" width="{self.x1 - self.x0}" '
                   f'height="{_f(self.y1 - self.y0)}" fill="none" stroke="#000"/>')
        out.append(f'<text x="{self.x0}" y="{_f(self.y0 - 8)}" font-size="13" '
                   f'font-weight="bold">{escape(self.title)}</text>')
        for t in _nice_ticks(*self.xlim, n=8):
            x = float(self.sx(t))
            out.append(f'<line x1="{_f(x)}" y1="{_f(self.y1)}" x2="{_f(x)}" y2="{_f(self.y1 + 4)}" stroke="#000"/>')
            out.append(f'<text x="{_f(x)}" y="{_f(self.y1 + 16)}" font-size="10" '
                       f'text-anchor="middle">{t:g}</text>')
        for v in _nice_ticks(*self.ylim, n=4):
            y = float(self.sy(v))
            out.append(f'<line x1="{self.x0 - 4}" y1="{_f(y)}" x2="{self.x0}" y2="{_f(y)}" stroke="#000"/>')
            out.append(f'<line x1="{self.x0}" y1="{_f(y)}" x2="{self.x1}" y2="{_f(y)}" '
                       f'stroke="#ddd" stroke-width="0.5"/>')
            out.append(f'<text x="{self.x0 - 6}" y="{_f(y + 3)}" font-size="10" '
                       f'text-anchor="end">{v:g}</text>')
        cy = (self.y0 + self.y1) / 2
        out.append(f'<text x="14" y="{_f(cy)}" font-size="11" text-anchor="middle" '
                   f'transform="rotate(-90 14 {_f(cy)})">{escape(self.ylabel)}</text>')
        out.append(f'<text x="{_f((self.x0 + self.x1) / 2)}" y="{_f(self.y1 + 30)}" '
                   f'font-size="11" text-anchor="middle">time [s]</text>')
        out.append(f'<clipPath id="clip{int(self.y0)}"><rect x="{self.x0}" y="{_f(self.y0)}" '
                   f'width="{self.x1 - self.x0}" height="{_f(self.y1 - self.y0)}"/></clipPath>')
        out.append(f'<g clip-path="url(#clip{int(self.y0)})">' + "".join(self.parts) + "</g>")
        for i, (label, color, dashed) in enumerate(self.legend):
            y = self.y0 + 10 + 15 * i
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            out.append(f'<line x1="{self.x1 + 10}" y1="{_f(y)}" x2="{self.x1 + 34}" y2="{_f(y)}" '
                       f'stroke="{color}" stroke-width="2"{dash}/>')
            out.append(f'<text x="{self.x1 + 40}" y="{_f(y + 4)}" font-size="10">{escape(label)}</text>')
        out.append("</g>")
        return "\n".join(out)


def _range(tracks: Sequence[MotionTrack], pad: float = 0.08) -> tuple[float, float]:
    vals = np.concatenate([t.values[t.valid] for t in tracks]) if tracks else np.zeros(0)
    if vals.size == 0:
        return (-1.0, 1.0)
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    d = (hi - lo) * pad
    return lo - d, hi + d


def _span(tracks: Sequence[MotionTrack]) -> tuple[float, float]:
    lo = min(t.start_time for t in tracks)
    hi = max(t.start_time + (len(t) - 1) / t.fps for t in tracks)
    return (lo, hi if hi > lo else lo + 1.0)


def _series_label(r: AnalysisResult, fallback: str) -> str:
    if r.strength_percent is not None:
        return f"VH {r.strength_percent:g}%"
    return fallback


def render_svg(result: AnalysisResult, overlays: Sequence[AnalysisResult] = (),
               title: Optional[str] = None) -> str:
    """SVG text for one session, with virtual-human overlays per motion panel."""
    motion = [result.pitch, result.eyebrow] + [t for o in overlays for t in (o.pitch, o.eyebrow)]
    xlim = _span(motion)
    panels: list[_Panel] = []
    top = 30.0
    if result.contours is not None:
        c = result.contours
        xlim = (min(xlim[0], 0.0), max(xlim[1], _span([c.f0, c.intensity])[1]))
        f0_lim = _range([c.f0])
        p = _Panel(top, "Audio: waveform, F0 and intensity", "F0 [Hz]", xlim, f0_lim)
        if result.waveform is not None and len(result.waveform):
            w = result.waveform
            env = w.values
            span = f0_lim[1] - f0_lim[0]
            mid = (f0_lim[0] + f0_lim[1]) / 2
            times = w.times
            pts_up = [f"{_f(x)},{_f(y)}" for x, y in zip(p.sx(times), p.sy(mid + env * span / 2))]
            pts_dn = [f"{_f(x)},{_f(y)}" for x, y in zip(p.sx(times[::-1]), p.sy(mid - env[::-1] * span / 2))]
            p.parts.append('<g class="waveform"><polygon fill="#bbb" stroke="none" points="'
                           + " ".join(pts_up + pts_dn) + '"/></g>')
            p.legend.append(("waveform", "#bbb", False))
        p.series(c.f0.times, c.f0.values, "F0", "#1f77b4", width=2)
        p.series(c.intensity.times, c.intensity.values, "intensity", "#2ca02c",
                 ylim=_range([c.intensity]), width=1.5)
        panels.append(p)
        top += PANEL_H
    for metric, name, unit in (("pitch", "Head rotation (pitch)", "pitch [deg]"),
                               ("eyebrow", "Eyebrow raise", "raise [mm]")):
        tracks = [getattr(result, metric)] + [getattr(o, metric) for o in overlays]
        p = _Panel(top, name, unit, xlim, _range(tracks))
        base = getattr(result, metric)
        p.series(base.times, base.values, result.label, "#000", dashed=True)
        for i, o in enumerate(overlays):
            t = getattr(o, metric)
            p.series(t.times, t.values, _series_label(o, o.label), PALETTE[i % len(PALETTE)])
        panels.append(p)
        top += PANEL_H

    height = int(top + 10)
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
            f'height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">')
    body = [f'<rect width="{WIDTH}" height="{height}" fill="#fff"/>',
            f'<text x="{WIDTH // 2}" y="20" font-size="15" text-anchor="middle">'
            f'{escape(title or result.label)}</text>']
    body.extend(p.render() for p in panels)
    return head + "\n" + "\n".join(body) + "\n</svg>\n"


def plot_session(result: AnalysisResult, overlays: Sequence[AnalysisResult],
                 path: PathLike, title: Optional[str] = None) -> Path:
    """Write the figure for ``result`` (plus overlays) to ``path``."""
    if len(result.pitch) == 0:
        raise ValueError("nothing to plot: empty result")
    out = Path(path)
    out.write_text(render_svg(result, overlays, title), encoding="utf-8")
    return out
