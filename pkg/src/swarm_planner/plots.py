"""Static SVG views of a front: z-scored parallel coordinates and RadViz.

Output is plain text with fixed float formatting so files are byte-stable.
"""

from __future__ import annotations

import csv
import io
from typing import Sequence

import numpy as np

from .csp import OBJECTIVE_NAMES
from .metrics import normalize, radviz_anchors, radviz_project, zscore

WIDTH, HEIGHT, PAD = 720, 420, 50


def _f(x: float) -> str:
    return f"{x:.2f}"


def _svg(body: list[str], w: int = WIDTH, h: int = HEIGHT) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" '
            f'font-family="sans-serif" font-size="11">')
    return "\n".join([head, f'<rect width="{w}" height="{h}" fill="white"/>', *body, "</svg>"]) + "\n"


def parallel_svg(points: Sequence[Sequence[float]], names: Sequence[str] = OBJECTIVE_NAMES) -> tuple[str, np.ndarray]:
    """Polylines of z-scored objectives across labelled vertical axes."""
    m = len(names)
    z = zscore(points) if len(points) else np.zeros((0, m))
    lim = max(1.0, float(np.abs(z).max())) if z.size else 1.0
    xs = [PAD + k * (WIDTH - 2 * PAD) / (m - 1) for k in range(m)]
    mid = HEIGHT / 2

    def y(v: float) -> float:
        return mid - v / lim * (HEIGHT / 2 - PAD)

    body = []
    for x, name in zip(xs, names):
        body.append(f'<line x1="{_f(x)}" y1="{PAD}" x2="{_f(x)}" y2="{HEIGHT - PAD}" stroke="#444"/>')
        body.append(f'<text x="{_f(x)}" y="{HEIGHT - PAD + 18}" text-anchor="middle">{name}</text>')
    body.append(f'<text x="8" y="{_f(y(lim))}">z={lim:.2f}</text>')
    body.append(f'<text x="8" y="{_f(y(-lim))}">z={-lim:.2f}</text>')
    for row in z:
        pts = " ".join(f"{_f(x)},{_f(y(v))}" for x, v in zip(xs, row))
        body.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-opacity="0.6"/>')
    return _svg(body), z


def radviz_svg(points: Sequence[Sequence[float]], names: Sequence[str] = OBJECTIVE_NAMES) -> tuple[str, np.ndarray]:
    """Unit circle with evenly spaced objective anchors and projected normalised points."""
    m = len(names)
    anchors = radviz_anchors(m)
    norm = np.array(normalize([points])[0].points) if len(points) else np.zeros((0, m))
    xy = np.array([radviz_project(p, anchors) for p in norm]).reshape(-1, 2)
    size = HEIGHT
    c, r = size / 2, size / 2 - PAD

    def px(x: float, y: float) -> tuple[str, str]:
        return _f(c + x * r), _f(c - y * r)

    body = [f'<circle cx="{_f(c)}" cy="{_f(c)}" r="{_f(r)}" fill="none" stroke="#444"/>']
    for (ax, ay), name in zip(anchors, names):
        x, y = px(ax, ay)
        lx, ly = px(ax * 1.12, ay * 1.12)
        body.append(f'<circle cx="{x}" cy="{y}" r="3" fill="#444"/>')
        body.append(f'<text x="{lx}" y="{ly}" text-anchor="middle">{name}</text>')
    for x0, y0 in xy:
        x, y = px(x0, y0)
        body.append(f'<circle cx="{x}" cy="{y}" r="3" fill="#d62728" fill-opacity="0.7"/>')
    return _svg(body, size, size), xy


def companion_csv(points: Sequence[Sequence[float]], transformed: np.ndarray, labels: Sequence[str],
                  names: Sequence[str] = OBJECTIVE_NAMES) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names) + list(labels))
    for raw, tr in zip(points, transformed):
        w.writerow([repr(float(v)) for v in raw] + [f"{float(v):.12g}" for v in tr])
    return buf.getvalue()
