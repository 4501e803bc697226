"""Front normalisation, exact hypervolume, Kruskal-Wallis, z-scores and RadViz."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import chi2, rankdata


@dataclass(frozen=True)
class NormalizedFront:
    points: tuple[tuple[float, ...], ...]
    bounds: tuple[tuple[float, float], ...]  # per objective (min, max)


@dataclass(frozen=True)
class KwResult:
    H: float
    p: float
    sizes: tuple[int, ...]


def normalize(fronts: Sequence[Sequence[Sequence[float]]]) -> list[NormalizedFront]:
    """Min-max scale every front with bounds taken over their union."""
    pooled = [tuple(map(float, p)) for f in fronts for p in f]
    if not pooled:
        raise ValueError("need at least one non-empty front")
    arr = np.array(pooled)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    span = hi - lo
    bounds = tuple((float(a), float(b)) for a, b in zip(lo, hi))
    out = []
    for f in fronts:
        if len(f) == 0:
            out.append(NormalizedFront((), bounds))
            continue
        x = np.asarray(f, dtype=float)
        z = np.divide(x - lo, span, out=np.zeros_like(x), where=span > 0)
        out.append(NormalizedFront(tuple(map(tuple, np.clip(z, 0.0, 1.0).tolist())), bounds))
    return out


def _nondominated(points: list[tuple[float, ...]]) -> list[tuple[float, ...]]:
    pts = sorted(set(points))
    keep = []
    for p in pts:
        if not any(all(a <= b for a, b in zip(q, p)) for q in keep):
            keep = [q for q in keep if not all(a <= b for a, b in zip(p, q))]
            keep.append(p)
    return keep


def _wfg(points: list[tuple[float, ...]], ref: tuple[float, ...]) -> float:
    # WFG: sum of exclusive contributions, each as box volume minus the
    # hypervolume of the limited set of the points after it.
    if not points:
        return 0.0
    if len(ref) == 1:
        return ref[0] - min(p[0] for p in points)
    pts = sorted(points, key=lambda p: p[0], reverse=True)
    total = 0.0
    for i, p in enumerate(pts):
        box = math.prod(r - x for r, x in zip(ref, p))
        rest = [tuple(max(a, b) for a, b in zip(p, q)) for q in pts[i + 1:]]
        total += box - _wfg(_nondominated(rest), ref) if rest else box
    return total


def hypervolume(front: NormalizedFront | Sequence[Sequence[float]], ref: Sequence[float] | None = None) -> float:
    """Exact measure of the region dominated by the front and bounded by ref.

    Points not strictly better than ref in every objective add nothing and
    are dropped.
    """
    pts = front.points if isinstance(front, NormalizedFront) else front
    pts = [tuple(map(float, p)) for p in pts]
    if not pts:
        return 0.0
    r = tuple(map(float, ref)) if ref is not None else (1.0,) * len(pts[0])
    pts = [p for p in pts if all(x < y for x, y in zip(p, r))]
    return _wfg(_nondominated(pts), r)


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KwResult:
    """H statistic with mid-ranks and tie correction; p from the chi-square tail."""
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise ValueError("need at least two non-empty groups")
    sizes = tuple(len(g) for g in groups)
    pooled = np.concatenate([np.asarray(g, dtype=float) for g in groups])
    n = len(pooled)
    ranks = rankdata(pooled)
    _, counts = np.unique(pooled, return_counts=True)
    correction = 1.0 - float(np.sum(counts ** 3 - counts)) / (n ** 3 - n) if n > 1 else 0.0
    if correction <= 0:
        # every value identical: no evidence of any difference
        return KwResult(0.0, 1.0, sizes)
    h, start = 0.0, 0
    for k in sizes:
        r = ranks[start:start + k]
        h += r.sum() ** 2 / k
        start += k
    h = (12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)) / correction
    h = max(h, 0.0)
    return KwResult(float(h), float(chi2.sf(h, len(groups) - 1)), sizes)


def zscore(columns: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Column-wise (x - mean) / sample std; constant or single-row columns map to 0."""
    x = np.asarray(columns, dtype=float)
    if x.size == 0:
        return x.reshape(0, x.shape[1] if x.ndim == 2 else 0)
    mu = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1) if len(x) > 1 else np.zeros(x.shape[1:])
    varies = np.ptp(x, axis=0) > 0
    return np.divide(x - mu, sd, out=np.zeros_like(x), where=varies & (sd > 0))


def radviz_anchors(n: int = 7) -> np.ndarray:
    ang = 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(ang), np.sin(ang)])


def radviz_project(point: Sequence[float], anchors: np.ndarray | None = None) -> tuple[float, float]:
    w = np.asarray(point, dtype=float)
    a = radviz_anchors(len(w)) if anchors is None else np.asarray(anchors, dtype=float)
    total = w.sum()
    if total <= 0:
        return 0.0, 0.0
    xy = (w[:, None] * a).sum(axis=0) / total
    return float(xy[0]), float(xy[1])
