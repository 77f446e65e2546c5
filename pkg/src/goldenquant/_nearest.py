"""Nearest-centroid search accelerated by uniform tiling of the query points (numba kernels).

Query points are grouped into square tiles; each tile tests only the
centroids that can possibly win for some point inside it. Candidates are
scanned in index order with a strict comparison, so ties go to the
smallest centroid index, exactly as a brute-force scan would.
"""

from __future__ import annotations

import os

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _candidates(xa, xb, ya, yb, re, im, lo, cand):
    """Centroids that can be nearest to some point of the box ``[xa,xb] x [ya,yb]``.

    A centroid qualifies when its distance to the box does not exceed the
    smallest worst-case distance of any centroid; indices come out sorted.
    """
    n = re.size
    upper = np.inf
    for c in range(n):
        cx = re[c]
        cy = im[c]
        ex = max(xa - cx, 0.0, cx - xb)
        ey = max(ya - cy, 0.0, cy - yb)
        lo[c] = ex * ex + ey * ey
        fx = max(abs(cx - xa), abs(cx - xb))
        fy = max(abs(cy - ya), abs(cy - yb))
        hi = fx * fx + fy * fy
        if hi < upper:
            upper = hi
    nc = 0
    for c in range(n):
        if lo[c] <= upper:
            cand[nc] = c
            nc += 1
    return nc


@numba.njit(cache=True, nogil=True)
def nearest_kernel(px, py, re, im, tiles, out_idx, out_d2):
    """Nearest centroid of each point; ties go to the smallest index.

    Points are counting-sorted into a ``tiles x tiles`` grid over their
    bounding box and each tile scans only its culled candidate list.
    """
    n_pts = px.size
    if n_pts == 0:
        return
    x0 = px.min()
    x1 = px.max()
    y0 = py.min()
    y1 = py.max()
    sx = (x1 - x0) / tiles if x1 > x0 else 1.0
    sy = (y1 - y0) / tiles if y1 > y0 else 1.0
    key = np.empty(n_pts, dtype=np.int64)
    counts = np.zeros(tiles * tiles + 1, dtype=np.int64)
    for t in range(n_pts):
        bx = min(int((px[t] - x0) / sx), tiles - 1)
        by = min(int((py[t] - y0) / sy), tiles - 1)
        k = by * tiles + bx
        key[t] = k
        counts[k + 1] += 1
    for k in range(tiles * tiles):
        counts[k + 1] += counts[k]
    fill = counts[:-1].copy()
    order = np.empty(n_pts, dtype=np.int64)
    for t in range(n_pts):
        k = key[t]
        order[fill[k]] = t
        fill[k] += 1
    lo = np.empty(re.size)
    cand = np.empty(re.size, dtype=np.int64)
    for k in range(tiles * tiles):
        a = counts[k]
        b = counts[k + 1]
        if a == b:
            continue
        xa = np.inf
        xb = -np.inf
        ya = np.inf
        yb = -np.inf
        for s in range(a, b):
            t = order[s]
            xa = min(xa, px[t])
            xb = max(xb, px[t])
            ya = min(ya, py[t])
            yb = max(yb, py[t])
        nc = _candidates(xa, xb, ya, yb, re, im, lo, cand)
        for s in range(a, b):
            t = order[s]
            x = px[t]
            y = py[t]
            best = -1
            best_d = np.inf
            for q in range(nc):
                c = cand[q]
                dx = x - re[c]
                dy = y - im[c]
                d = dx * dx + dy * dy
                if d < best_d:
                    best_d = d
                    best = c
            out_idx[t] = best
            out_d2[t] = best_d


@numba.njit(cache=True, nogil=True)
def grid_kernel(axis, dens, re, im, tile, out):
    """Accumulate per-cell sums over the tensor grid ``axis x axis``.

    ``dens[i]`` is the separable density factor along one axis, so the
    density at ``(axis[i], axis[j])`` is ``dens[i] * dens[j]``. The grid is
    walked in ``tile x tile`` blocks; a block only tests the centroids whose
    distance to the block box does not exceed the smallest worst-case
    distance of any centroid, which keeps the search exact. Moments are
    taken about each cell's own centroid. Columns of ``out``:
    0 count, 1 mass, 2 mass*dx, 3 mass*dy, 4 mass*|d|^2,
    5 sum dx, 6 sum dy, 7 sum |d|^2, 8 touches grid edge.
    """
    m = axis.size
    n = re.size
    lo = np.empty(n)
    cand = np.empty(n, dtype=np.int64)
    for tj in range(0, m, tile):
        j1 = min(tj + tile, m)
        ya, yb = axis[tj], axis[j1 - 1]
        for ti in range(0, m, tile):
            i1 = min(ti + tile, m)
            xa, xb = axis[ti], axis[i1 - 1]
            nc = _candidates(xa, xb, ya, yb, re, im, lo, cand)
            for j in range(tj, j1):
                py = axis[j]
                fy = dens[j]
                for i in range(ti, i1):
                    px = axis[i]
                    best = -1
                    d2 = np.inf
                    for s in range(nc):
                        c = cand[s]
                        dx = px - re[c]
                        dy = py - im[c]
                        d = dx * dx + dy * dy
                        if d < d2:
                            d2 = d
                            best = c
                    c = best
                    f = dens[i] * fy
                    dx = px - re[c]
                    dy = py - im[c]
                    out[c, 0] += 1.0
                    out[c, 1] += f
                    out[c, 2] += f * dx
                    out[c, 3] += f * dy
                    out[c, 4] += f * d2
                    out[c, 5] += dx
                    out[c, 6] += dy
                    out[c, 7] += d2
                    if i == 0 or j == 0 or i == m - 1 or j == m - 1:
                        out[c, 8] = 1.0


def worker_count() -> int:
    """Worker cap from ``GQ_THREADS`` (default: all CPUs)."""
    env = os.environ.get("GQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
