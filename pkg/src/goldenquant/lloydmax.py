"""Lloyd-Max optimization of golden-quantizer radii with the angles held fixed.

Each iteration partitions the quadrature grid into the Voronoi cells of the
current codebook and moves every radius to the minimizer of its cell's
MSE along the fixed direction ``exp(i*2*pi*phi*n)``::

    r_n <- integral_cell (x cos(phi_n) + y sin(phi_n)) f  /  integral_cell f

The cell MSE is quadratic in ``r_n`` with curvature equal to the cell mass,
so projecting onto ``r >= 0`` (and onto the nondecreasing cone, weighted by
cell mass, when the growing-spiral constraint is on) is still an exact
minimizer for the fixed partition, and the grid distortion never increases.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .codebook import Codebook, Scheme, SourceModel, golden_angles, spiral_centroids
from .errors import EmptyCell, GridTooCoarse
from .highrate import highrate_radii
from .quadrature import CellSums, QuadratureGrid, cell_sums

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 500


class Init(str, Enum):
    HIGHRATE = "HighRate"
    UNIFORM = "Uniform"


@dataclass(frozen=True)
class LloydMaxState:
    radii: np.ndarray
    iteration: int = 0
    distortion_trace: tuple[float, ...] = ()
    max_radius_change: tuple[float, ...] = ()
    converged: bool = False
    monotone_constraint: bool = False
    # grid sums for the current radii, reused by the next update
    sums: CellSums | None = field(default=None, repr=False, compare=False)

    @property
    def distortion(self) -> float:
        return self.distortion_trace[-1]

    def codebook(self, sigma2: float, metadata: dict | None = None) -> Codebook:
        return spiral_centroids(self.radii, Scheme.LLOYDMAX, sigma2, metadata)


def _sums(codebook: Codebook, source: SourceModel, grid: QuadratureGrid, *, empty) -> CellSums:
    sums = cell_sums(codebook, source, grid)
    if np.any(sums.count == 0):
        n = int(np.flatnonzero(sums.count == 0)[0]) + 1
        raise empty(n, f"centroid {n} captured no grid points on a {grid.resolution}x"
                       f"{grid.resolution} grid of half-width {grid.extent:g}; "
                       "raise the grid resolution or extent")
    return sums


def lm_objective(codebook: Codebook, source: SourceModel, grid: QuadratureGrid) -> float:
    """Grid-quadrature MSE of ``codebook`` under nearest-centroid cells."""

    def empty(n, msg):
        return GridTooCoarse(msg)

    return _sums(codebook, source, grid, empty=empty).distortion


def pool_adjacent_violators(values, weights) -> np.ndarray:
    """Weighted least-squares projection onto nondecreasing sequences."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    blocks: list[list[float]] = []  # [mean, weight, length]
    for v, w in zip(values, weights):
        blocks.append([v, w, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2, n2 = blocks.pop()
            m1, w1, n1 = blocks[-1]
            wt = w1 + w2
            blocks[-1] = [(m1 * w1 + m2 * w2) / wt, wt, n1 + n2]
    return np.concatenate([np.full(n, m) for m, _, n in blocks])


def initial_state(N: int, sigma2: float = 1.0, init: Init = Init.HIGHRATE,
                  monotone: bool = False) -> LloydMaxState:
    init = Init(init)
    if init is Init.HIGHRATE:
        r = highrate_radii(N, sigma2)
    else:
        # equal source mass between consecutive rings
        u = (np.arange(1, N + 1) - 0.5) / N
        r = math.sqrt(sigma2) * np.sqrt(-np.log1p(-u))
    return LloydMaxState(radii=r, monotone_constraint=monotone)


def lm_update(state: LloydMaxState, source: SourceModel, grid: QuadratureGrid) -> LloydMaxState:
    """One constrained Lloyd step; returns a new state with the trace extended."""
    if not np.all(np.isfinite(state.radii)):
        raise ValueError("state radii must be finite")
    if state.sums is None:
        cb = spiral_centroids(state.radii, Scheme.LLOYDMAX, source.sigma2)
        sums = _sums(cb, source, grid, empty=EmptyCell)
        state = replace(state, sums=sums, distortion_trace=state.distortion_trace or (sums.distortion,))
    sums = state.sums
    direction = np.exp(1j * golden_angles(state.radii.size))
    # m1 is taken about the old centroid, so the optimal step along the ray is
    # the projected first moment over the cell mass
    step = (sums.m1 * direction.conj()).real / sums.mass
    target = state.radii + step
    new = np.maximum(target, 0.0)
    if state.monotone_constraint:
        new = np.maximum(pool_adjacent_violators(target, sums.mass), 0.0)
    cb = spiral_centroids(new, Scheme.LLOYDMAX, source.sigma2)
    new_sums = _sums(cb, source, grid, empty=EmptyCell)
    return replace(
        state,
        radii=new,
        iteration=state.iteration + 1,
        distortion_trace=state.distortion_trace + (new_sums.distortion,),
        max_radius_change=state.max_radius_change + (float(np.max(np.abs(new - state.radii))),),
        sums=new_sums,
    )


def optimize_lloydmax(N: int, sigma2: float = 1.0, init: Init = Init.HIGHRATE,
                      monotone: bool = False, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER,
                      grid: QuadratureGrid | None = None) -> tuple[Codebook, LloydMaxState]:
    """Iterate :func:`lm_update` until the relative distortion change drops below ``tol``."""
    source = SourceModel(sigma2)
    if grid is None:
        grid = QuadratureGrid.for_source(source)
    state = initial_state(N, sigma2, init, monotone)
    while state.iteration < max_iter:
        state = lm_update(state, source, grid)
        prev, cur = state.distortion_trace[-2], state.distortion_trace[-1]
        if abs(prev - cur) <= tol * abs(prev):
            state = replace(state, converged=True)
            break
    if not state.distortion_trace:
        cb = spiral_centroids(state.radii, Scheme.LLOYDMAX, sigma2)
        state = replace(state, distortion_trace=(_sums(cb, source, grid, empty=EmptyCell).distortion,))
    meta = {
        "iterations": state.iteration,
        "final_distortion": state.distortion,
        "converged": state.converged,
        "init": Init(init).value,
        "monotone": monotone,
        "tol": tol,
        "max_iter": max_iter,
        "grid_extent": grid.extent,
        "grid_m": grid.resolution,
    }
    return state.codebook(sigma2, meta), state


def write_trace_csv(state: LloydMaxState, path: str | Path) -> None:
    """Columns: iteration, distortion, max_radius_change (blank for the start point)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "distortion", "max_radius_change"])
        for k, d in enumerate(state.distortion_trace):
            change = "" if k == 0 else repr(state.max_radius_change[k - 1])
            w.writerow([k, repr(d), change])
