"""Comparison quantizers: rectangular and polar products, and an LBG-trained VQ."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import erf, ndtr, ndtri

from .codebook import Codebook, Scheme, SourceModel, nearest
from .errors import NoConvergence
from .quadrature import QuadratureGrid, cell_sums
from .sampling import sample_complex_gaussian


class Mode(str, Enum):
    UNIFORM = "Uniform"
    OPTIMAL = "Optimal"


# -- 1D densities with closed-form partial moments ---------------------------

@dataclass(frozen=True)
class GaussianPerDim:
    """Zero-mean normal with variance ``var``."""

    var: float

    @property
    def mean(self) -> float:
        return 0.0

    def partial_moments(self, a, b):
        """Mass, first and second moments of the density over ``[a, b]``."""
        s = math.sqrt(self.var)
        a = np.atleast_1d(np.asarray(a, dtype=float) / s)
        b = np.atleast_1d(np.asarray(b, dtype=float) / s)
        pa = np.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
        pb = np.exp(-0.5 * b * b) / math.sqrt(2 * math.pi)
        with np.errstate(invalid="ignore"):
            apa = a * pa
            bpb = b * pb
        apa[~np.isfinite(a)] = 0.0
        bpb[~np.isfinite(b)] = 0.0
        mass = ndtr(b) - ndtr(a)
        m1 = s * (pa - pb)
        m2 = self.var * (mass + apa - bpb)
        return mass, m1, m2

    def quantile(self, u):
        return math.sqrt(self.var) * ndtri(u)


@dataclass(frozen=True)
class Rayleigh:
    """Magnitude of the complex Gaussian: ``f(r) = 2r/s2 exp(-r^2/s2)``, ``r >= 0``."""

    sigma2: float

    @property
    def mean(self) -> float:
        return math.sqrt(math.pi * self.sigma2) / 2.0

    def partial_moments(self, a, b):
        s = math.sqrt(self.sigma2)
        a = np.atleast_1d(np.maximum(np.asarray(a, dtype=float), 0.0) / s)
        b = np.atleast_1d(np.maximum(np.asarray(b, dtype=float), 0.0) / s)
        ea = np.exp(-a * a)
        eb = np.exp(-b * b)

        def first(t, e):
            with np.errstate(invalid="ignore"):
                te = -t * e
            te[~np.isfinite(t)] = 0.0
            return te + 0.5 * math.sqrt(math.pi) * erf(t)

        def second(t, e):
            with np.errstate(invalid="ignore"):
                v = -(t * t + 1.0) * e
            v[~np.isfinite(t)] = 0.0
            return v

        mass = ea - eb
        m1 = s * (first(b, eb) - first(a, ea))
        m2 = self.sigma2 * (second(b, eb) - second(a, ea))
        return mass, m1, m2

    def quantile(self, u):
        return math.sqrt(self.sigma2) * np.sqrt(-np.log1p(-np.asarray(u, dtype=float)))


@dataclass(frozen=True)
class ScalarQuantizer:
    levels: np.ndarray
    boundaries: np.ndarray
    mse: float
    iterations: int = 0
    converged: bool = True

    @property
    def N(self) -> int:
        return int(self.levels.size)


def scalar_mse(pdf, levels, boundaries) -> float:
    edges = np.concatenate([[-np.inf], boundaries, [np.inf]])
    mass, m1, m2 = pdf.partial_moments(edges[:-1], edges[1:])
    return float(np.sum(m2 - 2 * levels * m1 + levels * levels * mass))


def _centroids(pdf, boundaries, old):
    edges = np.concatenate([[-np.inf], boundaries, [np.inf]])
    mass, m1, _ = pdf.partial_moments(edges[:-1], edges[1:])
    return np.where(mass > 0, m1 / np.where(mass > 0, mass, 1.0), old)


def _polish(pdf, levels):
    """Quasi-Newton descent on the MSE; its gradient is ``2 (y*mass - m1)`` per cell."""

    def fun(y):
        y = np.sort(y)
        edges = np.concatenate([[-np.inf], 0.5 * (y[:-1] + y[1:]), [np.inf]])
        mass, m1, m2 = pdf.partial_moments(edges[:-1], edges[1:])
        return float(np.sum(m2 - 2 * y * m1 + y * y * mass)), 2.0 * (y * mass - m1)

    res = minimize(fun, levels, jac=True, method="L-BFGS-B",
                   options={"ftol": 0.0, "gtol": 1e-15, "maxiter": 5000})
    return np.sort(res.x) if res.fun <= fun(levels)[0] else levels


def lloyd_scalar(pdf, N: int, tol: float = 1e-11, max_iter: int = 20_000) -> ScalarQuantizer:
    """Classical 1D Lloyd-Max iteration using closed-form cell moments.

    Starts from the conditional means of equal-probability cells. Plain
    Lloyd steps converge linearly, so every 200 steps the levels are
    polished with L-BFGS before iterating on. On budget exhaustion the
    best iterate is returned with ``converged=False`` and a
    :class:`NoConvergence` warning.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if N == 1:
        lv = np.array([pdf.mean])
        return ScalarQuantizer(lv, np.empty(0), scalar_mse(pdf, lv, np.empty(0)))
    b = pdf.quantile(np.arange(1, N) / N)
    levels = _centroids(pdf, b, np.zeros(N))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if it % 200 == 0:
            levels = _polish(pdf, levels)
        b = 0.5 * (levels[:-1] + levels[1:])
        new = _centroids(pdf, b, levels)
        shift = float(np.max(np.abs(new - levels)))
        levels = new
        if shift <= tol * max(1.0, float(np.max(np.abs(levels)))):
            converged = True
            break
    b = 0.5 * (levels[:-1] + levels[1:])
    if not converged:
        warnings.warn(f"scalar Lloyd did not converge in {max_iter} iterations", NoConvergence)
    return ScalarQuantizer(levels, b, scalar_mse(pdf, levels, b), it, converged)


def uniform_scalar(pdf, N: int) -> ScalarQuantizer:
    """Equal-width levels centred on the mean; the step size minimizes MSE."""
    if N == 1:
        return lloyd_scalar(pdf, 1)
    k = np.arange(N) - (N - 1) / 2.0

    def mse(step):
        lv = pdf.mean + step * k
        return scalar_mse(pdf, lv, 0.5 * (lv[:-1] + lv[1:]))

    scale = math.sqrt(pdf.var)
    res = minimize_scalar(mse, bounds=(1e-6 * scale, 8.0 * scale / (N - 1) + scale),
                          method="bounded", options={"xatol": 1e-12 * scale})
    lv = pdf.mean + res.x * k
    b = 0.5 * (lv[:-1] + lv[1:])
    return ScalarQuantizer(lv, b, scalar_mse(pdf, lv, b))


# -- product quantizers ------------------------------------------------------

def build_rect(N_per_dim: int, sigma2: float = 1.0, mode: Mode = Mode.OPTIMAL) -> Codebook:
    """Cartesian product of two identical scalar quantizers (variance sigma2/2 each)."""
    mode = Mode(mode)
    pdf = GaussianPerDim(sigma2 / 2.0)
    sq = lloyd_scalar(pdf, N_per_dim) if mode is Mode.OPTIMAL else uniform_scalar(pdf, N_per_dim)
    re, im = np.meshgrid(sq.levels, sq.levels)
    meta = {"mode": mode.value, "N_per_dim": N_per_dim, "scalar_mse": sq.mse,
            "analytic_mse": 2.0 * sq.mse}
    return Codebook((re + 1j * im).ravel(), Scheme.RECT, sigma2, meta)


@dataclass(frozen=True)
class PolarAllocation:
    N_mag: int
    N_phase: int

    @property
    def N(self) -> int:
        return self.N_mag * self.N_phase


def divisor_pairs(N: int) -> list[PolarAllocation]:
    return [PolarAllocation(d, N // d) for d in range(1, N + 1) if N % d == 0]


def polar_codebook(alloc: PolarAllocation, sigma2: float = 1.0, mode: Mode = Mode.OPTIMAL) -> Codebook:
    mode = Mode(mode)
    pdf = Rayleigh(sigma2)
    if mode is Mode.OPTIMAL:
        mags = lloyd_scalar(pdf, alloc.N_mag).levels
    else:
        edges = pdf.quantile(np.arange(1, alloc.N_mag) / alloc.N_mag)
        mags = _centroids(pdf, edges, np.zeros(alloc.N_mag))
    phases = 2 * math.pi * np.arange(alloc.N_phase) / alloc.N_phase
    c = (mags[:, None] * np.exp(1j * phases)[None, :]).ravel()
    meta = {"mode": mode.value, "N_mag": alloc.N_mag, "N_phase": alloc.N_phase}
    return Codebook(c, Scheme.POLAR, sigma2, meta)


def build_polar(N: int, sigma2: float = 1.0, mode: Mode = Mode.OPTIMAL,
                grid: QuadratureGrid | None = None) -> tuple[Codebook, PolarAllocation]:
    """Best magnitude/phase split of ``N`` by grid-quadrature MSE over all divisor pairs."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    source = SourceModel(sigma2)
    grid = grid or QuadratureGrid.for_source(source, resolution=1024)
    best = None
    scores = {}
    for alloc in divisor_pairs(N):
        cb = polar_codebook(alloc, sigma2, mode)
        d = cell_sums(cb, source, grid).distortion
        scores[f"{alloc.N_mag}x{alloc.N_phase}"] = d
        if best is None or d < best[0]:
            best = (d, cb, alloc)
    d, cb, alloc = best
    meta = dict(cb.metadata, grid_mse=d, allocation_scores=scores)
    return Codebook(cb.centroids, Scheme.POLAR, sigma2, meta), alloc


# -- LBG ---------------------------------------------------------------------

_STAGE_ITER = 50


def _lloyd_vq(samples, cb, tol, max_iter, trace):
    n = cb.size
    dist = math.inf
    for _ in range(max_iter):
        book = Codebook(cb, Scheme.LBG)
        idx, d2 = nearest(book, samples)
        cur = float(np.mean(d2))
        trace.append(cur)
        counts = np.bincount(idx, minlength=n)
        sre = np.bincount(idx, weights=samples.real, minlength=n)
        sim = np.bincount(idx, weights=samples.imag, minlength=n)
        new = cb.copy()
        live = counts > 0
        new[live] = (sre[live] + 1j * sim[live]) / counts[live]
        empty = np.flatnonzero(~live)
        if empty.size:
            # reseed onto the samples worst served by the current codebook
            far = np.argsort(-d2, kind="stable")[: empty.size]
            new[empty] = samples[far]
        cb = new
        if empty.size == 0 and dist - cur <= tol * cur:
            break
        dist = cur
    trace.append(float(np.mean(nearest(Codebook(cb, Scheme.LBG), samples)[1])))
    return cb


def train_lbg(N: int, sigma2: float = 1.0, num_samples: int | None = None, seed: int = 0,
              tol: float = 1e-6, max_iter: int = 200, perturbation: float = 1e-3) -> Codebook:
    """Generalized Lloyd (LBG) VQ trained on seeded complex Gaussian samples.

    Growth by splitting: starting from the sample mean, the cells with the
    largest distortion are split into ``c +/- delta`` until ``N`` centroids
    exist, with a Lloyd pass after each split.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    num_samples = num_samples or 100 * N
    if num_samples < 100 * N:
        raise ValueError(f"need at least {100 * N} samples, got {num_samples}")
    samples = sample_complex_gaussian(num_samples, sigma2, seed)
    cb = np.array([samples.mean()])
    trace: list[float] = []
    delta = perturbation * math.sqrt(sigma2) * complex(1.0, 0.5) / abs(complex(1.0, 0.5))
    while cb.size < N:
        idx, d2 = nearest(Codebook(cb, Scheme.LBG), samples)
        load = np.bincount(idx, weights=d2, minlength=cb.size)
        k = min(cb.size, N - cb.size)
        split = np.sort(np.argsort(-load, kind="stable")[:k])
        cb = np.concatenate([cb, cb[split] + delta])
        cb[split] -= delta
        stage: list[float] = []
        # intermediate sizes only seed the next split; the last one runs to tol
        budget = max_iter if cb.size == N else min(max_iter, _STAGE_ITER)
        cb = _lloyd_vq(samples, cb, tol, budget, stage)
        trace = stage
    if N == 1:
        trace = [float(np.mean(np.abs(samples - cb[0]) ** 2))]
    meta = {"seed": seed, "num_samples": num_samples, "tol": tol, "max_iter": max_iter,
            "train_distortion": trace[-1], "final_stage_trace": trace}
    return Codebook(cb, Scheme.LBG, sigma2, meta)
