"""Independent evaluation: Monte Carlo and grid MSE, entropy, cell shape, PAPR, RD bound."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .codebook import Codebook, SourceModel, nearest
from .errors import GridTooCoarse, ZeroPower
from .quadrature import QuadratureGrid, cell_sums
from .sampling import map_chunks

Z95 = 1.959963984540054


@dataclass(frozen=True)
class CellStats:
    index: int
    probability: float
    conditional_mse: float
    volume: float
    nmi: float
    clipped: bool = False


@dataclass(frozen=True)
class DistortionReport:
    mse: float
    mse_db: float
    rate_bits: float
    samples_used: int
    ci_halfwidth: float
    seed: int | None = None
    scheme: str | None = None
    N: int | None = None
    sigma2: float | None = None
    entropy_bits: float | None = None
    per_cell: list[CellStats] | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.per_cell is None:
            d.pop("per_cell")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _mc_pass(codebook: Codebook, source: SourceModel, num_samples: int, seed: int):
    n = codebook.N

    def job(x):
        idx, d2 = nearest(codebook, x, workers=1)
        return d2.sum(), (d2 * d2).sum(), np.bincount(idx, minlength=n)

    parts = map_chunks(job, num_samples, source.sigma2, seed)
    s1 = s2 = 0.0
    counts = np.zeros(n, dtype=np.int64)
    for a, b, c in parts:  # fixed chunk order
        s1 += float(a)
        s2 += float(b)
        counts += c
    return s1, s2, counts


def mc_distortion(codebook: Codebook, source: SourceModel | None = None,
                  num_samples: int = 1_000_000, seed: int = 0) -> DistortionReport:
    """Monte Carlo MSE with a 95% normal-approximation confidence half-width."""
    source = source or SourceModel(codebook.sigma2)
    if num_samples < 2:
        raise ValueError("need at least 2 samples")
    s1, s2, counts = _mc_pass(codebook, source, num_samples, seed)
    mse = s1 / num_samples
    var = max(s2 / num_samples - mse * mse, 0.0) * num_samples / (num_samples - 1)
    ci = Z95 * math.sqrt(var / num_samples)
    return DistortionReport(
        mse=mse,
        mse_db=10.0 * math.log10(mse / source.sigma2) if mse > 0 else -math.inf,
        rate_bits=math.log2(codebook.N),
        samples_used=num_samples,
        ci_halfwidth=ci,
        seed=seed,
        scheme=codebook.scheme.value,
        N=codebook.N,
        sigma2=source.sigma2,
        entropy_bits=_entropy(counts),
    )


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log2(p))) + 0.0


def empirical_cell_probabilities(codebook: Codebook, source: SourceModel | None = None,
                                 num_samples: int = 1_000_000, seed: int = 0) -> np.ndarray:
    source = source or SourceModel(codebook.sigma2)
    _, _, counts = _mc_pass(codebook, source, num_samples, seed)
    return counts / num_samples


def empirical_entropy(codebook: Codebook, source: SourceModel | None = None,
                      num_samples: int | None = None, seed: int = 0) -> float:
    """Index entropy in bits from empirical cell frequencies (``0 log 0 = 0``)."""
    source = source or SourceModel(codebook.sigma2)
    num_samples = num_samples or max(100 * codebook.N, 10_000)
    _, _, counts = _mc_pass(codebook, source, num_samples, seed)
    return _entropy(counts)


def cell_statistics(codebook: Codebook, source: SourceModel | None = None,
                    grid: QuadratureGrid | None = None) -> list[CellStats]:
    """Per-cell mass, conditional MSE, area and normalized moment of inertia.

    ``nmi = (1/2) * integral_cell |x - centroid|^2 dx / V^2`` with the uniform
    measure, so a square cell with its centroid at the centre gives 1/12.
    Cells reaching the grid edge have their area clipped and are flagged.
    """
    source = source or SourceModel(codebook.sigma2)
    grid = grid or QuadratureGrid.for_source(source)
    sums = cell_sums(codebook, source, grid)
    if np.any(sums.count == 0):
        n = int(np.flatnonzero(sums.count == 0)[0]) + 1
        raise GridTooCoarse(f"cell {n} contains no grid points; refine the grid")
    out = []
    for k in range(codebook.N):
        v = float(sums.area[k])
        out.append(CellStats(
            index=k + 1,
            probability=float(sums.mass[k]),
            conditional_mse=float(sums.m2[k] / sums.mass[k]) if sums.mass[k] > 0 else 0.0,
            volume=v,
            nmi=float(0.5 * sums.u2[k] / (v * v)),
            clipped=bool(sums.on_edge[k]),
        ))
    return out


def grid_report(codebook: Codebook, source: SourceModel | None = None,
                grid: QuadratureGrid | None = None) -> DistortionReport:
    source = source or SourceModel(codebook.sigma2)
    grid = grid or QuadratureGrid.for_source(source)
    cells = cell_statistics(codebook, source, grid)
    mse = float(sum(c.probability * c.conditional_mse for c in cells))
    return DistortionReport(
        mse=mse, mse_db=10 * math.log10(mse / source.sigma2), rate_bits=math.log2(codebook.N),
        samples_used=0, ci_halfwidth=0.0, scheme=codebook.scheme.value, N=codebook.N,
        sigma2=source.sigma2, entropy_bits=_entropy([c.probability for c in cells]), per_cell=cells,
        metadata={"grid_extent": grid.extent, "grid_m": grid.resolution},
    )


def papr(codebook: Codebook, weights=None) -> float:
    """Peak-to-average power ratio in dB, uniform weights unless given."""
    p = np.abs(codebook.centroids) ** 2
    if weights is None:
        avg = float(np.mean(p))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != p.shape or np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-9):
            raise ValueError("weights must be a probability vector over the centroids")
        avg = float(np.dot(w, p))
    if p.max() == 0.0 or avg == 0.0:
        raise ZeroPower("all centroids carry zero power")
    return 10.0 * math.log10(p.max() / avg)


def rd_reference(sigma2: float, rates) -> list[tuple[float, float]]:
    """Shannon bound ``D = sigma2 * 2**-R`` for each rate (bits per complex sample)."""
    out = []
    for r in rates:
        if r < 0:
            raise ValueError(f"rate must be >= 0, got {r}")
        out.append((float(r), sigma2 * 2.0 ** (-r)))
    return out


# -- Voronoi polygons for plotting -------------------------------------------

def _clip(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Keep the part of ``poly`` with ``normal . p <= offset``."""
    if poly.size == 0:
        return poly
    s = poly @ normal - offset
    out = []
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        sa, sb = s[k], s[(k + 1) % n]
        if sa <= 0:
            out.append(a)
        if (sa < 0 < sb) or (sb < 0 < sa):
            out.append(a + (b - a) * (sa / (sa - sb)))
    return np.array(out).reshape(-1, 2)


def voronoi_polygons(codebook: Codebook, extent: float) -> list[np.ndarray]:
    """Voronoi cell of every centroid clipped to ``[-extent, extent]^2``.

    Each cell starts as the box and is cut by the bisector with every other
    centroid, nearest first, until no remaining centroid can cut it.
    """
    pts = np.column_stack([codebook.centroids.real, codebook.centroids.imag])
    box = np.array([[-extent, -extent], [extent, -extent], [extent, extent], [-extent, extent]])
    polys = []
    for k, c in enumerate(pts):
        d = np.hypot(*(pts - c).T)
        poly = box.copy()
        for j in np.argsort(d, kind="stable"):
            if j == k or d[j] == 0.0:
                continue
            if poly.size == 0 or np.max(np.hypot(*(poly - c).T)) <= d[j] / 2:
                break
            normal = pts[j] - c
            poly = _clip(poly, normal, float(normal @ (pts[j] + c)) / 2)
        polys.append(poly)
    return polys
