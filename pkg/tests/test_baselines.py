import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from goldenquant.baselines import (
    GaussianPerDim,
    Mode,
    PolarAllocation,
    Rayleigh,
    build_polar,
    build_rect,
    divisor_pairs,
    lloyd_scalar,
    polar_codebook,
    train_lbg,
    uniform_scalar,
)
from goldenquant.codebook import Scheme, SourceModel
from goldenquant.evaluation import mc_distortion
from goldenquant.lloydmax import lm_objective
from goldenquant.quadrature import QuadratureGrid


def dp_optimal_mse(levels, var=1.0, bins=1500, span=7.0):
    """Optimal contiguous partition of a finely binned Gaussian (exact DP)."""
    s = math.sqrt(var)
    edges = np.linspace(-span * s, span * s, bins + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    w = np.diff(0.5 * (1 + np.vectorize(math.erf)(edges / (s * math.sqrt(2)))))
    W = np.concatenate([[0], np.cumsum(w)])
    M1 = np.concatenate([[0], np.cumsum(w * mid)])
    M2 = np.concatenate([[0], np.cumsum(w * mid * mid)])

    def cost(i, j):  # bins i..j-1, vectorized over i
        ww = W[j] - W[i]
        m1 = M1[j] - M1[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (M2[j] - M2[i]) - np.where(ww > 0, m1 * m1 / ww, 0.0)
        return c

    best = cost(np.zeros(bins + 1, int), np.arange(bins + 1))
    for _ in range(levels - 1):
        new = np.full(bins + 1, np.inf)
        for j in range(1, bins + 1):
            i = np.arange(j)
            new[j] = np.min(best[i] + cost(i, j))
        best = new
    return best[bins]


def test_gaussian_two_levels():
    q = lloyd_scalar(GaussianPerDim(1.0), 2)
    assert np.allclose(q.levels, [-math.sqrt(2 / math.pi), math.sqrt(2 / math.pi)], atol=1e-6)
    assert q.mse == pytest.approx(1 - 2 / math.pi, abs=1e-9)
    assert q.mse == pytest.approx(0.3634, abs=1e-4)


def test_gaussian_four_levels_vs_dp_oracle():
    q = lloyd_scalar(GaussianPerDim(1.0), 4)
    oracle = dp_optimal_mse(4)
    assert q.mse == pytest.approx(oracle, abs=2e-4)
    assert q.mse == pytest.approx(0.1175, abs=1e-4)


@pytest.mark.parametrize("pdf", [GaussianPerDim(0.5), GaussianPerDim(3.0), Rayleigh(1.0), Rayleigh(2.5)])
def test_single_level_is_mean(pdf):
    q = lloyd_scalar(pdf, 1)
    assert q.levels[0] == pytest.approx(pdf.mean, abs=1e-12)


@pytest.mark.parametrize("pdf, dens, lo", [
    (GaussianPerDim(0.7), lambda t: np.exp(-t * t / 1.4) / math.sqrt(1.4 * math.pi), -np.inf),
    (Rayleigh(1.3), lambda t: 2 * t / 1.3 * np.exp(-t * t / 1.3), 0.0),
])
def test_partial_moments_vs_quadrature(pdf, dens, lo):
    for a, b in [(lo, 0.3), (0.3, 1.1), (1.1, np.inf), (0.0, 2.0)]:
        if a < lo:
            continue
        mass, m1, m2 = pdf.partial_moments(np.array([a]), np.array([b]))
        for k, got in enumerate((mass, m1, m2)):
            want = integrate.quad(lambda t: t ** k * dens(t), a, b, epsabs=1e-13)[0]
            assert got[0] == pytest.approx(want, abs=1e-10)


@given(st.sampled_from([GaussianPerDim(1.0), Rayleigh(1.0), GaussianPerDim(0.25)]), st.integers(2, 24))
def test_scalar_levels_are_conditional_means(pdf, N):
    q = lloyd_scalar(pdf, N)
    assert q.converged
    assert np.all(np.diff(q.levels) > 0)
    assert np.all((q.boundaries > q.levels[:-1]) & (q.boundaries < q.levels[1:]))
    edges = np.concatenate([[-np.inf], q.boundaries, [np.inf]])
    mass, m1, _ = pdf.partial_moments(edges[:-1], edges[1:])
    assert np.allclose(q.levels, m1 / mass, rtol=0, atol=1e-9)


def test_uniform_scalar_is_worse_and_optimized():
    pdf = GaussianPerDim(1.0)
    u = uniform_scalar(pdf, 8)
    assert u.mse > lloyd_scalar(pdf, 8).mse
    step = u.levels[1] - u.levels[0]
    from goldenquant.baselines import scalar_mse
    for f in (0.98, 1.02):
        lv = step * f * (np.arange(8) - 3.5)
        assert scalar_mse(pdf, lv, 0.5 * (lv[:-1] + lv[1:])) > u.mse


def test_rect_single():
    cb = build_rect(1, 1.0)
    assert cb.N == 1 and cb.centroids[0] == 0


def test_rect_separability(unit_source):
    cb = build_rect(16, 1.0, Mode.OPTIMAL)
    q = lloyd_scalar(GaussianPerDim(0.5), 16)
    assert cb.N == 256 and cb.scheme is Scheme.RECT
    grid_mse = lm_objective(cb, unit_source, QuadratureGrid.for_source(unit_source, 2048))
    assert grid_mse == pytest.approx(2 * q.mse, rel=1e-3)
    mc = mc_distortion(cb, unit_source, 400_000, seed=4)
    assert abs(mc.mse - 2 * q.mse) <= 3 * mc.ci_halfwidth


def test_rect_uniform_worse(unit_source):
    g = QuadratureGrid.for_source(unit_source, 1024)
    assert lm_objective(build_rect(8, 1.0, Mode.UNIFORM), unit_source, g) > \
        lm_objective(build_rect(8, 1.0, Mode.OPTIMAL), unit_source, g)


def test_divisor_pairs():
    assert [(a.N_mag, a.N_phase) for a in divisor_pairs(257)] == [(1, 257), (257, 1)]
    assert len(divisor_pairs(256)) == 9
    assert all(a.N == 12 for a in divisor_pairs(12))


def test_polar_prime_n():
    cb, alloc = build_polar(257, 1.0, grid=QuadratureGrid.for_source(1.0, 512))
    assert cb.N == 257
    assert set(cb.metadata["allocation_scores"]) == {"1x257", "257x1"}
    assert (alloc.N_mag, alloc.N_phase) in {(1, 257), (257, 1)}


def test_polar_exhaustive_choice(unit_source):
    grid = QuadratureGrid.for_source(unit_source, 512)
    cb, alloc = build_polar(64, 1.0, Mode.OPTIMAL, grid)
    scores = cb.metadata["allocation_scores"]
    assert min(scores, key=scores.get) == f"{alloc.N_mag}x{alloc.N_phase}"
    for a in divisor_pairs(64):
        d = lm_objective(polar_codebook(a, 1.0), unit_source, grid)
        assert d >= scores[f"{alloc.N_mag}x{alloc.N_phase}"] - 1e-15
    assert cb.metadata["N_mag"] * cb.metadata["N_phase"] == 64
    assert 1 < alloc.N_mag < alloc.N_phase


def test_polar_single_ring_bound(unit_source):
    cb = polar_codebook(PolarAllocation(1, 16), 1.0)
    r = cb.radii
    assert np.allclose(r, math.sqrt(math.pi) / 2)
    mag_var = 1.0 - math.pi / 4  # Var|X| for the Rayleigh magnitude
    assert lm_objective(cb, unit_source, QuadratureGrid.for_source(unit_source, 1024)) >= mag_var


def test_lbg_single():
    cb = train_lbg(1, 1.0, 10_000, seed=3)
    assert abs(cb.centroids[0]) <= 4 / math.sqrt(10_000)


def test_lbg_deterministic():
    a = train_lbg(16, 1.0, 5_000, seed=9)
    b = train_lbg(16, 1.0, 5_000, seed=9)
    assert a == b
    assert a.centroids.tobytes() == b.centroids.tobytes()
    assert train_lbg(16, 1.0, 5_000, seed=10) != a


@pytest.mark.parametrize("N", [3, 16, 40])
def test_lbg_trace_nonincreasing(N):
    cb = train_lbg(N, 2.0, 200 * N, seed=N)
    trace = np.array(cb.metadata["final_stage_trace"])
    assert cb.N == N
    assert np.all(np.diff(trace) <= 1e-12)


def test_lbg_sample_floor():
    with pytest.raises(ValueError):
        train_lbg(10, 1.0, 500)


def test_baselines_above_rd_bound(unit_source):
    grid = QuadratureGrid.for_source(unit_source, 1024)
    for cb in (build_rect(4, 1.0), build_rect(4, 1.0, Mode.UNIFORM), build_polar(16, 1.0, grid=grid)[0],
               build_polar(16, 1.0, Mode.UNIFORM, grid=grid)[0], train_lbg(16, 1.0, 20_000, seed=2)):
        rep = mc_distortion(cb, unit_source, 100_000, seed=7)
        assert rep.mse >= 2.0 ** -math.log2(cb.N)
