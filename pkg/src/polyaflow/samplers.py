"""Exact samplers for the point process families.

All randomness flows through keyed counter-based generators so that a
``(seed, stream)`` pair fully determines every draw, independent of
execution order across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (
    CellMeasure,
    PointConfig,
    Window,
    _config_unchecked,
    empty_config,
)

__all__ = [
    "RNG_ALGORITHM",
    "RngStream",
    "as_generator",
    "PolyaParams",
    "sample_poisson_process",
    "sample_negative_binomial",
    "sample_log_series",
    "sample_polya_sum",
    "thin",
    "sample_polya_difference",
    "sample_gamma_measure",
]

# np.random.Philox is the 4x64 counter-based generator; the 128-bit key
# is formed from (seed, stream), so distinct pairs give non-overlapping
# streams regardless of how many variates each one consumes.
RNG_ALGORITHM = "philox4x64"

_WORD = 2**64


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (seed, stream)."""

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or not isinstance(self.stream, int):
            raise ValueError("seed and stream must be integers")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = [self.seed % _WORD, self.stream % _WORD]
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, offset: int) -> "RngStream":
        """Stream shifted by offset; callers keep offsets disjoint."""
        return RngStream(self.seed, (self.stream + offset) % _WORD)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream (pure, restartable) or a live Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


@dataclass(frozen=True)
class PolyaParams:
    """Parameters (z, rho) of a Polya sum process."""

    z: float
    rho: CellMeasure

    def __post_init__(self) -> None:
        if not (0.0 < self.z < 1.0):
            raise ValueError(f"polya parameter z must be in (0, 1), got {self.z}")
        if self.rho.total() <= 0.0:
            raise ValueError("polya shape measure must have positive total mass")


def _locations(window: Window, cell_idx: np.ndarray, g: np.random.Generator) -> np.ndarray:
    u = g.random(cell_idx.size)
    locs = window.lo + (cell_idx + u) * window.width
    # strict containment despite float roundup at cell boundaries
    return np.minimum(locs, np.nextafter(window.hi, -math.inf))


def _config_from_draws(
    window: Window, cell_idx: np.ndarray, mults: np.ndarray, g: np.random.Generator
) -> PointConfig:
    if cell_idx.size == 0:
        return empty_config(window)
    locs = _locations(window, cell_idx, g)
    uniq, inverse = np.unique(locs, return_inverse=True)
    if uniq.size == locs.size:
        order = np.argsort(locs)
        return _config_unchecked(window, locs[order], np.asarray(mults)[order])
    summed = np.bincount(inverse, weights=mults, minlength=uniq.size)
    return _config_unchecked(window, uniq, summed.astype(np.int64))


def sample_poisson_process(intensity: CellMeasure, rng) -> PointConfig:
    """Poisson process: independent Poisson(mass) count per cell, uniform locations."""
    g = as_generator(rng)
    counts = g.poisson(intensity.masses)
    cell_idx = np.repeat(np.arange(intensity.window.cells), counts)
    mults = np.ones(cell_idx.size, dtype=np.int64)
    return _config_from_draws(intensity.window, cell_idx, mults, g)


def sample_negative_binomial(r: float, z: float, rng) -> int:
    """One draw with pmf Gamma(r+n)/(Gamma(r) n!) (1-z)^r z^n, n >= 0."""
    if r <= 0.0:
        raise ValueError(f"shape r must be > 0, got {r}")
    if not (0.0 < z < 1.0):
        raise ValueError(f"parameter z must be in (0, 1), got {z}")
    g = as_generator(rng)
    return int(g.negative_binomial(r, 1.0 - z))


def sample_log_series(z: float, size: int, rng) -> np.ndarray:
    """Logarithmic multiplicities, pmf -z^m / (m log(1-z)) for m >= 1.

    Sampled by inversion against the analytic cdf.  The cdf sequence is
    the same for every draw, so it is extended in blocks and each
    uniform variate is placed by binary search; variates beyond the
    current block carry over to the next one.  No truncation is
    involved and the walk stops with probability one.
    """
    if not (0.0 < z < 1.0):
        raise ValueError(f"parameter z must be in (0, 1), got {z}")
    if size == 0:
        return np.empty(0, dtype=np.int64)
    g = as_generator(rng)
    u = g.random(size)
    out = np.ones(size, dtype=np.int64)
    unresolved = np.arange(size)
    block = 512
    j = np.arange(block, dtype=np.float64)
    zj = z**j
    coef = -z / math.log1p(-z)  # c z^{m0} with m0 the block's first m
    m0 = 1
    cdf_base = 0.0
    while unresolved.size:
        pmf_block = coef * zj / (m0 + j)
        cdf_block = cdf_base + np.cumsum(pmf_block)
        pos = np.searchsorted(cdf_block, u[unresolved], side="left")
        done = pos < block
        if pmf_block[-1] == 0.0 or cdf_block[-1] <= cdf_base:
            # remaining mass is below float resolution; close the walk
            done = np.ones_like(done)
            pos = np.minimum(pos, block - 1)
        out[unresolved[done]] = m0 + pos[done]
        unresolved = unresolved[~done]
        cdf_base = float(cdf_block[-1])
        coef *= zj[-1] * z
        m0 += block
    return out


def sample_polya_sum(params: PolyaParams, rng) -> PointConfig:
    """Polya sum process via its compound-Poisson tower representation.

    Each cell receives Poisson(-rho_i log(1-z)) towers; every tower
    carries a logarithmic multiplicity and a uniform location, which
    makes the per-cell count exactly negative binomial with shape
    rho_i and parameter z while keeping genuine multiplicities in the
    configuration.
    """
    g = as_generator(rng)
    z, rho = params.z, params.rho
    tower_means = -math.log1p(-z) * rho.masses
    n_towers = g.poisson(tower_means)
    cell_idx = np.repeat(np.arange(rho.window.cells), n_towers)
    mults = sample_log_series(z, cell_idx.size, g)
    return _config_from_draws(rho.window, cell_idx, mults, g)


def thin(config: PointConfig, q: float, rng) -> PointConfig:
    """Independent thinning: each unit of each atom survives with probability q."""
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"retention probability must be in [0, 1], got {q}")
    if q == 1.0 or config.n_atoms == 0:
        return config
    if q == 0.0:
        return empty_config(config.window)
    g = as_generator(rng)
    kept = g.binomial(config.multiplicities, q)
    keep = kept > 0
    return _config_unchecked(config.window, config.locations[keep], kept[keep])


def sample_polya_difference(z: float, base: PointConfig, rng) -> PointConfig:
    """Polya difference draw with base configuration: thinning with retention z/(1+z)."""
    if not z > 0.0:
        raise ValueError(f"parameter z must be > 0, got {z}")
    q = 1.0 if math.isinf(z) else z / (1.0 + z)
    return thin(base, q, rng)


def sample_gamma_measure(rho: CellMeasure, rng) -> CellMeasure:
    """Gamma random measure: independent Gamma(rho_i, 1) mass per cell."""
    g = as_generator(rng)
    # numpy returns exactly 0.0 for zero shape, matching the degenerate cell contract
    return CellMeasure(rho.window, g.gamma(rho.masses))
