"""Exact joint sampling of a Brownian endpoint with a level local time.

The joint law of (B_t, L^c_t) is sampled without discretization error by
splitting at the first hitting time of the level: if the level is not
reached the local time is zero and the endpoint follows the reflection
sub-density; if it is reached, the strong Markov property restarts the path
at the level, where the running-max construction gives (endpoint, local
time) jointly.  Local time is normalized in the Tanaka/semimartingale sense
throughout.

A pathwise occupation-kernel estimator is included purely as an independent
cross-check oracle; identity tests always use the exact samplers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .paths import BrownianPath
from .rng import RngStream


@dataclass(frozen=True)
class LevelLocalTimeSample:
    """One exact draw of (B_t, L^level_t) plus the hit indicator."""

    endpoint: float
    local_time: float
    hit: bool
    level: float
    horizon: float


@dataclass(frozen=True)
class HittingTimeSample:
    """First passage time of a standard Brownian motion to ``level``."""

    level: float
    time: float


@dataclass(frozen=True, eq=False)
class LocalTimeBatch:
    """Vector of exact (endpoint, local_time, hit) draws.

    ``n_proposals`` counts truncated-normal proposals consumed by the
    rejection step of the no-hit branch; ``rejection_rate`` is the fraction
    of proposals discarded.
    """

    endpoint: np.ndarray = field(repr=False)
    local_time: np.ndarray = field(repr=False)
    hit: np.ndarray = field(repr=False)
    level: np.ndarray = field(repr=False)
    horizon: np.ndarray = field(repr=False)
    n_proposals: int = 0

    def __len__(self) -> int:
        return self.endpoint.shape[0]

    @property
    def n_no_hit(self) -> int:
        return int((~self.hit).sum())

    @property
    def rejection_rate(self) -> float:
        if self.n_proposals == 0:
            return 0.0
        return 1.0 - self.n_no_hit / self.n_proposals


def _nonzero_normals(gen: np.random.Generator, n: int) -> np.ndarray:
    """Standard normals with exact zeros redrawn (they would break c/Z)."""
    z = gen.standard_normal(n)
    while True:
        bad = z == 0.0
        if not bad.any():
            return z
        z[bad] = gen.standard_normal(int(bad.sum()))


def sample_hitting_time(c: float, rng: RngStream) -> HittingTimeSample:
    """Draw the first passage time to level ``c != 0`` as (c/Z)^2.

    (c/Z)^2 with Z standard normal has the stable(1/2) first-passage density
    |c|/sqrt(2 pi s^3) exp(-c^2/(2s)).
    """
    if c == 0:
        raise ValueError("level must be nonzero; T_0 = 0 is the caller's case")
    gen = rng.generator()
    z = float(_nonzero_normals(gen, 1)[0])
    return HittingTimeSample(c, (c / z) ** 2)


def sample_hitting_times(c: float, n: int, rng: RngStream) -> np.ndarray:
    """Vector of ``n`` independent first passage times to ``c != 0``."""
    if c == 0:
        raise ValueError("level must be nonzero; T_0 = 0 is the caller's case")
    z = _nonzero_normals(rng.generator(), n)
    return (c / z) ** 2


def _levy_pairs(gen: np.random.Generator, horizons: np.ndarray):
    """Joint (signed endpoint, local time at 0) at the given horizons.

    Uses the running-max construction: the max M given the endpoint W is
    inverted from its conditional law P(M >= m | W) = exp(-2m(m - W)/t),
    then (|B|, L^0) = (M - W, M) and an independent sign recovers B.
    """
    n = horizons.shape[0]
    z = gen.standard_normal(n)
    u = 1.0 - gen.random(n)  # in (0, 1], keeps log(u) finite
    w = np.sqrt(horizons) * z
    m = 0.5 * (w + np.sqrt(w * w - 2.0 * horizons * np.log(u)))
    signs = 2.0 * gen.integers(0, 2, n) - 1.0
    return signs * (m - w), m


def sample_levy_pair(t: float, rng: RngStream) -> LevelLocalTimeSample:
    """One exact draw of (B_t, L^0_t); the level-zero local time never
    vanishes, so ``hit`` is always true."""
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    endpoint, local = _levy_pairs(rng.generator(), np.array([float(t)]))
    return LevelLocalTimeSample(float(endpoint[0]), float(local[0]), True, 0.0, t)


def _no_hit_endpoints(
    gen: np.random.Generator,
    horizons: np.ndarray,
    abs_levels: np.ndarray,
):
    """Endpoints of B_t conditioned on not reaching ``abs_levels > 0``.

    Rejection sampling of the reflection sub-density p_t(y) - p_t(2c - y) on
    y < c: propose from the normal N(0, t) truncated to y < c by inverse
    CDF, accept with probability 1 - exp(-2c(c - y)/t).
    """
    n = horizons.shape[0]
    out = np.empty(n)
    active = np.arange(n)
    n_proposals = 0
    for _ in range(100_000):
        if active.size == 0:
            return out, n_proposals
        h = horizons[active]
        c = abs_levels[active]
        rt = np.sqrt(h)
        u = 1.0 - gen.random(active.size)  # in (0, 1]; u = 1 proposes y = c
        y = rt * ndtri(u * ndtr(c / rt))
        accept_p = -np.expm1(-2.0 * c * (c - y) / h)
        accepted = gen.random(active.size) < accept_p
        n_proposals += int(active.size)
        out[active[accepted]] = y[accepted]
        active = active[~accepted]
    raise RuntimeError("no-hit endpoint rejection sampler failed to terminate")


def sample_local_times(horizons, levels, n: int, rng: RngStream) -> LocalTimeBatch:
    """``n`` exact draws of (B_t, L^c_t, hit); elementwise in (t, c).

    ``horizons`` and ``levels`` broadcast against ``n``; all horizons must be
    positive.  Per row, the first passage time T_c = (c/Z)^2 decides the
    branch: T_c < t restarts at the level with a running-max draw on the
    remaining time, otherwise the local time is zero and the endpoint comes
    from the reflection sub-density.  Level zero has T = 0 and is the pure
    running-max case.
    """
    horizons = np.broadcast_to(np.asarray(horizons, dtype=np.float64), (n,)).copy()
    levels = np.broadcast_to(np.asarray(levels, dtype=np.float64), (n,)).copy()
    if (horizons <= 0).any():
        raise ValueError("all horizons must be > 0")
    gen = rng.generator()

    z = _nonzero_normals(gen, n)
    with np.errstate(over="ignore"):
        first_passage = (levels / z) ** 2  # exact 0 at level 0
    hit = first_passage < horizons

    endpoint = np.empty(n)
    local_time = np.zeros(n)

    remaining = horizons[hit] - first_passage[hit]
    rel, local = _levy_pairs(gen, remaining)
    endpoint[hit] = levels[hit] + rel
    local_time[hit] = local

    miss = ~hit
    n_proposals = 0
    if miss.any():
        y, n_proposals = _no_hit_endpoints(
            gen, horizons[miss], np.abs(levels[miss])
        )
        endpoint[miss] = np.sign(levels[miss]) * y

    return LocalTimeBatch(endpoint, local_time, hit, levels, horizons, n_proposals)


def sample_bm_with_local_time(t: float, c: float, rng: RngStream) -> LevelLocalTimeSample:
    """One exact draw from the joint law of (B_t, L^c_t).

    Level zero delegates to :func:`sample_levy_pair`, so the same stream
    token yields the identical draw.
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if c == 0:
        return sample_levy_pair(t, rng)
    batch = sample_local_times(t, c, 1, rng)
    return LevelLocalTimeSample(
        float(batch.endpoint[0]),
        float(batch.local_time[0]),
        bool(batch.hit[0]),
        c,
        t,
    )


def occupation_local_time(p: BrownianPath, c: float, bandwidth: float) -> float:
    """Occupation-kernel estimate of L^c along a stored path.

    Trapezoid of the indicator of the band (c - bandwidth, c + bandwidth)
    over the grid, scaled by 1/(2 bandwidth).  Diagnostic only: it carries
    discretization and bandwidth bias, unlike the exact samplers.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    inside = (np.abs(p.values - c) < bandwidth).astype(np.float64)
    h = p.grid.step
    occupation = h * (0.5 * inside[0] + inside[1:-1].sum() + 0.5 * inside[-1])
    return float(occupation / (2.0 * bandwidth))


def default_occupation_bandwidth(step: float) -> float:
    """Default band half-width step^{1/2} for the occupation estimator.

    The estimator's mean bias is about -bandwidth/2 (the local-time field has
    a tent-shaped kink at the level), so the bandwidth must shrink like the
    increment scale sqrt(step) to keep the relative bias near -0.6/sqrt(n);
    at n = 2^14 that is about half a percent.
    """
    return math.sqrt(step)


def levy_max_local_time(p: BrownianPath, c: float) -> float:
    """Running-max surrogate (max_s B_s - |c|)^+; equals L^c in law only."""
    return max(float(p.values.max()) - abs(c), 0.0)
