"""The exponential functional A_t = int_0^t exp(2 B_s) ds along Brownian paths.

Joint draws of (B_t, A_t) feed every identity check in the package.  The
batch sampler is the hot path: it streams Gaussian increments through the
kernel backend in cache-sized chunks and never stores a full path.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .paths import BrownianPath, GridSpec, time_reverse_path
from .rng import RngStream

# Paths whose running max exceeds this are rejected: exp(2B) would leave the
# double range near B ~ 354, and we refuse to integrate saturated values.
OVERFLOW_MAX_B = 300.0

# Chunk height for the step kernels; keeps a chunk of increments inside L2.
CHUNK_PATHS = 256


@dataclass(frozen=True)
class FunctionalSample:
    """Joint draw of (B_t, A_t) and the derived exponentials."""

    b_t: float
    a_t: float
    exp_b: float
    exp_neg_b: float
    overflowed: bool = False


@dataclass(frozen=True, eq=False)
class FunctionalBatch:
    """Vector of joint (B_t, A_t) draws with overflow accounting.

    ``b_max`` is the per-path running maximum of B, kept for the overflow
    policy and for running-max diagnostics; rejected paths are excluded from
    all arrays and counted in ``n_rejected``.
    """

    grid: GridSpec
    b_t: np.ndarray = field(repr=False)
    a_t: np.ndarray = field(repr=False)
    b_max: np.ndarray = field(repr=False)
    n_rejected: int = 0

    def __len__(self) -> int:
        return self.b_t.shape[0]

    @property
    def exp_b(self) -> np.ndarray:
        return np.exp(self.b_t)

    @property
    def exp_neg_b(self) -> np.ndarray:
        return np.exp(-self.b_t)


def exp_functional(p: BrownianPath) -> FunctionalSample:
    """Trapezoid value of A_t along one stored path."""
    v = p.values
    b_t = float(v[-1])
    if float(v.max()) > OVERFLOW_MAX_B:
        return FunctionalSample(b_t, math.inf, math.exp(b_t), math.exp(-b_t), True)
    e = np.exp(2.0 * v)
    h = p.grid.step
    a_t = float(h * (0.5 * e[0] + e[1:-1].sum() + 0.5 * e[-1]))
    return FunctionalSample(b_t, a_t, math.exp(b_t), math.exp(-b_t))


def reversed_pair(p: BrownianPath) -> tuple[FunctionalSample, FunctionalSample]:
    """Both functionals realized on the same randomness.

    The first element is the functional of ``p``; the second is the
    functional of the time-reversed path, whose pair (exp_b, a_t) realizes
    (exp(-B_t), exp(-2 B_t) A_t).  The two pairs agree in law, not pathwise.
    """
    return exp_functional(p), exp_functional(time_reverse_path(p))


def _chunk_sizes(n: int, chunk: int) -> list[int]:
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    return sizes


def sample_functionals(
    t: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    n_workers: int = 1,
) -> FunctionalBatch:
    """Draw ``n_mc`` independent joint (B_t, A_t) samples.

    Chunk ``i`` of 256 paths is generated from ``rng.child(i)``, so results
    are identical for any ``n_workers``; workers only change scheduling.

    Parameters
    ----------
    t : horizon of the functional.
    n_mc : number of paths.
    rng : stream token; consumed via fixed-size child streams.
    n_steps : grid resolution of the trapezoid (default 4096).
    n_workers : thread count for chunk generation.
    """
    grid = GridSpec(t, n_steps)
    if n_mc < 1:
        raise ValueError(f"n_mc must be >= 1, got {n_mc}")
    sizes = _chunk_sizes(n_mc, CHUNK_PATHS)
    b_t = np.empty(n_mc)
    a_t = np.empty(n_mc)
    b_max = np.empty(n_mc)
    sqrt_h = math.sqrt(grid.step)

    def fill(i: int) -> None:
        rows = sizes[i]
        gen = rng.child(i).generator()
        dw = gen.standard_normal((rows, n_steps))
        dw *= sqrt_h
        be, at, bm = kernels.path_stats(dw, grid.step)
        lo = i * CHUNK_PATHS
        b_t[lo : lo + rows] = be
        a_t[lo : lo + rows] = at
        b_max[lo : lo + rows] = bm

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(fill, range(len(sizes))))
    else:
        for i in range(len(sizes)):
            fill(i)

    keep = b_max <= OVERFLOW_MAX_B
    n_rejected = int(n_mc - keep.sum())
    if n_rejected:
        b_t, a_t, b_max = b_t[keep], a_t[keep], b_max[keep]
    return FunctionalBatch(grid, b_t, a_t, b_max, n_rejected)
