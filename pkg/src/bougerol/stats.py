"""Equality-in-law test harness and the top-level identity verifications.

Decision rule for a two-dimensional identity: the quantile-grid ECDF
comparison must stay under its distribution-free bound at level 0.01 AND the
energy permutation test must not reject at 0.01.  Local-time coordinates
carry an atom at zero whenever the level is away from zero; atom frequencies
are compared separately with a binomial three-standard-error rule, the
endpoint law on the atom event is compared by KS, and the continuous parts
go through the grid and energy tests.  Every report embeds the provenance
(seeds, sizes, parameters) required to reproduce it bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import kolmogorov

from . import closedform
from .functionals import sample_functionals
from .localtime import sample_local_times
from .rng import RngStream

DEFAULT_ALPHA = 0.01
GRID_QUANTILES = (0.1, 0.3, 0.5, 0.7, 0.9)
# Pairwise-distance tests cost O(n^2); larger inputs are subsampled to this.
ENERGY_MAX_POINTS = 2048
# Minimum rows on the atom event before a conditional KS is meaningful.
_MIN_ATOM_ROWS = 25


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Immutable sample matrix with label and stream provenance."""

    rows: np.ndarray = field(repr=False)
    label: str = ""
    seed_info: tuple[int, int] | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[:, None]
        if rows.ndim != 2 or rows.shape[1] not in (1, 2):
            raise ValueError(f"rows must be (n,), (n,1) or (n,2), got {rows.shape}")
        if rows.size and not np.isfinite(rows).all():
            raise ValueError("rows must be finite")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def column(self, j: int = 0) -> np.ndarray:
        return self.rows[:, j]


def from_stream(rows, label: str, rng: RngStream | None = None) -> SampleSet:
    info = (rng.seed, rng.stream_id) if rng is not None else None
    return SampleSet(rows, label, info)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one decision rule, with reproduction metadata."""

    test_name: str
    statistic: float
    threshold_or_pvalue: float
    n1: int
    n2: int
    verdict: str  # "pass" | "fail"
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_record(self) -> dict:
        rec = {
            "test_name": self.test_name,
            "statistic": self.statistic,
            "threshold_or_pvalue": self.threshold_or_pvalue,
            "n1": self.n1,
            "n2": self.n2,
            "verdict": self.verdict,
        }
        rec.update({k: _plain(v) for k, v in sorted(self.metadata.items())})
        return rec


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def ks_two_sample(s1: SampleSet, s2: SampleSet, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Two-sample Kolmogorov-Smirnov test for one-dimensional samples.

    The p-value is the asymptotic Kolmogorov law evaluated at
    sqrt(n1 n2/(n1+n2)) times the ECDF sup-distance.
    """
    if s1.dim != 1 or s2.dim != 1:
        raise ValueError(f"ks_two_sample needs dim 1, got {s1.dim} and {s2.dim}")
    x = np.sort(s1.column())
    y = np.sort(s2.column())
    n1, n2 = x.size, y.size
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([x, y])
    cdf1 = np.searchsorted(x, pooled, side="right") / n1
    cdf2 = np.searchsorted(y, pooled, side="right") / n2
    stat = float(np.abs(cdf1 - cdf2).max())
    effective_n = n1 * n2 / (n1 + n2)
    pvalue = float(kolmogorov(math.sqrt(effective_n) * stat))
    return TestReport(
        "ks_two_sample",
        stat,
        pvalue,
        n1,
        n2,
        _verdict(pvalue > alpha),
        {"alpha": alpha, "labels": f"{s1.label}|{s2.label}"},
    )


def pooled_quantile_grid(
    s1: SampleSet, s2: SampleSet, quantiles: Sequence[float] = GRID_QUANTILES
) -> list[tuple[float, float]]:
    """Grid of evaluation points at pooled empirical quantiles per coordinate."""
    pooled = np.vstack([s1.rows, s2.rows])
    qa = np.quantile(pooled[:, 0], quantiles)
    qb = np.quantile(pooled[:, 1], quantiles)
    return [(float(a), float(b)) for a in qa for b in qb]


def ecdf_grid_compare(
    s1: SampleSet,
    s2: SampleSet,
    grid: Sequence[tuple[float, float]] | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> TestReport:
    """Max ECDF discrepancy over a grid against a distribution-free bound.

    The threshold sums one Dvoretzky-Kiefer-Wolfowitz band per sample at
    level alpha, so it is valid without any continuity or independence
    assumption between the two sets.
    """
    if s1.dim != 2 or s2.dim != 2:
        raise ValueError(f"ecdf_grid_compare needs dim 2, got {s1.dim} and {s2.dim}")
    if grid is None:
        grid = pooled_quantile_grid(s1, s2)
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    r1, r2 = s1.rows, s2.rows
    stat = 0.0
    for a, b in grid:
        e1 = np.mean((r1[:, 0] <= a) & (r1[:, 1] <= b))
        e2 = np.mean((r2[:, 0] <= a) & (r2[:, 1] <= b))
        stat = max(stat, abs(float(e1 - e2)))
    band = math.log(2.0 / alpha) / 2.0
    threshold = math.sqrt(band / s1.n) + math.sqrt(band / s2.n)
    return TestReport(
        "ecdf_grid_compare",
        stat,
        threshold,
        s1.n,
        s2.n,
        _verdict(stat <= threshold),
        {"alpha": alpha, "grid_size": len(grid), "labels": f"{s1.label}|{s2.label}"},
    )


def _energy_statistics(D: np.ndarray, members: np.ndarray, n1: int, n2: int) -> np.ndarray:
    """Energy statistic for each 0/1 membership column of ``members``.

    Uses row sums so each permutation costs one matrix-vector product:
    with q = D m, the within/between block sums follow from m.q, r.m and
    the total sum of D.
    """
    r = D.sum(axis=1)
    total = float(r.sum())
    q = D @ members
    s_xx = np.einsum("ij,ij->j", members, q)
    r_m = r @ members
    s_yy = total - 2.0 * r_m + s_xx
    s_xy = r_m - s_xx
    return 2.0 * s_xy / (n1 * n2) - s_xx / n1**2 - s_yy / n2**2


def energy_perm_test(
    s1: SampleSet,
    s2: SampleSet,
    n_perm: int,
    rng: RngStream,
    alpha: float = DEFAULT_ALPHA,
    max_points: int = ENERGY_MAX_POINTS,
) -> TestReport:
    """Energy-distance two-sample test with a permutation p-value.

    Inputs larger than ``max_points`` per side are subsampled (deterministic
    in ``rng``) before the O(n^2) distance matrix is formed.
    """
    if s1.dim != s2.dim:
        raise ValueError(f"dimension mismatch: {s1.dim} vs {s2.dim}")
    if n_perm < 99:
        raise ValueError(f"n_perm must be >= 99, got {n_perm}")
    gen = rng.generator()
    r1, r2 = s1.rows, s2.rows
    if r1.shape[0] > max_points:
        r1 = r1[gen.choice(r1.shape[0], max_points, replace=False)]
    if r2.shape[0] > max_points:
        r2 = r2[gen.choice(r2.shape[0], max_points, replace=False)]
    n1, n2 = r1.shape[0], r2.shape[0]
    pooled = np.vstack([r1, r2])
    n = n1 + n2
    D = cdist(pooled, pooled)
    observed = float(_energy_statistics(D, _block_indicator(n, n1), n1, n2)[0])
    members = np.zeros((n, n_perm))
    for j in range(n_perm):
        members[gen.permutation(n)[:n1], j] = 1.0
    perm_stats = _energy_statistics(D, members, n1, n2)
    count = int((perm_stats >= observed - 1e-12).sum())
    pvalue = (1.0 + count) / (n_perm + 1.0)
    return TestReport(
        "energy_perm_test",
        observed,
        pvalue,
        n1,
        n2,
        _verdict(pvalue > alpha),
        {
            "alpha": alpha,
            "n_perm": n_perm,
            "subsampled": s1.n > max_points or s2.n > max_points,
            "labels": f"{s1.label}|{s2.label}",
        },
    )


def _block_indicator(n: int, n1: int) -> np.ndarray:
    m = np.zeros((n, 1))
    m[:n1, 0] = 1.0
    return m


def atom_frequency_compare(
    v1: np.ndarray, v2: np.ndarray, name: str, metadata: dict
) -> TestReport:
    """Binomial three-standard-error comparison of P(value == 0)."""
    n1, n2 = v1.size, v2.size
    k1, k2 = int((v1 == 0.0).sum()), int((v2 == 0.0).sum())
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    se = math.sqrt(max(pooled * (1.0 - pooled), 0.0) * (1.0 / n1 + 1.0 / n2))
    diff = abs(p1 - p2)
    ok = diff <= 3.0 * se or (k1 + k2 == 0)
    return TestReport(
        name,
        diff,
        3.0 * se,
        n1,
        n2,
        _verdict(ok),
        {**metadata, "atom_freq_1": p1, "atom_freq_2": p2},
    )


def compare_joint_laws(
    s1: SampleSet,
    s2: SampleSet,
    rng: RngStream,
    name_prefix: str,
    alpha: float = DEFAULT_ALPHA,
    n_perm: int = 199,
    metadata: dict | None = None,
) -> list[TestReport]:
    """Full two-dimensional comparison with atom handling on coordinate 2.

    Emits, in order: the atom-frequency report, a KS report for the first
    coordinate restricted to the atom event (when populated), and the grid
    and energy reports on the rows with positive second coordinate.
    """
    md = dict(metadata or {})
    md["comparison"] = name_prefix
    reports = [
        _named(atom_frequency_compare(s1.column(1), s2.column(1), "atom_frequency", md), name_prefix)
    ]
    a1 = s1.rows[s1.column(1) == 0.0]
    a2 = s2.rows[s2.column(1) == 0.0]
    if min(a1.shape[0], a2.shape[0]) >= _MIN_ATOM_ROWS:
        ks_atom = ks_two_sample(
            SampleSet(a1[:, 0], s1.label + ":atom", s1.seed_info),
            SampleSet(a2[:, 0], s2.label + ":atom", s2.seed_info),
            alpha,
        )
        reports.append(_named(_with_meta(ks_atom, md | {"part": "atom_endpoints"}), name_prefix))
    c1 = SampleSet(s1.rows[s1.column(1) > 0.0], s1.label + ":cont", s1.seed_info)
    c2 = SampleSet(s2.rows[s2.column(1) > 0.0], s2.label + ":cont", s2.seed_info)
    reports.append(_named(_with_meta(ecdf_grid_compare(c1, c2, alpha=alpha), md), name_prefix))
    reports.append(
        _named(_with_meta(energy_perm_test(c1, c2, n_perm, rng, alpha=alpha), md), name_prefix)
    )
    return reports


def _with_meta(report: TestReport, extra: dict) -> TestReport:
    merged = {**report.metadata, **extra}
    return TestReport(
        report.test_name,
        report.statistic,
        report.threshold_or_pvalue,
        report.n1,
        report.n2,
        report.verdict,
        merged,
    )


def _named(report: TestReport, prefix: str) -> TestReport:
    return TestReport(
        f"{prefix}:{report.test_name}",
        report.statistic,
        report.threshold_or_pvalue,
        report.n1,
        report.n2,
        report.verdict,
        report.metadata,
    )


def cdf_oracle_compare(
    rows: np.ndarray,
    oracle: Callable[[float, float], float],
    grid: Sequence[tuple[float, float]],
    name: str,
    metadata: dict,
    z_limit: float = 3.0,
) -> TestReport:
    """Empirical P(first <= y, second >= z) against a closed-form oracle.

    The statistic is the worst standardized deviation over the grid; the
    threshold is ``z_limit`` standard errors.
    """
    n = rows.shape[0]
    worst = 0.0
    for y, z in grid:
        p = oracle(y, z)
        se = math.sqrt(max(p * (1.0 - p), 1e-300) / n)
        emp = float(np.mean((rows[:, 0] <= y) & (rows[:, 1] >= z)))
        worst = max(worst, abs(emp - p) / se)
    return TestReport(
        name,
        worst,
        z_limit,
        n,
        n,
        _verdict(worst <= z_limit),
        {**metadata, "grid_size": len(grid)},
    )


# ---------------------------------------------------------------------------
# top-level identity verifications
# ---------------------------------------------------------------------------


def _base_meta(t: float, n_mc: int, n_steps: int, rng: RngStream, **extra) -> dict:
    md = {
        "t": t,
        "n_mc": n_mc,
        "n_steps": n_steps,
        "seed": rng.seed,
        "stream_id": rng.stream_id,
    }
    md.update(extra)
    return md


def verify_boug(
    t: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    alpha: float = DEFAULT_ALPHA,
    n_workers: int = 1,
) -> TestReport:
    """KS check of the one-dimensional identity: beta evaluated at A_t
    against sinh of the endpoint.

    The left side draws (B_t, A_t) along simulated paths and uses the
    conditional-Gaussian shortcut beta_{A_t} | B ~ N(0, A_t); the right side
    is an independent exact draw of sinh(B_t).
    """
    batch = sample_functionals(t, n_mc, rng.child(0), n_steps=n_steps, n_workers=n_workers)
    z = rng.child(1).generator().standard_normal(len(batch))
    lhs = np.sqrt(batch.a_t) * z
    rhs = np.sinh(math.sqrt(t) * rng.child(2).generator().standard_normal(n_mc))
    report = ks_two_sample(
        from_stream(lhs, "beta_at_A", rng.child(0)),
        from_stream(rhs, "sinh_B", rng.child(2)),
        alpha,
    )
    meta = _base_meta(t, n_mc, n_steps, rng, n_rejected=batch.n_rejected)
    return _named(_with_meta(report, meta), "boug")


def verify_reversal(
    t: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    alpha: float = DEFAULT_ALPHA,
    n_perm: int = 199,
    n_workers: int = 1,
) -> list[TestReport]:
    """Grid + energy check of (exp(B_t), A_t) against
    (exp(-B_t), exp(-2B_t) A_t) on independent sample sets."""
    b1 = sample_functionals(t, n_mc, rng.child(0), n_steps=n_steps, n_workers=n_workers)
    b2 = sample_functionals(t, n_mc, rng.child(1), n_steps=n_steps, n_workers=n_workers)
    s1 = from_stream(np.column_stack([b1.exp_b, b1.a_t]), "forward", rng.child(0))
    s2 = from_stream(
        np.column_stack([b2.exp_neg_b, np.exp(-2.0 * b2.b_t) * b2.a_t]),
        "reversed",
        rng.child(1),
    )
    md = _base_meta(t, n_mc, n_steps, rng)
    return [
        _named(_with_meta(ecdf_grid_compare(s1, s2, alpha=alpha), md), "reversal"),
        _named(_with_meta(energy_perm_test(s1, s2, n_perm, rng.child(2), alpha=alpha), md), "reversal"),
    ]


def _bdy_pairs(t: float, n_mc: int, rng: RngStream, n_steps: int, n_workers: int = 1):
    """The three pair samples of the level-zero two-dimensional identity."""
    f1 = sample_functionals(t, n_mc, rng.child(0), n_steps=n_steps, n_workers=n_workers)
    lt1 = sample_local_times(f1.a_t, 0.0, len(f1), rng.child(1))
    pair1 = np.column_stack([lt1.endpoint, f1.exp_neg_b * lt1.local_time])

    f2 = sample_functionals(t, n_mc, rng.child(2), n_steps=n_steps, n_workers=n_workers)
    lt2 = sample_local_times(f2.a_t, 0.0, len(f2), rng.child(3))
    pair2 = np.column_stack([f2.exp_neg_b * lt2.endpoint, lt2.local_time])

    lt3 = sample_local_times(t, 0.0, n_mc, rng.child(4))
    pair3 = np.column_stack([np.sinh(lt3.endpoint), np.sinh(lt3.local_time)])
    return pair1, pair2, pair3


def verify_bdy(
    t: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    alpha: float = DEFAULT_ALPHA,
    n_perm: int = 199,
    n_workers: int = 1,
) -> list[TestReport]:
    """Two-dimensional identity at level zero.

    Pair 1 is (beta_{A_t}, exp(-B_t) * [local time of beta at 0 up to A_t]);
    pair 2 is (exp(-B_t) beta_{A_t}, local time of beta); pair 3 is
    (sinh B_t, sinh L^0_t).  The local times of beta at the B-measurable
    time A_t are drawn with the exact sampler conditionally on B.  Both
    claimed equalities are tested with the grid + energy rule.
    """
    pair1, pair2, pair3 = _bdy_pairs(t, n_mc, rng, n_steps, n_workers)
    md = _base_meta(t, n_mc, n_steps, rng)
    s1 = from_stream(pair1, "pair1", rng.child(0))
    s2 = from_stream(pair2, "pair2", rng.child(2))
    s3 = from_stream(pair3, "pair3", rng.child(4))
    reports = []
    for left, right, tag, sub in (
        (s1, s2, "pair1~pair2", 5),
        (s2, s3, "pair2~pair3", 6),
    ):
        reports.append(
            _named(_with_meta(ecdf_grid_compare(left, right, alpha=alpha), md), f"bdy:{tag}")
        )
        reports.append(
            _named(
                _with_meta(energy_perm_test(left, right, n_perm, rng.child(sub), alpha=alpha), md),
                f"bdy:{tag}",
            )
        )
    return reports


def _main_pairs(t: float, x: float, n_mc: int, rng: RngStream, n_steps: int, n_workers: int = 1):
    """The three pair samples of the general-level identity."""
    sx = math.sinh(x)
    f1 = sample_functionals(t, n_mc, rng.child(0), n_steps=n_steps, n_workers=n_workers)
    lt1 = sample_local_times(f1.a_t, -f1.exp_b * sx, len(f1), rng.child(1))
    pair1 = np.column_stack(
        [f1.exp_b * sx + lt1.endpoint, f1.exp_neg_b * lt1.local_time]
    )

    f2 = sample_functionals(t, n_mc, rng.child(2), n_steps=n_steps, n_workers=n_workers)
    lt2 = sample_local_times(f2.a_t, -sx, len(f2), rng.child(3))
    pair2 = np.column_stack(
        [f2.exp_neg_b * (sx + lt2.endpoint), lt2.local_time]
    )

    lt3 = sample_local_times(t, -x, n_mc, rng.child(4))
    pair3 = np.column_stack(
        [
            np.sinh(x + lt3.endpoint),
            np.sinh(abs(x) + lt3.local_time) - math.sinh(abs(x)),
        ]
    )
    return pair1, pair2, pair3


def verify_main(
    t: float,
    x: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    alpha: float = DEFAULT_ALPHA,
    n_perm: int = 199,
    n_workers: int = 1,
) -> list[TestReport]:
    """Three-way two-dimensional identity at a general level.

    Pairs 1 and 2 draw the local time of beta at a B-measurable level and
    the B-measurable time A_t with the exact sampler conditionally on B;
    pair 3 is the analytic side (sinh(x + B_t), sinh(|x| + L^{-x}_t) -
    sinh|x|).  All three pairings are compared with the atom-aware pipeline,
    and pair 3 is additionally checked against the closed-form CDF oracle.
    """
    pair1, pair2, pair3 = _main_pairs(t, x, n_mc, rng, n_steps, n_workers)
    md = _base_meta(t, n_mc, n_steps, rng, x=x)
    s1 = from_stream(pair1, "pair1", rng.child(0))
    s2 = from_stream(pair2, "pair2", rng.child(2))
    s3 = from_stream(pair3, "pair3", rng.child(4))
    reports: list[TestReport] = []
    for left, right, tag, sub in (
        (s1, s2, "pair1~pair2", 5),
        (s2, s3, "pair2~pair3", 6),
        (s1, s3, "pair1~pair3", 7),
    ):
        reports.extend(
            compare_joint_laws(left, right, rng.child(sub), f"main:{tag}", alpha, n_perm, md)
        )

    positive = pair3[:, 1] > 0.0
    ys = np.quantile(pair3[:, 0], GRID_QUANTILES)
    zs = np.quantile(pair3[positive, 1], GRID_QUANTILES)
    grid = [(float(y), float(z)) for y in ys for z in zs]
    reports.append(
        cdf_oracle_compare(
            pair3,
            lambda y, z: closedform.theorem_rhs_cdf(t, x, y, z),
            grid,
            "main:pair3~closedform",
            md,
        )
    )
    return reports


def verify_second(
    t: float,
    x: float,
    n_mc: int,
    rng: RngStream,
    n_steps: int = 4096,
    alpha: float = DEFAULT_ALPHA,
    n_workers: int = 1,
) -> list[TestReport]:
    """Identity of the second coordinates at a general level.

    Compares the local time of beta at level sinh(x) up to time A_t against
    sinh(|x| + L^x_t) - sinh|x| and against the reflection form
    (sinh|B_t| - sinh|x|)^+; atoms at zero are compared against each other
    and against the closed-form mass 2 Phi(|x|/sqrt(t)) - 1.
    """
    sx = math.sinh(x)
    f1 = sample_functionals(t, n_mc, rng.child(0), n_steps=n_steps, n_workers=n_workers)
    lhs = sample_local_times(f1.a_t, sx, len(f1), rng.child(1)).local_time

    lt2 = sample_local_times(t, x, n_mc, rng.child(2))
    rhs = np.sinh(abs(x) + lt2.local_time) - math.sinh(abs(x))

    b3 = math.sqrt(t) * rng.child(3).generator().standard_normal(n_mc)
    reflection = np.maximum(np.sinh(np.abs(b3)) - math.sinh(abs(x)), 0.0)

    md = _base_meta(t, n_mc, n_steps, rng, x=x)
    reports = [
        _named(atom_frequency_compare(lhs, rhs, "atom_frequency", md), "second:lhs~rhs")
    ]

    atom_p = max(0.0, 2.0 * closedform.normal_cdf(abs(x) / math.sqrt(t)) - 1.0)
    emp = float((lhs == 0.0).mean())
    se = math.sqrt(max(atom_p * (1.0 - atom_p), 1e-300) / lhs.size)
    stat = abs(emp - atom_p)
    reports.append(
        TestReport(
            "second:atom_mass~closedform",
            stat,
            3.0 * se,
            lhs.size,
            lhs.size,
            _verdict(atom_p == 0.0 and emp == 0.0 or stat <= 3.0 * se),
            {**md, "atom_mass_closed_form": atom_p, "atom_mass_empirical": emp},
        )
    )
    for a, b, tag in ((lhs, rhs, "lhs~rhs"), (rhs, reflection, "rhs~reflection")):
        ka = a[a > 0.0]
        kb = b[b > 0.0]
        reports.append(
            _named(
                _with_meta(
                    ks_two_sample(SampleSet(ka, tag + ":a"), SampleSet(kb, tag + ":b"), alpha),
                    md | {"part": "continuous"},
                ),
                f"second:{tag}",
            )
        )
    return reports
