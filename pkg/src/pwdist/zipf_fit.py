"""Zipf exponent estimation for rank-frequency tables.

Five routes to the exponent s of f ~ r^-s:

* ``ls_raw_rank``: least squares on the raw log-log rank-frequency points.
  The long run of frequency-1 passwords drags this slope towards 0.
* ``ls_binned_rank``: least squares after dyadic binning, which rescues
  the slope from the frequency-1 tail.
* ``ls_nk``: least squares on the count-of-counts view (raw or binned),
  where a Zipf law shows up as slope m = -(1 + 1/s).
* ``mle_truncated_zipf``: maximum likelihood for a Zipf truncated to the
  observed number of ranks, with a standard error from the observed
  information, and optionally an indirect-inference bias correction for
  recovering a generator exponent from sampled data.
* ``bootstrap_p_value``: parametric-bootstrap goodness of fit using an
  Anderson-Darling-weighted Kolmogorov-Smirnov statistic.

Slopes are fitted on base-2 logs to line up with the dyadic bins; the
fitted s is base-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import CountOfCounts, RankFrequencyTable

METHOD_LS_RAW = "ls-raw"
METHOD_LS_BINNED = "ls-binned"
METHOD_NK_RAW = "nk-raw"
METHOD_NK_BINNED = "nk-binned"
METHOD_MLE = "mle"

FLAG_FLAT_SLOPE = "flat-slope"
FLAG_BOUNDARY = "boundary"
FLAG_DEBIASED = "debiased"

BIN_RULE_RANK = "dyadic-rank"
BIN_RULE_K = "dyadic-k"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_S_BRACKET = 10.0
_S_CAP = 64.0
_S_TOL = 1e-9

# Indirect-inference schedule: fixed-point rounds and simulations per round,
# with more simulations on the last rounds to shrink Monte Carlo noise.
_CORRECTION_ROUNDS = 8
_CORRECTION_SIMS = 12
_CORRECTION_SIMS_FINAL = 24


class FitError(Exception):
    """No fit can be produced from the given data."""


@dataclass
class ZipfFit:
    """A fitted exponent plus how it was obtained.

    ``slope_m`` is the raw log-log slope for the count-of-counts methods
    (s is recovered via m = -(1 + 1/s)); ``stderr`` and ``p_value`` are
    populated for the MLE only. ``truncation_N`` is the number of ranks
    the fitted model is supported on.
    """

    s: float
    method: str
    truncation_N: int
    slope_m: float | None = None
    stderr: float | None = None
    p_value: float | None = None
    flag: str | None = None


@dataclass
class BinnedSeries:
    """Log-binned (x, y) points; empty or incomplete bins are omitted."""

    points: list[tuple[float, float]]
    bin_rule: str


def _ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise FitError("degenerate abscissa for least squares")
    return float(xc @ yc) / denom


def ls_raw_rank(table: RankFrequencyTable) -> ZipfFit:
    """Least squares of log2 f_i against log2 i over every rank."""
    counts = table.counts().astype(np.float64)
    n = len(counts)
    if n < 2:
        raise FitError("need at least 2 ranks for a least-squares fit")
    slope = _ols_slope(np.log2(np.arange(1, n + 1, dtype=np.float64)), np.log2(counts))
    s = -slope
    flag = FLAG_FLAT_SLOPE if s <= 0.0 else None
    return ZipfFit(s=max(s, 0.0), method=METHOD_LS_RAW, truncation_N=n, flag=flag)


def bin_dyadic_rank(table: RankFrequencyTable) -> BinnedSeries:
    """Dyadic rank bins: bin n spans ranks 2^n .. 2^(n+1)-1.

    The ordinate is the mean frequency across the bin, so an exact f = C/r^s
    law keeps slope -s instead of picking up the +1 that summing would add.
    The abscissa is the geometric mean of the bin edges 2^n and 2^(n+1),
    which spaces the points exactly one unit apart in log2 and keeps exact
    dyadic data exactly collinear. A final bin that would run past the last
    rank is dropped rather than averaged short.
    """
    counts = table.counts()
    n_ranks = len(counts)
    points: list[tuple[float, float]] = []
    n = 0
    while True:
        lo = 1 << n
        hi = (1 << (n + 1)) - 1
        if hi > n_ranks:
            break
        width = hi - lo + 1
        points.append((math.sqrt(lo * (hi + 1)), float(counts[lo - 1 : hi].sum()) / width))
        n += 1
    return BinnedSeries(points=points, bin_rule=BIN_RULE_RANK)


def ls_binned_rank(table: RankFrequencyTable) -> ZipfFit:
    """Least squares on the dyadically binned rank-frequency points."""
    series = bin_dyadic_rank(table)
    if len(series.points) < 2:
        raise FitError("need at least 2 complete dyadic bins")
    x = np.log2(np.array([p[0] for p in series.points]))
    y = np.log2(np.array([p[1] for p in series.points]))
    slope = _ols_slope(x, y)
    s = -slope
    flag = FLAG_FLAT_SLOPE if s <= 0.0 else None
    return ZipfFit(
        s=max(s, 0.0), method=METHOD_LS_BINNED, truncation_N=table.distinct_count, flag=flag
    )


def bin_dyadic_k(cc: CountOfCounts) -> BinnedSeries:
    """Dyadic bins over the multiplicity k, same mean-over-width rule.

    Multiplicities that occur for no password count as zero inside a bin;
    bins whose total is zero are omitted entirely.
    """
    ks = np.array([k for k, _ in cc.pairs], dtype=np.int64)
    ns = np.array([n for _, n in cc.pairs], dtype=np.int64)
    cum = np.concatenate(([0], np.cumsum(ns)))
    k_max = int(ks[-1])
    points: list[tuple[float, float]] = []
    n = 0
    while True:
        lo = 1 << n
        hi = (1 << (n + 1)) - 1
        if hi > k_max:
            break
        i = int(np.searchsorted(ks, lo, side="left"))
        j = int(np.searchsorted(ks, hi, side="right"))
        total = int(cum[j] - cum[i])
        if total > 0:
            points.append((math.sqrt(lo * (hi + 1)), total / (hi - lo + 1)))
        n += 1
    return BinnedSeries(points=points, bin_rule=BIN_RULE_K)


def ls_nk(cc: CountOfCounts, binned: bool = False) -> ZipfFit:
    """Fit the count-of-counts view: log2 n_k against log2 k.

    Under Zipf the slope is m = -(1 + 1/s); a slope at or above -1 has no
    corresponding positive s and is rejected.
    """
    if binned:
        points = bin_dyadic_k(cc).points
        if len(points) < 2:
            raise FitError("need at least 2 complete dyadic k-bins")
        x = np.log2(np.array([p[0] for p in points]))
        y = np.log2(np.array([p[1] for p in points]))
    else:
        if len(cc.pairs) < 2:
            raise FitError("need at least 2 (k, n_k) points")
        x = np.log2(np.array([k for k, _ in cc.pairs], dtype=np.float64))
        y = np.log2(np.array([n for _, n in cc.pairs], dtype=np.float64))
    slope_m = _ols_slope(x, y)
    if slope_m >= -1.0:
        raise FitError(f"slope {slope_m:.4g} incompatible with Zipf (needs m < -1)")
    return ZipfFit(
        s=1.0 / (-slope_m - 1.0),
        method=METHOD_NK_BINNED if binned else METHOD_NK_RAW,
        truncation_N=cc.distinct_count,
        slope_m=slope_m,
    )


# ---------------------------------------------------------------------------
# Truncated-Zipf maximum likelihood
#
# With N ranks, M observations and f_i observations of rank i, the
# log-likelihood is L(s) = -s * sum_i f_i ln i - M * ln H(N, s) where
# H(N, s) = sum_{r=1}^{N} r^-s. L is concave in s (exponential family), so
# the derivative crosses zero at most once and a bracketed search is safe.
# ---------------------------------------------------------------------------


def _log_ranks(n: int) -> np.ndarray:
    return np.log(np.arange(1, n + 1, dtype=np.float64))


def _dloglik(s: float, a: float, m: float, lr: np.ndarray) -> float:
    w = np.exp(-s * lr)
    return -a + m * float(w @ lr) / float(w.sum())


def _neg_loglik(s: float, a: float, m: float, lr: np.ndarray) -> float:
    w = np.exp(-s * lr)
    return s * a + m * math.log(float(w.sum()))


def _stderr_at(s: float, m: float, lr: np.ndarray) -> float:
    w = np.exp(-s * lr)
    h = float(w.sum())
    m1 = float(w @ lr) / h
    m2 = float(w @ (lr * lr)) / h
    info = m * (m2 - m1 * m1)
    if info <= 0.0:
        return math.inf
    return 1.0 / math.sqrt(info)


def _mle_core(counts: np.ndarray) -> tuple[float, float, str | None]:
    """Fit sorted counts; returns (s, stderr, flag)."""
    n = len(counts)
    m = float(counts.sum())
    lr = _log_ranks(n)
    a = float(counts @ lr)
    if _dloglik(0.0, a, m, lr) <= 0.0:
        # Likelihood non-increasing from s = 0: uniform-ish data.
        return 0.0, _stderr_at(0.0, m, lr), FLAG_BOUNDARY
    lo, hi = 0.0, _S_BRACKET
    while _dloglik(hi, a, m, lr) > 0.0:
        lo, hi = hi, hi * 2.0
        if hi > _S_CAP:
            raise FitError(f"likelihood still increasing at s = {_S_CAP:g}; no maximum found")
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc = _neg_loglik(c, a, m, lr)
    fd = _neg_loglik(d, a, m, lr)
    while hi - lo > _S_TOL:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = _neg_loglik(c, a, m, lr)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = _neg_loglik(d, a, m, lr)
    s = 0.5 * (lo + hi)
    return s, _stderr_at(s, m, lr), None


def sample_zipf_counts(s: float, n_ranks: int, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Per-rank counts of n_draws i.i.d. draws from truncated Zipf(s, n_ranks)."""
    p = np.arange(1, n_ranks + 1, dtype=np.float64) ** (-s)
    p /= p.sum()
    return rng.multinomial(n_draws, p)


def _indirect_inference(counts: np.ndarray, s_naive: float, seed: int) -> float:
    """Solve for the generator exponent whose sort-and-fit output matches.

    Building a table sorts the observed counts, which pairs sampling noise
    assortatively with rank, and drops never-hit ranks from the support.
    Both distort the plain MLE whenever mean counts per rank are small.
    This runs the same sort-and-fit pipeline on simulated corpora and
    walks (s, N) until the simulated fit and distinct count reproduce the
    observed ones.
    """
    m = int(counts.sum())
    n_obs = len(counts)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    s, n = s_naive, n_obs
    for round_idx in range(_CORRECTION_ROUNDS):
        sims = (
            _CORRECTION_SIMS_FINAL
            if round_idx >= _CORRECTION_ROUNDS - 2
            else _CORRECTION_SIMS
        )
        fit_sum = 0.0
        distinct_sum = 0
        for _ in range(sims):
            sample = sample_zipf_counts(s, n, m, rng)
            rep = np.sort(sample[sample > 0])[::-1]
            s_rep, _, _ = _mle_core(rep)
            fit_sum += s_rep
            distinct_sum += len(rep)
        s = max(s + (s_naive - fit_sum / sims), 0.0)
        n = max(int(round(n + (n_obs - distinct_sum / sims))), n_obs)
    return s


def mle_truncated_zipf(
    table: RankFrequencyTable, *, bias_correction: bool = False, seed: int = 0
) -> ZipfFit:
    """Maximum-likelihood exponent for a Zipf truncated at the table size.

    The model support is ranks 1..distinct_count (the observed support is
    the maximum-likelihood choice for N). The standard error comes from
    the observed information at the maximum. A likelihood that decreases
    from s = 0 returns s = 0 with a boundary flag.

    ``bias_correction=True`` additionally removes the sort-and-truncate
    bias by indirect inference, which matters when recovering a known
    generator exponent from sampled corpora; the plain fit is what the
    bootstrap replication uses, and is the default.
    """
    if table.distinct_count < 2 or table.total_users < 2:
        raise FitError("MLE needs at least 2 ranks and 2 observations")
    counts = table.counts()
    s, stderr, flag = _mle_core(counts)
    if bias_correction and flag is None:
        s = _indirect_inference(counts, s, seed)
        flag = FLAG_DEBIASED
    return ZipfFit(
        s=s, method=METHOD_MLE, truncation_N=table.distinct_count, stderr=stderr, flag=flag
    )


def _ad_ks_statistic(counts: np.ndarray, s: float) -> float:
    """Anderson-Darling-weighted KS distance between rank CDFs.

    Sup over ranks of |empirical - model| / sqrt(model * (1 - model)),
    which weights tail discrepancies as heavily as the middle. The last
    rank, where both CDFs are exactly 1, is excluded. The survival term
    is accumulated from the tail to dodge cancellation.
    """
    c = counts.astype(np.float64)
    m = c.sum()
    n = len(c)
    w = np.arange(1, n + 1, dtype=np.float64) ** (-s)
    h = w.sum()
    cdf = np.cumsum(w) / h
    surv = np.cumsum(w[::-1])[::-1] / h
    emp = np.cumsum(c) / m
    num = np.abs(emp[:-1] - cdf[:-1])
    den = np.sqrt(cdf[:-1] * surv[1:])
    return float(np.max(num / den))


def bootstrap_p_value(
    table: RankFrequencyTable, fit: ZipfFit, replicates: int = 100, seed: int = 0
) -> float:
    """Parametric-bootstrap p-value for the MLE fit.

    Each replicate draws total_users samples from the fitted model, sorts
    them into a table and re-fits with the plain MLE, mirroring exactly
    what was done to the data; the p-value is the fraction of replicate
    statistics strictly above the observed one. Replicate streams are
    derived independently from (seed, replicate index), so any execution
    order gives the same answer. Pass an uncorrected fit: replicates are
    re-fitted without bias correction.
    """
    if fit.method != METHOD_MLE:
        raise ValueError("p-value is defined for mle fits")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    counts = table.counts()
    observed = _ad_ks_statistic(counts, fit.s)
    n = table.distinct_count
    m = table.total_users
    p = np.arange(1, n + 1, dtype=np.float64) ** (-fit.s)
    p /= p.sum()
    exceed = 0
    for i in range(replicates):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        sample = rng.multinomial(m, p)
        rep = np.sort(sample[sample > 0])[::-1]
        s_rep, _, _ = _mle_core(rep)
        if _ad_ks_statistic(rep, s_rep) > observed:
            exceed += 1
    return exceed / replicates


def write_fit_tsv(fits: list[ZipfFit], path) -> None:
    """Export fit rows as ``method s slope_m stderr p_value N``."""
    def fmt(v) -> str:
        return "" if v is None else f"{v:.10g}"

    with open(path, "w", newline="\n") as fh:
        fh.write("method\ts\tslope_m\tstderr\tp_value\tN\n")
        for f in fits:
            fh.write(
                f"{f.method}\t{f.s:.10g}\t{fmt(f.slope_m)}\t{fmt(f.stderr)}"
                f"\t{fmt(f.p_value)}\t{f.truncation_N}\n"
            )


def write_binned_tsv(series: BinnedSeries, path) -> None:
    """Export binned points as ``x<TAB>y`` rows for plotting."""
    with open(path, "w", newline="\n") as fh:
        fh.write("x\ty\n")
        for x, y in series.points:
            fh.write(f"{x:.10g}\t{y:.10g}\n")
