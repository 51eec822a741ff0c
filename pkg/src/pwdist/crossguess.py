"""Cross-corpus guessing effectiveness.

A guess ordering replayed against a target table yields a cumulative
recovery curve: C(t) when the target's own optimal ordering is used,
C(t given a reference ordering) otherwise. Matching is exact byte
equality; a password absent from the target simply contributes nothing.
Curves are stored sparsely (only the steps where the cumulative value
changes, plus the final guess index) because full-scale corpora produce
tens of millions of points.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .ingest import RankFrequencyTable, table_from_counter

METRIC_USERS = "users"
METRIC_DISTINCT = "distinct-passwords"
METRICS = (METRIC_USERS, METRIC_DISTINCT)


@dataclass
class GuessOrdering:
    """An ordered list of unique password guesses."""

    guesses: list[bytes]
    source_label: str = ""

    def __post_init__(self):
        if len(set(self.guesses)) != len(self.guesses):
            raise ValueError("guess ordering contains duplicate passwords")

    @classmethod
    def from_table(cls, table: RankFrequencyTable, label: str = "table") -> "GuessOrdering":
        return cls(guesses=table.passwords(), source_label=label)


@dataclass
class GuessCurve:
    """Cumulative recovery per guess index, sparsely encoded.

    ``points`` holds (t, cumulative) at every index where the cumulative
    count changes, plus the final index; ``cumulative_at`` interpolates
    the steps and clamps past the end.
    """

    points: list[tuple[int, int]]
    denominator: int
    metric: str

    @property
    def total_guesses(self) -> int:
        return self.points[-1][0] if self.points else 0

    @property
    def final_cumulative(self) -> int:
        return self.points[-1][1] if self.points else 0

    def cumulative_at(self, t: int) -> int:
        if t < 1:
            return 0
        i = bisect_right(self.points, t, key=lambda p: p[0])
        return self.points[i - 1][1] if i else 0


def curve_from_increments(increments: Iterable[int], denominator: int, metric: str) -> GuessCurve:
    points: list[tuple[int, int]] = []
    cum = 0
    t = 0
    for t, inc in enumerate(increments, start=1):
        if inc:
            cum += inc
            points.append((t, cum))
    if t >= 1 and (not points or points[-1][0] != t):
        points.append((t, cum))
    return GuessCurve(points=points, denominator=denominator, metric=metric)


def self_curve(table: RankFrequencyTable, metric: str = METRIC_USERS) -> GuessCurve:
    """Recovery curve under the table's own (optimal) ordering."""
    if metric == METRIC_USERS:
        return curve_from_increments((c for _, c in table.entries), table.total_users, metric)
    if metric == METRIC_DISTINCT:
        return curve_from_increments((1 for _ in table.entries), table.distinct_count, metric)
    raise ValueError(f"unknown metric {metric!r}")


def cross_curve(
    reference: GuessOrdering, target: RankFrequencyTable, metric: str = METRIC_USERS
) -> GuessCurve:
    """Recovery curve when guessing the target in the reference's order.

    At step t the guess is the reference's t-th password; the users metric
    adds the target's count for that exact password (zero if absent), the
    distinct metric adds one whenever the password is present.
    """
    if not reference.guesses:
        raise ValueError("reference ordering is empty")
    lookup = dict(target.entries)
    if metric == METRIC_USERS:
        increments = (lookup.get(g, 0) for g in reference.guesses)
        denominator = target.total_users
    elif metric == METRIC_DISTINCT:
        increments = (1 if g in lookup else 0 for g in reference.guesses)
        denominator = target.distinct_count
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return curve_from_increments(increments, denominator, metric)


def dictionary_ordering(words: Iterable[bytes], label: str = "dictionary") -> GuessOrdering:
    """Deduplicated words in byte-wise lexical order."""
    return GuessOrdering(guesses=sorted(set(words)), source_label=label)


def truncate_reaggregate(
    table: RankFrequencyTable, max_len: int, tie_break_seed: int = 0
) -> RankFrequencyTable:
    """Truncate every password to its first max_len bytes and re-rank.

    Counts of passwords that become identical are summed; total_users is
    conserved exactly. Truncation is per byte, so a multi-byte text
    character may be split.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    agg: Counter[bytes] = Counter()
    for pw, count in table.entries:
        agg[pw[:max_len]] += count
    return table_from_counter(agg, tie_break_seed=tie_break_seed)


def write_curve_tsv(curve: GuessCurve, path, log_spaced: bool = False) -> None:
    """Export as ``t<TAB>cumulative<TAB>fraction`` rows.

    Dense by default; ``log_spaced`` samples about 512 geometrically
    spaced indices instead, which is what plotting wants at full scale.
    """
    total = curve.total_guesses
    if log_spaced and total >= 1:
        ts = sorted(set(np.geomspace(1, total, num=512).round().astype(int).tolist()))
    else:
        ts = range(1, total + 1)
    denom = curve.denominator
    with open(path, "w", newline="\n") as fh:
        fh.write("t\tcumulative\tfraction\n")
        for t in ts:
            cum = curve.cumulative_at(int(t))
            frac = cum / denom if denom else 0.0
            fh.write(f"{t}\t{cum}\t{frac:.8g}\n")
