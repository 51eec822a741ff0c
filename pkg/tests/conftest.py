from __future__ import annotations

import numpy as np
import pytest

from pwdist.ingest import CredentialRecord, RankFrequencyTable, table_from_counter


def records_from(pairs) -> list[CredentialRecord]:
    """Build records from (user, password[, line_no]) tuples."""
    out = []
    for i, item in enumerate(pairs, start=1):
        if len(item) == 3:
            user, pw, line_no = item
        else:
            user, pw = item
            line_no = i
        out.append(CredentialRecord(user=user, password=pw, line_no=line_no))
    return out


def table_of(counts: dict[bytes, int], seed: int = 0) -> RankFrequencyTable:
    return table_from_counter(counts, tie_break_seed=seed)


@pytest.fixture
def four_rank_table() -> RankFrequencyTable:
    """Counts 12/r at ranks 1..4: exactly collinear in log-log space."""
    return table_of({b"a": 12, b"b": 6, b"c": 4, b"d": 3})


def random_table(rng: np.random.Generator, max_distinct: int = 30, max_count: int = 9):
    """A small random table over a shared password universe."""
    n = int(rng.integers(1, max_distinct + 1))
    universe = [b"w%03d" % i for i in range(60)]
    picks = rng.choice(len(universe), size=n, replace=False)
    counts = {universe[int(i)]: int(rng.integers(1, max_count + 1)) for i in picks}
    return table_from_counter(counts, tie_break_seed=int(rng.integers(0, 2**32)))
