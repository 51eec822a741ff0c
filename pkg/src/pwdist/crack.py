"""Offline cracking harness over salted hashed corpora.

The hash scheme is pluggable. The built-in ``trunc8-mix64`` scheme mirrors
the shape of classic crypt(3) (8-byte truncation, small printable salts)
without implementing it: the digest is a 64-bit FNV-1a over salt bytes then
password bytes, finished with the splitmix64 avalanche, so independent
implementations interoperate bit for bit. The cracking loop buckets
entries per salt and hashes each fresh guess once per salt that still has
uncracked entries, which is exactly why real salted corpora cost thousands
of hash calls per guess.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .crossguess import GuessCurve, GuessOrdering, METRIC_DISTINCT, METRIC_USERS, curve_from_increments
from .ingest import CredentialRecord
from .tsvio import escape_field, unescape_field

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

CRYPT_SALT_ALPHABET = b"./0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"

HASHES_HEADER = b"user\tsalt-hex\tdigest-hex"


@dataclass(frozen=True)
class HashScheme:
    """Deterministic salted hash plus its truncation and salt conventions."""

    name: str
    truncate_len: int | None
    hash: Callable[[bytes, bytes], bytes]
    salt_len: int = 2
    salt_alphabet: bytes = CRYPT_SALT_ALPHABET

    def truncate(self, password: bytes) -> bytes:
        if self.truncate_len is None:
            return password
        return password[: self.truncate_len]


@dataclass(frozen=True)
class HashedEntry:
    user: str
    salt: bytes
    digest: bytes


def _fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _avalanche64(z: int) -> int:
    # splitmix64 finaliser constants
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def _trunc8_mix64(salt: bytes, password: bytes) -> bytes:
    h = _fnv1a64(password[:8], _fnv1a64(salt))
    return _avalanche64(h).to_bytes(8, "big")


def builtin_scheme(tag: str) -> HashScheme:
    """Look up a built-in scheme by tag; only ``trunc8-mix64`` exists."""
    if tag == "trunc8-mix64":
        return HashScheme(name="trunc8-mix64", truncate_len=8, hash=_trunc8_mix64)
    raise ValueError(f"unknown hash scheme {tag!r}")


def generate_salts(scheme: HashScheme, salt_seed: int, salt_count: int) -> list[bytes]:
    """The seeded set of distinct salts a corpus is hashed under."""
    if salt_count < 1:
        raise ValueError("salt_count must be >= 1")
    space = len(scheme.salt_alphabet) ** scheme.salt_len
    if salt_count > space:
        raise ValueError(f"scheme admits only {space} distinct salts")
    rng = random.Random(salt_seed)
    salts: list[bytes] = []
    seen: set[bytes] = set()
    while len(salts) < salt_count:
        salt = bytes(rng.choice(scheme.salt_alphabet) for _ in range(scheme.salt_len))
        if salt not in seen:
            seen.add(salt)
            salts.append(salt)
    return salts


def hash_corpus(
    records: Sequence[CredentialRecord],
    scheme: HashScheme,
    salt_seed: int,
    salt_count: int,
) -> list[HashedEntry]:
    """Hash each record under a salt drawn uniformly from a seeded salt set."""
    salts = generate_salts(scheme, salt_seed, salt_count)
    rng = random.Random((salt_seed ^ 0x5A17) & _MASK64)
    entries: list[HashedEntry] = []
    for rec in records:
        salt = salts[rng.randrange(salt_count)]
        digest = scheme.hash(salt, scheme.truncate(rec.password))
        entries.append(HashedEntry(user=rec.user, salt=salt, digest=digest))
    return entries


@dataclass
class CrackReport:
    """Recovery curves plus who got cracked.

    The distinct-password curve's denominator is an upper bound that
    assumes every uncracked password is unique; with salted hashes the
    true distinct count of the uncracked remainder is unknowable.
    """

    curve_users: GuessCurve
    curve_distinct: GuessCurve
    cracked: list[tuple[str, bytes]]
    uncracked_count: int


def crack(entries: Sequence[HashedEntry], ordering: GuessOrdering, scheme: HashScheme) -> CrackReport:
    """Replay a guess ordering against a hashed corpus.

    Guesses are truncated per scheme before hashing; a guess that repeats
    an earlier one after truncation advances the curve without hashing, so
    each (salt, guess) pair costs at most one hash evaluation. Matched
    entries leave the working set, and a salt with no entries left stops
    being hashed at all.
    """
    buckets: dict[bytes, dict[bytes, list[str]]] = {}
    for entry in entries:
        buckets.setdefault(entry.salt, {}).setdefault(entry.digest, []).append(entry.user)
    live = set(buckets)
    tried: set[bytes] = set()
    users_inc: list[int] = []
    distinct_inc: list[int] = []
    cracked: list[tuple[str, bytes]] = []
    for guess in ordering.guesses:
        truncated = scheme.truncate(guess)
        got = 0
        if truncated not in tried:
            tried.add(truncated)
            for salt in list(live):
                users = buckets[salt].pop(scheme.hash(salt, truncated), None)
                if users:
                    got += len(users)
                    cracked.extend((u, truncated) for u in users)
                    if not buckets[salt]:
                        live.discard(salt)
        users_inc.append(got)
        distinct_inc.append(1 if got else 0)
    distinct_recovered = sum(distinct_inc)
    uncracked = len(entries) - len(cracked)
    return CrackReport(
        curve_users=curve_from_increments(users_inc, len(entries), METRIC_USERS),
        curve_distinct=curve_from_increments(
            distinct_inc, distinct_recovered + uncracked, METRIC_DISTINCT
        ),
        cracked=cracked,
        uncracked_count=uncracked,
    )


def write_hashes_tsv(entries: Sequence[HashedEntry], path) -> None:
    """Export as ``user<TAB>salt-hex<TAB>digest-hex``."""
    with open(path, "wb") as fh:
        fh.write(HASHES_HEADER + b"\n")
        for e in entries:
            fh.write(
                escape_field(e.user.encode("latin-1"))
                + b"\t" + e.salt.hex().encode() + b"\t" + e.digest.hex().encode() + b"\n"
            )


def read_hashes_tsv(path) -> list[HashedEntry]:
    entries: list[HashedEntry] = []
    with open(path, "rb") as fh:
        header = fh.readline().rstrip(b"\r\n")
        if header != HASHES_HEADER:
            raise ValueError(f"not a hashed-corpus file: {path}")
        for raw in fh:
            line = raw.rstrip(b"\n")
            if line.endswith(b"\r"):
                line = line[:-1]
            if not line:
                continue
            parts = line.split(b"\t")
            if len(parts) != 3:
                raise ValueError(f"malformed hashes row: {line!r}")
            user, salt_hex, digest_hex = parts
            entries.append(
                HashedEntry(
                    user=unescape_field(user).decode("latin-1"),
                    salt=bytes.fromhex(salt_hex.decode()),
                    digest=bytes.fromhex(digest_hex.decode()),
                )
            )
    return entries


def write_cracked_tsv(report: CrackReport, path) -> None:
    with open(path, "wb") as fh:
        fh.write(b"user\tpassword\n")
        for user, password in report.cracked:
            fh.write(escape_field(user.encode("latin-1")) + b"\t" + escape_field(password) + b"\n")
