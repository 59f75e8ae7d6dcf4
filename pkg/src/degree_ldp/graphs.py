"""Degree frequencies, graphicality, counting bounds and exhaustive small-graph oracles.

Graphs on ``n`` labelled vertices are encoded as bitmasks over the
``C(n, 2)`` vertex pairs taken in lexicographic order ``(0,1), (0,2), ...,
(n-2, n-1)``; bit ``k`` set means pair ``k`` is an edge.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, NTooSmall, TooLarge
from .measures import SparseMeasure
from .tilted import DegreeStatistic

MAX_ENUM_N = 7
CHUNK = 1 << 20


@dataclass(frozen=True)
class DegreeFrequency:
    """Vertex counts ``h_0..h_{n-1}`` by degree."""

    n: int
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if len(counts) > self.n:
            if any(counts[self.n :]):
                raise DomainError(f"degree >= n = {self.n} has positive count")
            counts = counts[: self.n]
        counts = counts + (0,) * (self.n - len(counts))
        if any(c < 0 for c in counts):
            raise DomainError("counts must be non-negative")
        if sum(counts) != self.n:
            raise DomainError(f"counts sum to {sum(counts)}, expected n = {self.n}")
        if sum(i * c for i, c in enumerate(counts)) % 2:
            raise DomainError("degree sum must be even")
        object.__setattr__(self, "counts", counts)

    @property
    def edges(self) -> int:
        return sum(i * c for i, c in enumerate(self.counts)) // 2

    @property
    def max_degree(self) -> int:
        return max(i for i, c in enumerate(self.counts) if c)

    def to_sequence(self) -> tuple[int, ...]:
        """Non-increasing degree sequence."""
        return tuple(i for i in range(self.n - 1, -1, -1) for _ in range(self.counts[i]))

    @classmethod
    def from_sequence(cls, degrees) -> DegreeFrequency:
        d = [int(x) for x in degrees]
        n = len(d)
        if n == 0:
            raise DomainError("empty degree sequence")
        if min(d) < 0 or max(d) > n - 1:
            raise DomainError("degrees must lie in [0, n-1]")
        counts = [0] * n
        for x in d:
            counts[x] += 1
        return cls(n, tuple(counts))

    def label(self) -> str:
        return ";".join(str(c) for c in self.counts)


def to_measure(h: DegreeFrequency) -> SparseMeasure:
    """Empirical degree law ``h / n``."""
    last = h.max_degree
    return SparseMeasure(np.array(h.counts[: last + 1], dtype=float) / h.n)


def erdos_gallai_check(d) -> bool:
    """Whether the non-increasing sequence ``d`` is the degree sequence of a simple graph."""
    d = [int(x) for x in d]
    if any(x < 0 for x in d):
        raise DomainError("degrees must be non-negative")
    if any(a < b for a, b in zip(d, d[1:])):
        raise DomainError("degree sequence must be sorted non-increasing")
    if sum(d) % 2:
        return False
    n = len(d)
    if n == 0:
        return True
    a = np.asarray(d, dtype=np.int64)
    k = np.arange(1, n + 1)
    prefix = np.cumsum(a)
    suffix = np.concatenate([np.cumsum(a[::-1])[::-1], [0]])
    # p[k-1] = number of entries >= k; they form a prefix of the sorted sequence
    p = np.searchsorted(-a, -k, side="right")
    big = np.maximum(p - k, 0)
    rhs = k * (k - 1) + k * big + suffix[np.maximum(k, p)]
    return bool(np.all(prefix <= rhs))


def frequency_from_target(y, n: int) -> DegreeFrequency:
    """Graphical degree frequency whose law is within ``M/n`` of the target ``y``.

    Floors ``n y_i`` for ``i >= 1``, bumps ``h_1`` by one if the degree sum
    would be odd, and gives the remaining vertices degree zero. When the bump
    would leave no degree-zero vertex, one odd-degree vertex is moved to degree
    zero instead.
    """
    y = np.asarray(y, dtype=float).ravel()
    M = y.size - 1
    if M < 2:
        raise DomainError("target must cover degrees 0..M with M >= 2")
    if np.any(y < 0) or abs(math.fsum(y) - 1) > 1e-9:
        raise DomainError("target must be a probability vector")
    if not y[0] > 0:
        raise DomainError("target must put positive mass at 0")
    if M > n - 1:
        raise NTooSmall(f"n = {n} cannot carry degree {M}")
    if y[0] == 1:
        return DegreeFrequency(n, (n,))
    h = [0] + [int(math.floor(n * yi)) for yi in y[1:]]
    h[0] = n - sum(h[1:])
    if sum(i * hi for i, hi in enumerate(h)) % 2:
        if h[0] >= 2:
            h[1] += 1
            h[0] -= 1
        else:
            odd = max(i for i in range(1, M + 1, 2) if h[i])
            h[odd] -= 1
            h[0] += 1
    if h[0] <= 0:
        raise NTooSmall(f"n = {n} too small: no vertices left at degree 0")
    freq = DegreeFrequency(n, tuple(h))
    if not erdos_gallai_check(freq.to_sequence()):
        raise NTooSmall(f"n = {n} too small: constructed frequency is not graphical")
    return freq


def log_mckay_upper(h: DegreeFrequency) -> float:
    """Log of ``(2E)! / (E! 2^E prod i!^{h_i}) * n! / prod h_i!``."""
    c = np.asarray(h.counts, dtype=float)
    i = np.arange(h.n)
    e = h.edges
    return float(
        gammaln(2 * e + 1)
        - gammaln(e + 1)
        - e * math.log(2)
        - np.dot(c, gammaln(i + 1))
        + gammaln(h.n + 1)
        - gammaln(c + 1).sum()
    )


def log_nbar(h: DegreeFrequency, beta: float) -> float:
    """McKay expression times the G(n, beta/n) weight of one graph with E edges."""
    n = h.n
    if not 0 < beta < n:
        raise DomainError(f"need 0 < beta < n, got beta={beta}, n={n}")
    p = beta / n
    e = h.edges
    pairs = n * (n - 1) // 2
    return log_mckay_upper(h) + e * math.log(p) + (pairs - e) * math.log1p(-p)


def pairs_of(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def _check_n(n: int, allow_large: bool) -> None:
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > MAX_ENUM_N and not (allow_large and n == 8):
        raise TooLarge(f"exhaustive enumeration limited to n <= {MAX_ENUM_N} (n = 8 needs allow_large)")


def degree_matrix(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Degrees of every graph with bitmask in ``[start, stop)``, shape ``(stop-start, n)``."""
    pairs = pairs_of(n)
    stop = (1 << len(pairs)) if stop is None else stop
    masks = np.arange(start, stop, dtype=np.uint32)
    deg = np.zeros((masks.size, n), dtype=np.uint8)
    for k, (u, v) in enumerate(pairs):
        bit = ((masks >> np.uint32(k)) & np.uint32(1)).astype(np.uint8)
        deg[:, u] += bit
        deg[:, v] += bit
    return deg


def _chunk_counts(n: int, start: int, stop: int) -> dict[int, int]:
    deg = np.sort(degree_matrix(n, start, stop), axis=1)
    weights = n ** np.arange(n, dtype=np.int64)
    keys = deg.astype(np.int64) @ weights
    uniq, cnt = np.unique(keys, return_counts=True)
    return dict(zip(uniq.tolist(), cnt.tolist()))


@lru_cache(maxsize=16)
def _frequency_counts(n: int) -> tuple[tuple[DegreeFrequency, int], ...]:
    total = 1 << (n * (n - 1) // 2)
    merged: dict[int, int] = {}
    for start in range(0, total, CHUNK):
        for key, c in _chunk_counts(n, start, min(total, start + CHUNK)).items():
            merged[key] = merged.get(key, 0) + c
    out = []
    for key in sorted(merged):
        counts = [0] * n
        k = key
        for _ in range(n):
            counts[k % n] += 1
            k //= n
        out.append((DegreeFrequency(n, tuple(counts)), merged[key]))
    return tuple(out)


def enumerate_frequencies(n: int, beta: float, allow_large: bool = False) -> dict[DegreeFrequency, tuple[int, float]]:
    """Exact count and G(n, beta/n) probability of every realizable degree frequency."""
    _check_n(n, allow_large)
    if n > 1 and not 0 < beta < n:
        raise DomainError(f"need 0 < beta < n, got beta={beta}, n={n}")
    pairs = n * (n - 1) // 2
    p = beta / n if n > 1 else 0.0
    result = {}
    for h, c in _frequency_counts(n):
        e = h.edges
        prob = c * p**e * (1 - p) ** (pairs - e)
        result[h] = (c, prob)
    return result


def realizable_sequences(n: int) -> set[tuple[int, ...]]:
    """Non-increasing degree sequences realized by some graph on n vertices (brute force)."""
    _check_n(n, False)
    return {h.to_sequence() for h, _ in _frequency_counts(n)}


def candidate_sequences(n: int):
    """All non-increasing tuples with entries in ``[0, n-1]``."""
    for combo in itertools.combinations_with_replacement(range(n - 1, -1, -1), n):
        yield combo


def exact_log_partition(n: int, beta: float, f: DegreeStatistic, allow_large: bool = False) -> float:
    """``log E[exp(sum_j f(d_j))]`` under G(n, beta/n), summed over all graphs."""
    _check_n(n, allow_large)
    pairs = n * (n - 1) // 2
    if n == 1:
        return 0.0
    if not 0 < beta < n:
        raise DomainError(f"need 0 < beta < n, got beta={beta}, n={n}")
    p = beta / n
    ftab = f.table(n - 1, check=False)
    logs = []
    for h, c in _frequency_counts(n):
        e = h.edges
        logs.append(
            math.log(c) + e * math.log(p) + (pairs - e) * math.log1p(-p) + float(np.dot(h.counts, ftab))
        )
    return float(logsumexp(logs))


def graph_distribution(n: int, beta: float, f: DegreeStatistic) -> np.ndarray:
    """Exact probability of every graph bitmask under the degree-tilted model."""
    _check_n(n, False)
    pairs = n * (n - 1) // 2
    p = beta / n
    deg = degree_matrix(n).astype(np.int64)
    ftab = f.table(n - 1, check=False)
    e = deg.sum(axis=1) // 2
    logw = e * math.log(p) + (pairs - e) * math.log1p(-p) + ftab[deg].sum(axis=1)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def enumeration_csv(table: dict[DegreeFrequency, tuple[int, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h_vector", "count", "probability"])
    for h, (c, prob) in table.items():
        w.writerow([h.label(), c, f"{prob:.17g}"])
    return buf.getvalue()
