"""Finitely supported probability measures on the non-negative integers.

Provides the mean, the moment-weighted metric ``d(mu, nu) = sum_{i>=1} i |mu_i - nu_i|``,
Kullback-Leibler divergence, truncated Poisson laws and the large-deviation
rate function for the empirical degree distribution of a sparse
Erdos-Renyi graph G(n, beta/n).

Sums are accumulated in ascending index order with ``math.fsum`` so results
do not depend on platform summation quirks.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import DomainError

SUM_TOL = 1e-12


def _fsum(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).tolist())


@dataclass(frozen=True, eq=False)
class SparseMeasure:
    """Probability vector ``weights[0..support_max]`` on N0."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        if w.size == 0:
            raise DomainError("a measure needs at least one support point")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("weights must be finite and non-negative")
        total = _fsum(w)
        if abs(total - 1.0) > SUM_TOL:
            raise DomainError(f"weights sum to {total!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights, normalize: bool = False) -> SparseMeasure:
        w = np.asarray(weights, dtype=float)
        if normalize:
            total = _fsum(w)
            if not total > 0:
                raise DomainError("cannot normalize a zero vector")
            w = w / total
        return cls(w)

    @classmethod
    def point_mass(cls, k: int) -> SparseMeasure:
        if k < 0:
            raise DomainError("point mass location must be >= 0")
        w = np.zeros(k + 1)
        w[k] = 1.0
        return cls(w)

    @property
    def support_max(self) -> int:
        return self.weights.size - 1

    @property
    def mean(self) -> float:
        return mean(self)

    def __len__(self) -> int:
        return self.weights.size

    def __getitem__(self, i: int) -> float:
        if i < 0:
            raise IndexError(i)
        return float(self.weights[i]) if i < self.weights.size else 0.0

    def padded(self, length: int) -> np.ndarray:
        """Weights as an array of at least ``length`` entries (zero padded)."""
        if length <= self.weights.size:
            return self.weights.copy()
        out = np.zeros(length)
        out[: self.weights.size] = self.weights
        return out

    def expect(self, values) -> float:
        """Integral of a function given as a table over ``0..support_max``."""
        v = np.asarray(values, dtype=float)[: self.weights.size]
        nz = self.weights > 0
        return _fsum(self.weights[nz] * v[nz])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMeasure):
            return NotImplemented
        k = max(len(self), len(other))
        return bool(np.array_equal(self.padded(k), other.padded(k)))

    def __repr__(self) -> str:
        return f"SparseMeasure(support_max={self.support_max}, mean={self.mean:.6g})"


def _aligned(mu: SparseMeasure, nu: SparseMeasure) -> tuple[np.ndarray, np.ndarray]:
    k = max(len(mu), len(nu))
    return mu.padded(k), nu.padded(k)


def mean(mu: SparseMeasure) -> float:
    idx = np.arange(len(mu))
    return _fsum(idx * mu.weights)


def metric_d(mu: SparseMeasure, nu: SparseMeasure) -> float:
    """``sum_{i>=1} i |mu_i - nu_i|``; the i=0 coordinate carries no weight."""
    a, b = _aligned(mu, nu)
    idx = np.arange(a.size)
    return _fsum(idx * np.abs(a - b))


def kl_divergence(mu: SparseMeasure, nu: SparseMeasure) -> float:
    """D(mu || nu) with 0 log 0 = 0; ``math.inf`` when mu is not << nu."""
    a, b = _aligned(mu, nu)
    nz = a > 0
    if np.any(b[nz] == 0):
        return math.inf
    return _fsum(a[nz] * (np.log(a[nz]) - np.log(b[nz])))


def poisson_measure(beta: float, tail_tol: float = 1e-12, support_max: int | None = None) -> SparseMeasure:
    """Poisson(beta) truncated where the tail mass drops below ``tail_tol``.

    ``support_max`` forces the truncation point instead, which is handy when
    two Poisson laws must share a support.
    """
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if not 0 < tail_tol < 1:
        raise DomainError("tail_tol must lie in (0, 1)")
    if support_max is None:
        k = 0
        while stats.poisson.sf(k, beta) >= tail_tol:
            k += 1
    else:
        if support_max < 0:
            raise DomainError("support_max must be >= 0")
        k = int(support_max)
    i = np.arange(k + 1)
    logp = i * math.log(beta) - beta - gammaln(i + 1)
    w = np.exp(logp - logp.max())
    return SparseMeasure(w / _fsum(w))


def _entropy_part(mu: SparseMeasure) -> float:
    """``sum_i mu_i log(i! mu_i)`` with 0 log 0 = 0."""
    w = mu.weights
    nz = np.nonzero(w > 0)[0]
    return _fsum(w[nz] * (gammaln(nz + 1) + np.log(w[nz])))


def rate_I(mu: SparseMeasure, beta: float) -> float:
    """Large-deviation rate of the empirical degree law under G(n, beta/n).

    ``I(mu) = sum mu_i log(i! mu_i) - (m/2) log(m beta) + (m + beta)/2`` with
    ``m`` the mean of mu. At ``m = 0`` (mu is the point mass at 0) the middle
    term is replaced by its limit 0, so ``I = beta/2``.
    """
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    m = mean(mu)
    if m == 0.0:
        return beta / 2.0
    return math.fsum([_entropy_part(mu), -0.5 * m * math.log(m * beta), 0.5 * (m + beta)])


def rate_I_divergence_form(mu: SparseMeasure, beta: float) -> float:
    """Same rate written through D(mu || Poisson(beta)); used as a cross-check."""
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    m = mean(mu)
    w = mu.weights
    nz = np.nonzero(w > 0)[0]
    log_p = nz * math.log(beta) - beta - gammaln(nz + 1)
    div = _fsum(w[nz] * (np.log(w[nz]) - log_p))
    tail = 0.0 if m == 0.0 else 0.5 * m * math.log(beta) - 0.5 * m * math.log(m)
    return math.fsum([div, 0.5 * (m - beta), tail])


def poisson_rate(theta: float, beta: float) -> float:
    """Closed form of the rate at Poisson(theta): ``(beta - theta + theta log(theta/beta)) / 2``."""
    if theta == 0:
        return beta / 2.0
    return 0.5 * (beta - theta + theta * math.log(theta / beta))


def level_set_lower_bound(m: float, beta: float) -> float:
    """Mean-only lower bound on the rate; diverges as the mean grows.

    ``g(m) = m log(m)/2 - m (log 2 + (1 + log beta)/2) + beta/2 - log 2``.
    """
    mlogm = 0.0 if m == 0 else m * math.log(m)
    return 0.5 * mlogm - m * (math.log(2) + 0.5 * (1 + math.log(beta))) + beta / 2 - math.log(2)


def truncate_renormalize(nu: SparseMeasure, k: int) -> SparseMeasure:
    """Restrict nu to ``{0..k}`` and renormalize."""
    if k < 0:
        raise DomainError("truncation index must be >= 0")
    head = nu.weights[: k + 1]
    total = _fsum(head)
    if not total > 0:
        raise DomainError(f"no mass on [0, {k}]")
    return SparseMeasure(head / total)


def to_csv(mu: SparseMeasure) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "weight"])
    for i, x in enumerate(mu.weights):
        w.writerow([i, f"{x:.17g}"])
    return buf.getvalue()


def from_csv(text: str) -> SparseMeasure:
    """Parse ``i,weight`` rows; missing indices are zero."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise DomainError("empty measure file")
    pairs = [(int(r["i"]), float(r["weight"])) for r in rows]
    if any(i < 0 for i, _ in pairs):
        raise DomainError("negative support index")
    w = np.zeros(max(i for i, _ in pairs) + 1)
    for i, x in pairs:
        w[i] += x
    return SparseMeasure(w)


def read_measure(path: str | Path) -> SparseMeasure:
    return from_csv(Path(path).read_text())
