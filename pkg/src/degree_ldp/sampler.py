"""Sparse Erdos-Renyi sampling, the edge-flip Metropolis chain and Monte Carlo checks.

Randomness comes from numpy's PCG64 generator. Independent chains get
child streams spawned from one ``SeedSequence``, so a fixed seed reproduces
every chain bit for bit regardless of how many chains run.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import flip_chain
from .errors import DomainError
from .measures import SparseMeasure, metric_d
from .tilted import DegreeStatistic, VariationalSolution, tilted_measure

SEED_ENV = "DEGREE_LDP_SEED"
BATCH = 1 << 22


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "20130601"))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(default_seed() if seed is None else seed)


class Graph:
    """Simple undirected graph on ``range(n)`` with incrementally kept degrees."""

    def __init__(self, n: int, adjacency=None):
        if n < 1:
            raise DomainError("n must be >= 1")
        self.n = n
        if adjacency is None:
            self.adj = np.zeros((n, n), dtype=np.uint8)
        else:
            self.adj = np.array(adjacency, dtype=np.uint8)
            if self.adj.shape != (n, n):
                raise DomainError("adjacency shape does not match n")
        self.degrees = self.adj.sum(axis=1).astype(np.int64)
        self.check()

    @classmethod
    def from_edges(cls, n: int, edges) -> Graph:
        g = cls(n)
        for u, v in edges:
            g.add_edge(u, v)
        return g

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise DomainError("self-loops are not allowed")
        if not self.adj[u, v]:
            self.adj[u, v] = self.adj[v, u] = 1
            self.degrees[u] += 1
            self.degrees[v] += 1

    def remove_edge(self, u: int, v: int) -> None:
        if self.adj[u, v]:
            self.adj[u, v] = self.adj[v, u] = 0
            self.degrees[u] -= 1
            self.degrees[v] -= 1

    @property
    def edges(self) -> set[tuple[int, int]]:
        iu, iv = np.nonzero(np.triu(self.adj, 1))
        return set(zip(iu.tolist(), iv.tolist()))

    @property
    def n_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def bitmask(self) -> int:
        iu, iv = np.triu_indices(self.n, 1)
        bits = self.adj[iu, iv].astype(np.int64)
        return int((bits << np.arange(bits.size, dtype=np.int64)).sum())

    def check(self) -> None:
        if np.any(np.diag(self.adj)):
            raise DomainError("graph has a self-loop")
        if not np.array_equal(self.adj, self.adj.T):
            raise DomainError("adjacency is not symmetric")
        if np.any(self.adj > 1):
            raise DomainError("multi-edge")
        if not np.array_equal(self.degrees, self.adj.sum(axis=1)):
            raise DomainError("degree bookkeeping out of sync")


def _check_beta(n: int, beta: float) -> None:
    if not 0 < beta < n:
        raise DomainError(f"need 0 < beta < n, got beta={beta}, n={n}")


def sample_er(n: int, beta: float, seed=None) -> Graph:
    """G(n, beta/n): each pair present independently with probability beta/n."""
    _check_beta(n, beta)
    rng = _rng(seed)
    iu, iv = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < beta / n
    adj = np.zeros((n, n), dtype=np.uint8)
    adj[iu[keep], iv[keep]] = 1
    adj[iv[keep], iu[keep]] = 1
    return Graph(n, adj)


def empirical_degree_distribution(g: Graph) -> SparseMeasure:
    counts = np.bincount(g.degrees, minlength=1)
    return SparseMeasure(counts / g.n)


@dataclass(frozen=True)
class ChainConfig:
    n: int
    beta: float
    statistic: DegreeStatistic
    burn_in: int = 1000
    samples: int = 100
    thin: int = 10
    seed: int = field(default_factory=default_seed)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("chain needs n >= 2")
        _check_beta(self.n, self.beta)
        if self.burn_in < 0 or self.samples < 1 or self.thin < 1:
            raise DomainError("burn_in >= 0, samples >= 1 and thin >= 1 required")


@dataclass(frozen=True)
class SampleSummary:
    mean_empirical_measure: SparseMeasure
    distance_to_prediction: float | None
    mean_edges: float
    acceptance_rate: float
    mean_mu_f: float = math.nan
    samples: int = 0
    sample_distances: tuple[float, ...] = ()

    def to_record(self) -> dict:
        return {
            "mean_empirical_measure": self.mean_empirical_measure.weights.tolist(),
            "distance_to_prediction": self.distance_to_prediction,
            "mean_edges": self.mean_edges,
            "acceptance_rate": self.acceptance_rate,
            "mean_mu_f": self.mean_mu_f,
            "samples": self.samples,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_record(), **kw)


class _Chain:
    def __init__(self, n: int, beta: float, f: DegreeStatistic, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self.ftab = np.ascontiguousarray(f.table(n - 1, check=False), dtype=np.float64)
        self.log_odds = math.log(beta / n) - math.log1p(-beta / n)
        iu, iv = np.triu_indices(n, 1)
        self.pair_u = iu.astype(np.int64)
        self.pair_v = iv.astype(np.int64)
        self.npairs = iu.size
        g = sample_er(n, beta, rng)
        self.adj = g.adj
        self.deg = g.degrees
        self.edges = g.n_edges
        self.state = g.bitmask() if n <= 8 else 0
        self.proposals = 0
        self.accepted = 0

    def step(self, proposals: int, visits: np.ndarray | None = None) -> None:
        track = visits is not None
        buf = visits if track else np.zeros(1, dtype=np.int64)
        left = proposals
        while left > 0:
            size = min(left, BATCH)
            picks = self.rng.integers(0, self.npairs, size=size)
            uni = self.rng.random(size)
            acc, self.state, de = flip_chain(
                self.adj, self.deg, self.ftab, self.log_odds, self.pair_u, self.pair_v,
                picks, uni, np.int64(self.state), buf, track,
            )
            self.accepted += acc
            self.edges += de
            left -= size
        self.proposals += proposals

    def sweeps(self, k: int) -> None:
        self.step(k * self.npairs)

    def measure(self) -> np.ndarray:
        return np.bincount(self.deg, minlength=self.n) / self.n


def _distance(weights: np.ndarray, predictions) -> float:
    mu = SparseMeasure.from_weights(weights, normalize=True)
    return min(metric_d(mu, p) for p in predictions)


def mcmc_run(cfg: ChainConfig, prediction=None, trace: list | None = None) -> SampleSummary:
    """Run one edge-flip Metropolis chain targeting the degree-tilted model.

    ``prediction`` is a measure (or list of measures) the retained samples are
    compared against. If ``trace`` is a list, one ``(sweep, edges, mu_f,
    distance)`` tuple per retained sample is appended to it.
    """
    preds = None
    if prediction is not None:
        preds = [prediction] if isinstance(prediction, SparseMeasure) else list(prediction)
    ch = _Chain(cfg.n, cfg.beta, cfg.statistic, _rng(cfg.seed))
    ch.sweeps(cfg.burn_in)
    acc = np.zeros(cfg.n)
    edges = 0.0
    mu_f = 0.0
    dists = []
    for s in range(cfg.samples):
        ch.sweeps(cfg.thin)
        w = ch.measure()
        acc += w
        edges += ch.edges
        mf = float(ch.ftab[ch.deg].mean())
        mu_f += mf
        d = _distance(w, preds) if preds else math.nan
        if preds:
            dists.append(d)
        if trace is not None:
            trace.append((cfg.burn_in + (s + 1) * cfg.thin, ch.edges, mf, d))
    mean_w = acc / cfg.samples
    mean_mu = SparseMeasure.from_weights(np.trim_zeros(mean_w, "b") if mean_w.any() else mean_w, normalize=True)
    return SampleSummary(
        mean_empirical_measure=mean_mu,
        distance_to_prediction=_distance(mean_w, preds) if preds else None,
        mean_edges=edges / cfg.samples,
        acceptance_rate=ch.accepted / ch.proposals if ch.proposals else 0.0,
        mean_mu_f=mu_f / cfg.samples,
        samples=cfg.samples,
        sample_distances=tuple(dists),
    )


def chain_seeds(seed, chains: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(chains)


def run_chains(cfg: ChainConfig, chains: int, prediction=None) -> list[SampleSummary]:
    """Independent chains with child seeds derived from ``cfg.seed``."""
    out = []
    for ss in chain_seeds(cfg.seed, chains):
        sub = ChainConfig(cfg.n, cfg.beta, cfg.statistic, cfg.burn_in, cfg.samples, cfg.thin, seed=ss)
        out.append(mcmc_run(sub, prediction))
    return out


def merge_summaries(parts: list[SampleSummary], prediction=None) -> SampleSummary:
    """Sample-weighted average of chain summaries."""
    if not parts:
        raise DomainError("nothing to merge")
    total = sum(p.samples for p in parts)
    size = max(len(p.mean_empirical_measure) for p in parts)
    w = sum(p.mean_empirical_measure.padded(size) * p.samples for p in parts) / total
    mu = SparseMeasure.from_weights(w, normalize=True)
    preds = None
    if prediction is not None:
        preds = [prediction] if isinstance(prediction, SparseMeasure) else list(prediction)
    avg = lambda attr: sum(getattr(p, attr) * p.samples for p in parts) / total
    return SampleSummary(
        mean_empirical_measure=mu,
        distance_to_prediction=_distance(w, preds) if preds else None,
        mean_edges=avg("mean_edges"),
        acceptance_rate=avg("acceptance_rate"),
        mean_mu_f=avg("mean_mu_f"),
        samples=total,
        sample_distances=tuple(d for p in parts for d in p.sample_distances),
    )


def chain_state_frequencies(n: int, beta: float, f: DegreeStatistic, proposals: int, seed=None,
                            burn_in: int = 10_000) -> np.ndarray:
    """Fraction of proposals after burn-in spent in each graph bitmask (small n only)."""
    if n > 6:
        raise DomainError("state tracking is limited to n <= 6")
    ch = _Chain(n, beta, f, _rng(seed))
    ch.step(burn_in)
    visits = np.zeros(1 << ch.npairs, dtype=np.int64)
    ch.step(proposals, visits)
    return visits / visits.sum()


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def estimate_log_partition(n: int, beta: float, f: DegreeStatistic, samples: int, seed=None):
    """Monte Carlo ``log E[exp(sum_j f(d_j))]`` with graphs drawn from G(n, beta/n).

    Returns ``(estimate, std_error)``; the error is the delta-method standard
    error of the log of the sample mean.
    """
    _check_beta(n, beta)
    if samples < 2:
        raise DomainError("need at least 2 samples")
    if f.superlinear:
        warnings.warn(f"{f.label} is superlinear; the estimator variance explodes with n", RuntimeWarning)
    rng = _rng(seed)
    ftab = f.table(n - 1, check=False)
    iu, iv = np.triu_indices(n, 1)
    inc = np.zeros((iu.size, n), dtype=np.float32)
    inc[np.arange(iu.size), iu] = 1
    inc[np.arange(iu.size), iv] = 1
    batch = max(1, BATCH // max(1, iu.size))
    xs = []
    left = samples
    while left > 0:
        size = min(batch, left)
        e = (rng.random((size, iu.size)) < beta / n).astype(np.float32)
        deg = (e @ inc).astype(np.int64)
        xs.append(ftab[deg].sum(axis=1))
        left -= size
    x = np.concatenate(xs)
    top = x.max()
    w = np.exp(x - top)
    mw = w.mean()
    se = w.std(ddof=1) / (math.sqrt(samples) * mw)
    return float(top + math.log(mw)), float(se)


@dataclass(frozen=True)
class ConcentrationResult:
    distance: float
    theta: float
    sample_distances: tuple[float, ...]
    chain_distances: tuple[float, ...]
    note: str = "thresholds on these distances are engineering choices; no convergence rate is known"

    @property
    def mean_chain_distance(self) -> float:
        return float(np.mean(self.chain_distances))


def concentration_check(cfg: ChainConfig, solution: VariationalSolution, chains: int = 1) -> ConcentrationResult:
    """Distance from the chain's mean degree law to the nearest predicted tilted law."""
    if solution.degenerate or not solution.minimizers:
        raise DomainError("concentration check needs a non-degenerate solution")
    preds = [tilted_measure(t, cfg.statistic).measure for t in solution.thetas]
    parts = run_chains(cfg, chains, preds) if chains > 1 else [mcmc_run(cfg, preds)]
    merged = merge_summaries(parts)
    dists = [metric_d(merged.mean_empirical_measure, p) for p in preds]
    k = int(np.argmin(dists))
    return ConcentrationResult(
        distance=float(dists[k]),
        theta=solution.thetas[k],
        sample_distances=merged.sample_distances,
        chain_distances=tuple(p.distance_to_prediction for p in parts),
    )
