"""Acceptance checks, runnable from the CLI (``degree-ldp verify``) and from pytest.

Each check returns a :class:`CriterionResult`; tolerances are fixed here and
never adjusted at run time. ``quick=True`` only shrinks Monte Carlo and
random-draw counts where noted, the tolerances stay the same.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import graphs, measures, penalty, sampler, tilted


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


BETAS = (0.5, 1.0, 2.0, 6.5)
FIGURES = {1: (1.2, 0.5), 2: (6.5, 0.04), 3: (5.89, 0.05)}


def rate_zero(quick: bool = False):
    worst = max(abs(measures.rate_I(measures.poisson_measure(b, 1e-14), b)) for b in BETAS)
    return worst <= 1e-8, f"max |I(p_beta)| = {worst:.2e} (tol 1e-8)"


def poisson_section(quick: bool = False):
    thetas = (0.3, 1.0, 2.5, 5.0, 9.0)
    worst = 0.0
    for b in BETAS:
        for t in thetas:
            got = measures.rate_I(measures.poisson_measure(t, 1e-14), b)
            worst = max(worst, abs(got - measures.poisson_rate(t, b)))
    return worst <= 1e-8, f"max error over 20 (theta, beta) = {worst:.2e} (tol 1e-8)"


def builtin_statistics():
    """Statistics (with beta) exercised by the stationarity criterion."""
    out = [(tilted.zero(), b) for b in (1.0, 2.0)]
    for b in (1.0, 2.0):
        out += [(tilted.kstar(2, g), b) for g in (-0.5, -1.0, -2.0)]
        out += [(tilted.gwd(lam, g), b) for lam in (0.5, 1.0) for g in (-2.0, 2.0)]
        out += [(tilted.alt_kstar(0.5, g), b) for g in (-1.0, 1.0)]
    out += [(tilted.penalty(math.log(eg)), b) for b, eg in FIGURES.values()]
    return out


def stationarity(quick: bool = False):
    worst, count = 0.0, 0
    for f, b in builtin_statistics():
        sol = tilted.solve_J(f, b)
        for m in sol.minimizers:
            worst = max(worst, tilted.stationarity_residual(m.theta, f, b))
            count += 1
    return worst <= 1e-6, f"{count} minimizers, max |theta - sqrt(beta m)| = {worst:.2e} (tol 1e-6)"


def closed_forms(quick: bool = False):
    worst = 0.0
    for t in np.linspace(0.5, 10.0, 20):
        for eg in np.linspace(0.01, 5.0, 20):
            g = math.log(eg)
            f = tilted.penalty(g)
            logc, m, _ = tilted.tilted_moments([t], f)
            worst = max(worst, abs(penalty.penalty_normalizer(t, g) - logc[0]), abs(penalty.penalty_mean(t, g) - m[0]))
    return worst <= 1e-10, f"400-point grid, max |closed form - series| = {worst:.2e} (tol 1e-10)"


def figures(quick: bool = False):
    c1 = penalty.classify_phase(penalty.PenaltyModel.from_e_gamma(*FIGURES[1]))
    c2 = penalty.classify_phase(penalty.PenaltyModel.from_e_gamma(*FIGURES[2]))
    c3 = penalty.classify_phase(penalty.PenaltyModel.from_e_gamma(*FIGURES[3]), tie_tol=0.05)
    ok = (
        c1.regime is penalty.Regime.UNIQUE_MIN
        and c2.regime is penalty.Regime.THREE_ROOTS_UNIQUE_GLOBAL
        and len(c3.local_minima) == 2
        and c3.gap <= 0.05
    )
    return ok, f"fig1={c1.regime}, fig2={c2.regime}, fig3 minima={len(c3.local_minima)} gap={c3.gap:.2e} (tol 0.05)"


def unique_root_region(quick: bool = False, draws: int | None = None):
    draws = draws or (2_000 if quick else 10_000)
    rng = np.random.default_rng(51)
    bad = 0
    for j in range(draws):
        if j % 2:
            a, b = rng.uniform(0.01, 20.0), rng.uniform(1.0 + 1e-9, 20.0)
        else:
            a, b = rng.uniform(0.01, 4.0 - 1e-9), rng.uniform(1e-3, 1.0 - 1e-9)
        if len(penalty.find_fixed_points(penalty.PenaltyModel.from_e_gamma(a, b))) != 1:
            bad += 1
    return bad == 0, f"{draws} draws with b > 1 or a < 4, {bad} without exactly one fixed point"


def counting_bounds(quick: bool = False):
    checked = violations = 0
    for n in (4, 5, 6):
        for b in (0.5, 1.0, 2.0):
            for h, (count, prob) in graphs.enumerate_frequencies(n, b).items():
                checked += 1
                if math.log(count) > graphs.log_mckay_upper(h) + 1e-12:
                    violations += 1
                if math.log(prob) > graphs.log_nbar(h, b) + 1e-12:
                    violations += 1
    return violations == 0, f"{checked} (n, beta, h) cases, {violations} bound violations"


def erdos_gallai(quick: bool = False):
    checked = mismatches = 0
    for n in range(1, 7):
        real = graphs.realizable_sequences(n)
        for d in graphs.candidate_sequences(n):
            checked += 1
            if graphs.erdos_gallai_check(d) != (d in real):
                mismatches += 1
    return mismatches == 0, f"{checked} candidate sequences on n <= 6, {mismatches} mismatches"


def partition_oracle(quick: bool = False):
    samples = 200_000 if quick else 1_000_000
    stats = {
        "penalty": tilted.penalty(math.log(0.5)),
        "kstar": tilted.kstar(2, -1.0),
        "gwd": tilted.gwd(1.0, 2.0),
    }
    parts, ok = [], True
    for seed, (name, f) in enumerate(stats.items()):
        est, se = sampler.estimate_log_partition(6, 1.0, f, samples, seed=1000 + seed)
        exact = graphs.exact_log_partition(6, 1.0, f)
        z = abs(est - exact) / se
        ok &= z <= 3.0
        parts.append(f"{name} {z:.2f}SE")
    return ok, f"{samples} samples, " + ", ".join(parts) + " (tol 3 SE)"


def degeneracy_trend(quick: bool = False):
    ns = (4, 5, 6, 7)
    pos = [graphs.exact_log_partition(n, 1.0, tilted.kstar(2, 1.0)) / n for n in ns]
    neg = [graphs.exact_log_partition(n, 1.0, tilted.kstar(2, -1.0)) / n for n in ns]
    j = tilted.solve_J(tilted.kstar(2, -1.0), 1.0).j_value
    gaps = [v + j for v in neg]
    rising = all(b > a for a, b in zip(pos, pos[1:]))
    bounded = all(-j <= v <= 0 for v in neg)
    same_sign = all(g > 0 for g in gaps) or all(g < 0 for g in gaps)
    shrinking = all(abs(b) < abs(a) for a, b in zip(gaps, gaps[1:]))
    ok = rising and bounded and same_sign and shrinking
    return ok, (
        f"gamma=+1: {', '.join(f'{v:.3f}' for v in pos)}; gamma=-1: {', '.join(f'{v:.4f}' for v in neg)} "
        f"-> -J = {-j:.4f}"
    )


def mcmc_tv(quick: bool = False):
    proposals = 2_000_000 if quick else 10_000_000
    stats = {"zero": tilted.zero(), "penalty": tilted.penalty(math.log(0.5)), "gwd": tilted.gwd(1.0, 2.0)}
    parts, ok = [], True
    for seed, (name, f) in enumerate(stats.items()):
        freq = sampler.chain_state_frequencies(4, 1.0, f, proposals, seed=2000 + seed)
        tv = sampler.total_variation(freq, graphs.graph_distribution(4, 1.0, f))
        ok &= tv <= 0.02
        parts.append(f"{name} {tv:.4f}")
    return ok, f"n=4, {proposals} proposals, TV " + ", ".join(parts) + " (tol 0.02)"


def concentration_trend(quick: bool = False):
    chains = 8 if quick else 20
    cases = {"zero": (tilted.zero(), 2.0), "penalty fig1": (tilted.penalty(math.log(0.5)), 1.2)}
    parts, ok = [], True
    for name, (f, b) in cases.items():
        sol = tilted.solve_J(f, b)
        dists = []
        for n in (100, 200, 500):
            cfg = sampler.ChainConfig(n, b, f, burn_in=20, samples=20, thin=2, seed=3000 + n)
            dists.append(sampler.concentration_check(cfg, sol, chains=chains).mean_chain_distance)
        ok &= dists[0] > dists[1] > dists[2]
        parts.append(f"{name} " + " > ".join(f"{d:.4f}" for d in dists))
    return ok, f"{chains} chains, n=100/200/500: " + "; ".join(parts)


def construction(quick: bool = False, draws: int = 1000):
    rng = np.random.default_rng(132)
    bad = 0
    for _ in range(draws):
        M = int(rng.integers(2, 9))
        y = rng.dirichlet(np.ones(M + 1))
        n = int(rng.integers(20 * M, 200 * M + 1))
        try:
            h = graphs.frequency_from_target(y, n)
        except graphs.NTooSmall:
            bad += 1
            continue
        w = np.array(h.counts[: M + 1], dtype=float) / n
        err = np.max(np.abs(w - y))
        even = sum(i * c for i, c in enumerate(h.counts)) % 2 == 0
        if err > M / n or not even or not graphs.erdos_gallai_check(h.to_sequence()) or any(h.counts[M + 1 :]):
            bad += 1
    return bad == 0, f"{draws} random targets with n >= 20M, {bad} failures"


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("rate-function zero", rate_zero),
    2: ("Poisson section formula", poisson_section),
    3: ("stationarity of minimizers", stationarity),
    4: ("closed form vs series", closed_forms),
    5: ("figure regimes", figures),
    6: ("unique fixed point region", unique_root_region),
    7: ("counting-bound dominance", counting_bounds),
    8: ("Erdos-Gallai equivalence", erdos_gallai),
    9: ("partition-function oracle", partition_oracle),
    10: ("k-star degeneracy trend", degeneracy_trend),
    11: ("MCMC total variation", mcmc_tv),
    12: ("concentration trend", concentration_trend),
    13: ("degree-frequency construction", construction),
}


def run_criterion(number: int, quick: bool = False) -> CriterionResult:
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        passed, detail = fn(quick=quick)
    except Exception as exc:  # a crashing check is a failed check
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return CriterionResult(number, title, bool(passed), detail, time.perf_counter() - t0)


def run_all(quick: bool = False, only=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for k in sorted(CRITERIA):
        if only and k not in only:
            continue
        r = run_criterion(k, quick)
        if echo:
            echo(r.line())
        results.append(r)
    return results
