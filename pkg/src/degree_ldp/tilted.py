"""Degree statistics, the tilted family and the one-dimensional variational problem.

For a degree function ``f`` with ``f(0) = 0`` the tilted law is

    sigma_{theta,f}(i) = theta^i exp(f(i)) / i! / exp(C(theta, f))

and the free energy of the degree-based ERGM with edge parameter beta is
``-J(f)`` where

    J(f) = inf_{theta >= 0} m log(theta) - C - (m/2) log(m beta) + (m + beta)/2

with ``m = m(theta)`` the mean of sigma. Minimizers satisfy the fixed-point
relation ``theta = sqrt(beta m(theta))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, stats
from scipy.special import comb, gammaln, logsumexp

from .errors import DegenerateStatistic, DomainError, NoConfinement
from .measures import SparseMeasure

BOUNDED = "bounded"
LINEAR = "linear"
SUPERLINEAR = "superlinear"

DEFAULT_TAIL_TOL = 1e-16
GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class DegreeStatistic:
    """A degree function ``f: N0 -> R`` together with its growth class.

    ``bound`` is the constant of the growth class: ``|f(i)| <= bound`` for
    bounded statistics and ``f(i) <= bound * i`` for linear ones. When
    ``two_sided`` is set a linear statistic also satisfies ``f(i) >= -bound * i``.
    """

    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    growth: str
    bound: float
    label: str
    two_sided: bool = True

    def __call__(self, i):
        arr = np.asarray(i, dtype=np.int64)
        out = np.asarray(self.func(arr), dtype=float)
        return float(out) if out.ndim == 0 else out

    @property
    def superlinear(self) -> bool:
        return self.growth == SUPERLINEAR

    def table(self, upto: int, check: bool = True) -> np.ndarray:
        """Values ``f(0..upto)``, verifying the declared growth on that range."""
        i = np.arange(upto + 1)
        v = np.broadcast_to(self(i), i.shape).astype(float)
        if check:
            self._check(i, v)
        return v

    def _check(self, i: np.ndarray, v: np.ndarray) -> None:
        if v[0] != 0:
            raise DomainError(f"{self.label}: f(0) = {v[0]} but must be 0")
        if self.growth == BOUNDED:
            slack = 1e-9 * (1 + self.bound)
            bad = np.abs(v) > self.bound + slack
        elif self.growth == LINEAR:
            slack = 1e-9 * (1 + self.bound * i)
            bad = v > self.bound * i + slack
            if self.two_sided:
                bad |= v < -self.bound * i - slack
        else:
            return
        if np.any(bad):
            k = int(i[np.argmax(bad)])
            raise DomainError(f"{self.label}: f({k}) = {v[k]} violates its {self.growth} bound {self.bound}")

    def tail_log_bound(self, theta: float, k: int) -> float:
        """Log upper bound on ``sum_{i>k} theta^i e^{f(i)} / i!``."""
        if theta == 0:
            return -math.inf
        if self.growth == BOUNDED:
            return self.bound + theta + stats.poisson.logsf(k, theta)
        x = theta * math.exp(self.bound)
        return x + stats.poisson.logsf(k, x)

    def log_sum_lower(self, theta: float) -> float:
        """Log lower bound on ``sum_i theta^i e^{f(i)} / i!``."""
        if self.growth == BOUNDED:
            return max(0.0, theta - self.bound)
        if self.two_sided:
            return theta * math.exp(-self.bound)
        return 0.0


def zero() -> DegreeStatistic:
    return DegreeStatistic(lambda i: np.zeros(np.shape(i)), BOUNDED, 0.0, "zero")


def linear(c: float) -> DegreeStatistic:
    c = float(c)
    return DegreeStatistic(lambda i: c * i, LINEAR, abs(c), f"linear(c={c:g})")


def kstar(k: int, gamma: float) -> DegreeStatistic:
    """``gamma * binom(i, k)``; superlinear (degenerate) when gamma > 0."""
    if int(k) != k or k < 2:
        raise DomainError(f"k-star order must be an integer >= 2, got {k}")
    k, gamma = int(k), float(gamma)
    func = lambda i: gamma * comb(i, k)
    label = f"kstar(k={k}, gamma={gamma:g})"
    if gamma > 0:
        return DegreeStatistic(func, SUPERLINEAR, math.inf, label)
    return DegreeStatistic(func, LINEAR, 0.0, label, two_sided=False)


def gwd(lambda1: float, gamma: float) -> DegreeStatistic:
    """Geometrically weighted degree ``gamma * exp(-lambda1 i)``, shifted by -gamma so f(0) = 0."""
    if not lambda1 > 0:
        raise DomainError(f"lambda1 must be > 0, got {lambda1}")
    lam, gamma = float(lambda1), float(gamma)
    return DegreeStatistic(
        lambda i: gamma * np.expm1(-lam * i),
        BOUNDED,
        abs(gamma),
        f"gwd(lambda1={lam:g}, gamma={gamma:g}) shifted to f(0)=0",
    )


def alt_kstar(lambda2: float, gamma: float) -> DegreeStatistic:
    """Alternating k-star ``gamma [(1-l)^i - 1 + i l] / l^2`` for ``l`` in (0, 1)."""
    if not 0 < lambda2 < 1:
        raise DomainError(f"lambda2 must lie in (0, 1), got {lambda2}")
    lam, gamma = float(lambda2), float(gamma)
    return DegreeStatistic(
        lambda i: gamma * (np.power(1 - lam, i) - 1 + i * lam) / lam**2,
        LINEAR,
        abs(gamma) * (1 + 1 / lam),
        f"alt_kstar(lambda2={lam:g}, gamma={gamma:g})",
    )


def penalty(gamma: float) -> DegreeStatistic:
    """Sparse penalty ``gamma * 1{i > 0}``: rewards or penalizes non-isolated vertices."""
    gamma = float(gamma)
    return DegreeStatistic(lambda i: gamma * (i > 0), BOUNDED, abs(gamma), f"penalty(gamma={gamma:g})")


def custom(table) -> DegreeStatistic:
    """Tabulated statistic; values beyond the table repeat the last entry."""
    t = np.asarray(table, dtype=float).ravel()
    if t.size == 0 or t[0] != 0:
        raise DomainError("custom table must start with f(0) = 0")
    if not np.all(np.isfinite(t)):
        raise DomainError("custom table must be finite")
    last = t.size - 1
    return DegreeStatistic(
        lambda i: t[np.minimum(i, last)],
        BOUNDED,
        float(np.max(np.abs(t))),
        f"custom(len={t.size})",
    )


_KINDS = {
    "zero": zero,
    "linear": linear,
    "kstar": kstar,
    "gwd": gwd,
    "alt_kstar": alt_kstar,
    "penalty": penalty,
    "custom": custom,
}


def make_statistic(kind: str, **params) -> DegreeStatistic:
    """Build a named statistic, e.g. ``make_statistic("gwd", lambda1=1, gamma=2)``."""
    try:
        factory = _KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown statistic kind {kind!r}; choose from {sorted(_KINDS)}") from None
    return factory(**params)


def _require_regular(f: DegreeStatistic) -> None:
    if f.superlinear:
        raise DegenerateStatistic(f"{f.label} grows superlinearly; the tilted series diverges")


def _truncation_index(f: DegreeStatistic, theta_max: float, tail_tol: float) -> int:
    if theta_max == 0:
        return 1
    log_tol = math.log(tail_tol)
    x = theta_max * math.exp(f.bound) if f.growth == LINEAR else theta_max
    k = int(math.ceil(x + 10 * math.sqrt(x) + 10))
    while f.tail_log_bound(theta_max, k) - f.log_sum_lower(theta_max) >= log_tol:
        k = int(k * 1.5) + 8
    return k


def _log_terms(thetas: np.ndarray, f: DegreeStatistic, tail_tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of ``log(theta^i e^{f(i)} / i!)`` over a common truncation."""
    _require_regular(f)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(thetas < 0) or not np.all(np.isfinite(thetas)):
        raise DomainError("theta must be finite and >= 0")
    k = _truncation_index(f, float(thetas.max()), tail_tol)
    i = np.arange(k + 1)
    base = f.table(k) - gammaln(i + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = np.outer(np.log(thetas), i)
    lt[:, 0] = 0.0  # theta^0 = 1 also at theta = 0
    return lt + base, i


def tilted_moments(thetas, f: DegreeStatistic, tail_tol: float = DEFAULT_TAIL_TOL):
    """Vectorized ``(C(theta, f), m(theta), Var(theta))`` over an array of thetas."""
    terms, i = _log_terms(thetas, f, tail_tol)
    logc = logsumexp(terms, axis=1)
    p = np.exp(terms - logc[:, None])
    m = p @ i
    var = np.einsum("gi,gi->g", p, (i[None, :] - m[:, None]) ** 2)
    return logc, m, var


def log_normalizer(theta: float, f: DegreeStatistic, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    return float(tilted_moments([theta], f, tail_tol)[0][0])


def tilted_mean(theta: float, f: DegreeStatistic, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    return float(tilted_moments([theta], f, tail_tol)[1][0])


def tilted_variance(theta: float, f: DegreeStatistic, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    return float(tilted_moments([theta], f, tail_tol)[2][0])


def mean_derivative(theta: float, f: DegreeStatistic, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """``m'(theta) = Var(theta) / theta``; at 0 the limit ``exp(f(1))``."""
    if theta == 0:
        return math.exp(f(1))
    return tilted_variance(theta, f, tail_tol) / theta


@dataclass(frozen=True)
class TiltedMeasure:
    theta: float
    statistic: DegreeStatistic
    log_normalizer: float
    measure: SparseMeasure
    mean_value: float


def tilted_measure(theta: float, f: DegreeStatistic, tail_tol: float = DEFAULT_TAIL_TOL) -> TiltedMeasure:
    """sigma_{theta,f} realized on its truncation support."""
    terms, _ = _log_terms([theta], f, tail_tol)
    row = terms[0]
    logc = float(logsumexp(row))
    w = np.exp(row - logc)
    if theta == 0:
        w = np.array([1.0])
    # drop the numerically empty tail so the realization stays compact
    nz = np.nonzero(w > 0)[0]
    w = w[: nz[-1] + 1]
    mu = SparseMeasure.from_weights(w, normalize=True)
    return TiltedMeasure(float(theta), f, logc, mu, mu.mean)


def _objective(thetas: np.ndarray, logc: np.ndarray, m: np.ndarray, beta: float) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    out = np.full(thetas.shape, beta / 2.0)
    pos = (thetas > 0) & (m > 0)
    th, mm = thetas[pos], m[pos]
    out[pos] = mm * np.log(th) - logc[pos] - 0.5 * mm * np.log(mm * beta) + 0.5 * (mm + beta)
    return out


def objective_values(thetas, f: DegreeStatistic, beta: float, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    logc, m, _ = tilted_moments(thetas, f, tail_tol)
    return _objective(thetas, logc, m, beta)


def variational_objective(theta: float, f: DegreeStatistic, beta: float, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """The integrand of J(f) at one theta; equals ``I(sigma) - sigma(f)``."""
    return float(objective_values([theta], f, beta, tail_tol)[0])


def stationarity_residual(theta: float, f: DegreeStatistic, beta: float, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """``|theta - sqrt(beta m(theta))|``."""
    return abs(theta - math.sqrt(beta * tilted_mean(theta, f, tail_tol)))


def golden_section(fun: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10, max_iter: int = 500):
    """Minimize a unimodal ``fun`` on ``[lo, hi]``; returns ``(x, fun(x))``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


@dataclass(frozen=True)
class Minimizer:
    theta: float
    value: float
    residual: float


@dataclass(frozen=True)
class VariationalSolution:
    statistic_label: str
    beta: float
    j_value: float
    minimizers: tuple[Minimizer, ...]
    degenerate: bool = False
    local_minima: tuple[Minimizer, ...] = ()
    theta_max: float = math.nan

    def to_record(self) -> dict:
        return {
            "statistic_label": self.statistic_label,
            "beta": self.beta,
            "j_value": self.j_value,
            "minimizers": [{"theta": m.theta, "value": m.value, "residual": m.residual} for m in self.minimizers],
            "degenerate": self.degenerate,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_record(), **kw)

    @classmethod
    def from_record(cls, rec: dict) -> VariationalSolution:
        mins = tuple(Minimizer(float(m["theta"]), float(m["value"]), float(m["residual"])) for m in rec["minimizers"])
        return cls(rec["statistic_label"], float(rec["beta"]), float(rec["j_value"]), mins, bool(rec["degenerate"]))

    @property
    def thetas(self) -> list[float]:
        return [m.theta for m in self.minimizers]


def _polish(theta: float, lo: float, hi: float, f: DegreeStatistic, beta: float, tail_tol: float) -> float:
    """Snap a golden-section estimate onto the root of ``theta^2 - beta m(theta)``."""
    g = lambda t: t * t - beta * tilted_mean(t, f, tail_tol)
    lo = max(lo, 1e-300)
    glo, ghi = g(lo), g(hi)
    if not (glo < 0 < ghi):
        return theta
    return optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_J(
    f: DegreeStatistic,
    beta: float,
    grid_points: int = 4096,
    tie_tol: float | None = None,
    margin: float = 1.0,
    max_doublings: int = 60,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> VariationalSolution:
    """Global minimizers of the variational objective over ``theta >= 0``.

    A grid on ``[0, theta_max]`` is widened by doubling until the right end
    sits at least ``margin`` above the grid minimum and is still rising.
    Every discrete local minimum is refined by golden-section search and then
    snapped onto the stationarity relation.
    """
    _require_regular(f)
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    obj = lambda t: variational_objective(t, f, beta, tail_tol)

    theta_max = 4 * beta + 8
    for _ in range(max_doublings + 1):
        grid = np.linspace(0.0, theta_max, grid_points)
        vals = objective_values(grid, f, beta, tail_tol)
        if np.all(np.isfinite(vals)) and vals[-1] >= vals.min() + margin and vals[-1] > vals[-2]:
            break
        theta_max *= 2
    else:
        raise NoConfinement(f"{f.label}: objective not confined after {max_doublings} doublings")

    cand = [j for j in range(1, grid_points - 1) if vals[j] <= vals[j - 1] and vals[j] <= vals[j + 1]]
    if vals[0] < vals[1]:
        cand.insert(0, 0)

    found: list[Minimizer] = []
    for j in cand:
        if j == 0:
            found.append(Minimizer(0.0, float(vals[0]), 0.0))
            continue
        lo, hi = grid[j - 1], grid[j + 1]
        t, _ = golden_section(obj, lo, hi)
        t = _polish(t, lo, hi, f, beta, tail_tol)
        v = obj(t)
        if any(abs(t - m.theta) < 1e-8 for m in found):
            continue
        found.append(Minimizer(float(t), float(v), stationarity_residual(t, f, beta, tail_tol)))

    best = min(m.value for m in found)
    tol = 1e-9 * (1 + abs(best)) if tie_tol is None else tie_tol
    glob = tuple(m for m in found if m.value <= best + tol)
    return VariationalSolution(f.label, float(beta), float(best), glob, False, tuple(found), float(theta_max))


def predicted_measures(solution: VariationalSolution, f: DegreeStatistic) -> list[SparseMeasure]:
    """The tilted laws sitting at each global minimizer."""
    return [tilted_measure(t, f).measure for t in solution.thetas]
