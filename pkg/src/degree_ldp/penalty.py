"""The sparse penalty model: edge parameter beta plus an isolated-vertex term.

The degree statistic is ``gamma * 1{i > 0}``. Its normalizer and tilted mean
have closed forms, the stationarity relation reduces to a fixed point of

    h_{a,b}(x) = a b e^x / (1 + b (e^x - 1)),   a = beta, b = e^gamma,

and there are either one or three fixed points. With three, the outer two are
local minima of the variational objective and the middle one a local maximum.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError


class Regime(str, enum.Enum):
    UNIQUE_MIN = "UniqueMin"
    THREE_ROOTS_UNIQUE_GLOBAL = "ThreeRootsUniqueGlobal"
    TWO_GLOBAL_MINIMA = "TwoGlobalMinima"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PenaltyModel:
    beta: float
    gamma: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not math.isfinite(self.gamma):
            raise DomainError("gamma must be finite")

    @classmethod
    def from_e_gamma(cls, beta: float, e_gamma: float) -> PenaltyModel:
        if not e_gamma > 0:
            raise DomainError(f"e^gamma must be > 0, got {e_gamma}")
        return cls(beta, math.log(e_gamma))

    @property
    def b(self) -> float:
        return math.exp(self.gamma)


def penalty_normalizer(theta, gamma: float):
    """``C = log(1 + e^gamma (e^theta - 1))``."""
    theta = np.asarray(theta, dtype=float)
    b = math.exp(gamma)
    # log(b e^theta + 1 - b) rewritten to stay finite for large theta
    small = np.log1p(b * np.expm1(np.minimum(theta, 700.0)))
    large = theta + gamma + np.log1p((1 - b) / b * np.exp(-theta))
    out = np.where(theta < 30.0, small, large)
    return float(out) if out.ndim == 0 else out


def penalty_mean(theta, gamma: float):
    """``m = theta e^{gamma+theta} / (1 + e^gamma (e^theta - 1))``."""
    theta = np.asarray(theta, dtype=float)
    b = math.exp(gamma)
    out = theta * b / (b + (1 - b) * np.exp(-theta))
    return float(out) if out.ndim == 0 else out


def objective_H(theta, model: PenaltyModel):
    """Variational objective of the penalty model; ``beta/2`` at theta = 0."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise DomainError("theta must be >= 0")
    beta = model.beta
    out = np.full(theta.shape, beta / 2.0)
    pos = theta > 0
    t = theta[pos]
    m = penalty_mean(t, model.gamma)
    c = penalty_normalizer(t, model.gamma)
    out[pos] = m * np.log(t) - c - 0.5 * m * np.log(m * beta) + 0.5 * (m + beta)
    return float(out) if out.ndim == 0 else out


def fixed_point_map(x, a: float, b: float):
    """``h_{a,b}(x)``; equals ``ab`` at 0 and tends to ``a`` as x grows."""
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be > 0")
    x = np.asarray(x, dtype=float)
    out = a * b / (b + (1 - b) * np.exp(-x))
    return float(out) if out.ndim == 0 else out


def fixed_point_slope(x, a: float, b: float):
    """``h'_{a,b}(x) = a b (1-b) e^x / (1 + b (e^x - 1))^2``."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-x)
    out = a * b * (1 - b) * e / (b + (1 - b) * e) ** 2
    return float(out) if out.ndim == 0 else out


def _critical_points(a: float, b: float) -> list[float]:
    """Solutions x > 0 of ``h'(x) = 1`` (a quadratic in ``y = e^x``)."""
    if b == 1:
        return []
    # (1 - b + b y)^2 = a b (1 - b) y
    qa = b * b
    qb = 2 * b * (1 - b) - a * b * (1 - b)
    qc = (1 - b) ** 2
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return []
    r = math.sqrt(disc)
    ys = [(-qb - r) / (2 * qa), (-qb + r) / (2 * qa)]
    return sorted({math.log(y) for y in ys if y > 1})


@dataclass(frozen=True)
class FixedPoints:
    roots: tuple[float, ...]
    tangency: bool = False
    double_roots: tuple[float, ...] = ()


def fixed_points(model: PenaltyModel, grid_points: int = 100_000, xtol: float = 1e-12) -> FixedPoints:
    """Roots of ``h(x) = x`` with tangency bookkeeping."""
    a, b = model.beta, model.b
    if b == 1:
        return FixedPoints((a,))
    x_max = max(4 * a, 50.0)
    x = np.linspace(0.0, x_max, grid_points + 1)
    g = fixed_point_map(x, a, b) - x
    gfun = lambda t: fixed_point_map(t, a, b) - t

    roots = [float(t) for t in x[1:][g[1:] == 0]]
    idx = np.nonzero(g[:-1] * g[1:] < 0)[0]
    for j in idx:
        roots.append(optimize.bisect(gfun, x[j], x[j + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))

    doubles = []
    spacing = x[1] - x[0]
    for xc in _critical_points(a, b):
        if xc > x_max or abs(gfun(xc)) > 1e-10 or abs(fixed_point_slope(xc, a, b) - 1) > 1e-8:
            continue
        if any(abs(xc - r) < 2 * spacing for r in roots):
            continue
        doubles.append(xc)
    roots = sorted(set(roots) | set(doubles))
    return FixedPoints(tuple(roots), bool(doubles), tuple(doubles))


def find_fixed_points(model: PenaltyModel) -> list[float]:
    """Sorted fixed points of the stationarity map (1 or 3, or 2 at a tangency)."""
    return list(fixed_points(model).roots)


@dataclass(frozen=True)
class PhaseClassification:
    model: PenaltyModel
    roots: tuple[float, ...]
    h_values: tuple[float, ...]
    local_minima: tuple[float, ...]
    global_minima: tuple[float, ...]
    regime: Regime
    tangency: bool = False

    @property
    def gap(self) -> float:
        """``|H(theta_1) - H(theta_3)|`` between the outer minima; 0 with one minimum."""
        if len(self.local_minima) < 2:
            return 0.0
        hv = dict(zip(self.roots, self.h_values))
        return abs(hv[self.local_minima[0]] - hv[self.local_minima[-1]])


def classify_phase(model: PenaltyModel, tie_tol: float = 1e-6) -> PhaseClassification:
    fp = fixed_points(model)
    roots = fp.roots
    hv = tuple(float(v) for v in objective_H(np.array(roots), model))
    if len(roots) == 1:
        return PhaseClassification(model, roots, hv, roots, roots, Regime.UNIQUE_MIN)
    if len(roots) == 2:
        # the double root is a flat inflection of H, not a minimum
        simple = tuple(r for r in roots if r not in fp.double_roots)
        return PhaseClassification(model, roots, hv, simple, simple, Regime.THREE_ROOTS_UNIQUE_GLOBAL, True)
    if len(roots) != 3:
        raise ArithmeticError(f"expected 1 or 3 fixed points, found {len(roots)} for {model}")
    h1, h2, h3 = hv
    if not h2 > max(h1, h3):
        raise ArithmeticError(f"middle fixed point is not a local maximum for {model}")
    lm = (roots[0], roots[2])
    if abs(h1 - h3) <= tie_tol:
        return PhaseClassification(model, roots, hv, lm, lm, Regime.TWO_GLOBAL_MINIMA, fp.tangency)
    best = roots[0] if h1 < h3 else roots[2]
    return PhaseClassification(model, roots, hv, lm, (best,), Regime.THREE_ROOTS_UNIQUE_GLOBAL, fp.tangency)


def penalty_curve(model: PenaltyModel, theta_max: float, theta_min: float = 0.0, points: int = 2048):
    """``(theta, H(theta))`` sampled on a uniform grid."""
    if not 0 <= theta_min < theta_max:
        raise DomainError("need 0 <= theta_min < theta_max")
    theta = np.linspace(theta_min, theta_max, points)
    return theta, objective_H(theta, model)


def curve_csv(theta, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "H"])
    for t, v in zip(theta, values):
        w.writerow([f"{t:.17g}", f"{v:.17g}"])
    return buf.getvalue()


def phase_scan(beta_range, e_gamma_range, resolution, tie_tol: float = 1e-6) -> list[PhaseClassification]:
    """Classify every cell of a (beta, e^gamma) grid, row-major by beta then e^gamma.

    ``resolution`` is the number of points per axis, or a pair ``(n_beta, n_gamma)``.
    """
    nb, ng = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nb < 1 or ng < 1:
        raise DomainError("resolution must be positive")
    lo_b, hi_b = beta_range
    lo_g, hi_g = e_gamma_range
    if not (lo_b > 0 and hi_b >= lo_b and lo_g > 0 and hi_g >= lo_g):
        raise DomainError("ranges must be positive and ordered")
    betas = np.linspace(lo_b, hi_b, int(nb))
    e_gammas = np.linspace(lo_g, hi_g, int(ng))
    return [classify_phase(PenaltyModel.from_e_gamma(float(bt), float(eg)), tie_tol) for bt in betas for eg in e_gammas]


def phase_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beta", "e_gamma", "regime", "root1", "root2", "root3"])
    for c in cells:
        roots = [f"{r:.12g}" for r in c.roots] + [""] * (3 - len(c.roots))
        w.writerow([f"{c.model.beta:.12g}", f"{c.model.b:.12g}", c.regime.value, *roots])
    return buf.getvalue()
