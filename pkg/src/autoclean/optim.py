"""Scalar Bayesian optimization and the (rho, kappa) grid search.

The surrogate is a Gaussian process with a Matern-5/2 kernel on inputs
rescaled to [0, 1]. The length-scale is chosen on a fixed 16-point log
grid by maximizing the marginal likelihood; the signal variance is
profiled out in closed form at each grid point. Expected improvement is
maximized over a fixed 1000-point uniform grid, which keeps the whole
loop deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import ContractError, ObjectiveError

N_INITIAL_DEFAULT = 10
N_ITERATIONS_DEFAULT = 40

_LENGTHSCALE_GRID = np.logspace(-2.0, 1.0, 16)
_ACQ_GRID_SIZE = 1000
_DUPLICATE_TOL = 1e-9
_REL_JITTER = 1e-6


@dataclass(frozen=True)
class ObservationSet:
    """Observed (x, y) pairs of a scalar objective on a bounded interval."""

    xs: np.ndarray
    ys: np.ndarray
    bounds: tuple

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        lo, hi = float(self.bounds[0]), float(self.bounds[1])
        if not lo < hi:
            raise ContractError(f"bounds must satisfy lo < hi, got {lo}, {hi}")
        if xs.shape != ys.shape or xs.ndim != 1:
            raise ContractError("xs and ys must be equal-length vectors")
        if np.any(xs < lo) or np.any(xs > hi):
            raise ContractError("observations outside bounds")
        if not np.all(np.isfinite(ys)):
            raise ContractError("objective values must be finite")
        object.__setattr__(self, "xs", xs.copy())
        object.__setattr__(self, "ys", ys.copy())
        object.__setattr__(self, "bounds", (lo, hi))


@dataclass(frozen=True)
class SearchResult:
    """Incumbent minimum and the full evaluation trace."""

    x_star: float
    y_star: float
    trace: tuple
    degenerate: bool = False

    def __post_init__(self):
        trace = tuple((float(x), float(y)) for x, y in self.trace)
        if trace and not self.degenerate:
            if (self.x_star, self.y_star) not in trace:
                raise ContractError("(x_star, y_star) must appear in trace")
            if self.y_star != min(y for _, y in trace):
                raise ContractError("y_star must be the trace minimum")
        object.__setattr__(self, "trace", trace)


def _matern52(dist: np.ndarray, ell: float) -> np.ndarray:
    r = np.sqrt(5.0) * dist / ell
    return (1.0 + r + r ** 2 / 3.0) * np.exp(-r)


def _fit_gp(obs: ObservationSet):
    """Return (ell, sig2, chol, alpha, y_mean, u) for the best grid point."""
    lo, hi = obs.bounds
    u = (obs.xs - lo) / (hi - lo)
    y_mean = float(obs.ys.mean())
    yc = obs.ys - y_mean
    n = u.size
    var_y = float(np.var(obs.ys))
    eps = _REL_JITTER if var_y > 0 else 1e-12
    dist = np.abs(u[:, None] - u[None, :])
    best = None
    for ell in _LENGTHSCALE_GRID:
        k = _matern52(dist, ell) + eps * np.eye(n)
        try:
            chol = np.linalg.cholesky(k)
        except np.linalg.LinAlgError:
            continue
        alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, yc))
        sig2 = float(yc @ alpha) / n
        logdet = 2.0 * float(np.log(np.diag(chol)).sum())
        if sig2 <= 0:
            lml = -0.5 * logdet  # constant observations
            sig2 = 0.0
        else:
            lml = -0.5 * (n * math.log(sig2) + logdet + n)
        if best is None or lml > best[0]:
            best = (lml, ell, sig2, chol, alpha)
    if best is None:
        raise ObjectiveError("no valid GP hyperparameters on the grid")
    _, ell, sig2, chol, alpha = best
    return ell, sig2, chol, alpha, y_mean, u


def gp_posterior(obs: ObservationSet, query_points):
    """Posterior mean and standard deviation at the query points."""
    if obs.xs.size < 2:
        raise ContractError("GP posterior needs at least 2 observations")
    ell, sig2, chol, alpha, y_mean, u = _fit_gp(obs)
    lo, hi = obs.bounds
    q = (np.asarray(query_points, dtype=np.float64) - lo) / (hi - lo)
    k_star = _matern52(np.abs(q[:, None] - u[None, :]), ell)
    mean = y_mean + k_star @ alpha
    v = np.linalg.solve(chol, k_star.T)
    var = sig2 * np.maximum(1.0 - np.sum(v ** 2, axis=0), 0.0)
    return mean, np.sqrt(var)


def expected_improvement(obs: ObservationSet, query_points) -> np.ndarray:
    """EI for minimization; zero wherever the posterior is certain."""
    mean, sd = gp_posterior(obs, query_points)
    y_best = float(obs.ys.min())
    ei = np.zeros_like(mean)
    pos = sd > 0
    z = (y_best - mean[pos]) / sd[pos]
    ei[pos] = (y_best - mean[pos]) * norm.cdf(z) + sd[pos] * norm.pdf(z)
    return np.maximum(ei, 0.0)


def _eval(objective, x: float) -> float:
    y = float(objective(x))
    if not math.isfinite(y):
        raise ObjectiveError(f"objective returned {y} at x={x}")
    return y


def minimize_scalar(objective, bounds, n_initial: int = N_INITIAL_DEFAULT,
                    n_iterations: int = N_ITERATIONS_DEFAULT,
                    seed=0) -> SearchResult:
    """Sequential EI minimization of a scalar objective.

    Randomness comes from a counter-based stream keyed by
    (seed, evaluation index), so the result only depends on the seed.
    ``seed`` may be an int or a sequence of ints.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise ContractError(f"bounds must satisfy lo < hi, got {lo}, {hi}")
    if n_initial < 2:
        raise ContractError("need at least 2 initial evaluations")
    if n_iterations < 0:
        raise ContractError("iteration budget cannot be negative")
    key = [seed] if np.isscalar(seed) else list(seed)
    xs: list = []
    ys: list = []
    for i in range(n_initial):
        rng = np.random.default_rng(key + [i])
        x = float(rng.uniform(lo, hi))
        xs.append(x)
        ys.append(_eval(objective, x))
    grid = np.linspace(lo, hi, _ACQ_GRID_SIZE)
    for _ in range(n_iterations):
        obs = ObservationSet(xs=np.array(xs), ys=np.array(ys),
                             bounds=(lo, hi))
        ei = expected_improvement(obs, grid)
        order = np.argsort(-ei, kind="stable")
        evaluated = np.array(xs)
        x_next = None
        for idx in order:
            cand = float(grid[idx])
            if np.abs(evaluated - cand).min() > _DUPLICATE_TOL:
                x_next = cand
                break
        if x_next is None:
            break
        xs.append(x_next)
        ys.append(_eval(objective, x_next))
    best = int(np.argmin(ys))
    return SearchResult(x_star=xs[best], y_star=ys[best],
                        trace=tuple(zip(xs, ys)))


def grid_search_pairs(objective, rho_candidates, kappa_candidates):
    """Exhaustive argmin over admissible (rho, kappa) pairs.

    Only pairs with rho < kappa are evaluated; ties go to the smaller
    kappa, then the smaller rho.
    """
    rhos = sorted(set(int(r) for r in rho_candidates))
    kappas = sorted(set(int(k) for k in kappa_candidates))
    if not rhos or not kappas:
        raise ContractError("candidate lists must be nonempty")
    table: dict = {}
    best = None
    for kappa in kappas:
        for rho in rhos:
            if not rho < kappa:
                continue
            value = float(objective(rho, kappa))
            table[(rho, kappa)] = value
            entry = (value, kappa, rho)
            if best is None or entry < best:
                best = entry
    if best is None:
        raise ContractError("no admissible (rho, kappa) pair")
    value, kappa, rho = best
    return (rho, kappa), value, table
