"""Bivariate (generic n) VAR estimation, Minnesota shrinkage and impulse responses.

Coefficient vectors are laid out per equation as
``[intercept, y1_{t-1}, ..., yn_{t-1}, y1_{t-2}, ..., yn_{t-p}]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

COND_LIMIT = 1e12


class NotPositiveDefiniteError(ValueError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"not positive-definite: leading minor {index} is not positive")


@dataclass(frozen=True)
class VarSpec:
    p: int = 1
    intercept: bool = True
    n: int = 2

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("lag order p must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def k(self) -> int:
        """Regressors per equation."""
        return self.n * self.p + int(self.intercept)


@dataclass(frozen=True, eq=False)
class VarEstimate:
    spec: VarSpec
    coeffs: np.ndarray  # (p, n, n); coeffs[l - 1] is A_l
    intercept: np.ndarray | None
    sigma: np.ndarray
    residuals: np.ndarray
    X: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)  # (k, n)

    @property
    def effective_T(self) -> int:
        return self.residuals.shape[0]


def _data(data) -> np.ndarray:
    y = np.asarray(getattr(data, "data", data), dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2:
        raise ValueError("data must be a (T, n) array")
    return y


def lagged_design(y: np.ndarray, p: int, intercept: bool = True, start: int | None = None):
    """Regressor matrix X and targets Y for rows ``start..T-1`` (default start = p)."""
    y = _data(y)
    T, n = y.shape
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be >= p")
    rows = T - start
    if rows <= 0:
        raise ValueError("insufficient observations")
    cols = [np.ones((rows, 1))] if intercept else []
    for lag in range(1, p + 1):
        cols.append(y[start - lag : T - lag])
    return np.hstack(cols), y[start:].copy()


def beta_to_coeffs(beta: np.ndarray, spec: VarSpec):
    """Split a (k, n) coefficient matrix into (A_1..A_p, intercept)."""
    c = int(spec.intercept)
    n, p = spec.n, spec.p
    coeffs = np.empty((p, n, n))
    for lag in range(p):
        coeffs[lag] = beta[c + lag * n : c + (lag + 1) * n].T
    return coeffs, (beta[0].copy() if spec.intercept else None)


def _check_cond(xtx: np.ndarray) -> None:
    if not np.all(np.isfinite(xtx)) or np.linalg.cond(xtx) > COND_LIMIT:
        raise ValueError("numerically singular regressor cross-moment matrix")


def ols_var(data, spec: VarSpec, start: int | None = None) -> VarEstimate:
    """Equation-by-equation least squares.

    ``start`` trims the sample so that several lag orders can be compared on
    the same observations; by default the first ``p`` rows are lost.
    The residual covariance uses the effective sample size as denominator.
    """
    y = _data(data)
    if y.shape[1] != spec.n:
        raise ValueError(f"data has {y.shape[1]} variables, spec expects {spec.n}")
    start = spec.p if start is None else start
    t_eff = y.shape[0] - start
    if t_eff < spec.k + 2:
        raise ValueError(f"insufficient observations: {t_eff} usable rows for {spec.k} regressors")
    X, Y = lagged_design(y, spec.p, spec.intercept, start)
    xtx = X.T @ X
    _check_cond(xtx)
    beta = np.linalg.solve(xtx, X.T @ Y)
    resid = Y - X @ beta
    sigma = resid.T @ resid / t_eff
    sigma = 0.5 * (sigma + sigma.T)
    coeffs, icpt = beta_to_coeffs(beta, spec)
    return VarEstimate(spec, coeffs, icpt, sigma, resid, X, Y, beta)


def hc0_standard_errors(X: np.ndarray, resid: np.ndarray) -> np.ndarray:
    """White (HC0) sandwich standard errors for one regression."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and np.ndim(resid) == 1 and len(resid) > 1:
        X = X.T
    e = np.asarray(resid, dtype=float).reshape(-1)
    xtx = X.T @ X
    _check_cond(xtx)
    bread = np.linalg.inv(xtx)
    meat = (X * (e**2)[:, None]).T @ X
    cov = bread @ meat @ bread
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


def hc_se(est: VarEstimate) -> np.ndarray:
    """(n, k) heteroscedasticity-consistent SEs, one row per equation."""
    return np.vstack([hc0_standard_errors(est.X, est.residuals[:, i]) for i in range(est.spec.n)])


def classical_se(est: VarEstimate) -> np.ndarray:
    """(n, k) homoscedastic OLS SEs with a T - k denominator."""
    bread = np.linalg.inv(est.X.T @ est.X)
    dof = est.effective_T - est.spec.k
    s2 = np.sum(est.residuals**2, axis=0) / dof
    return np.sqrt(np.outer(s2, np.diag(bread)))


def bic_values(data, pmax: int, intercept: bool = True) -> np.ndarray:
    """BIC for p = 1..pmax, all fitted on the sample left after dropping pmax rows."""
    if pmax < 1:
        raise ValueError("pmax must be >= 1")
    y = _data(data)
    n = y.shape[1]
    out = np.empty(pmax)
    for p in range(1, pmax + 1):
        spec = VarSpec(p, intercept, n)
        est = ols_var(y, spec, start=pmax)
        t_eff = est.effective_T
        sign, logdet = np.linalg.slogdet(est.sigma)
        if sign <= 0:
            logdet = -np.inf
        out[p - 1] = logdet + math.log(t_eff) / t_eff * (n * spec.k)
    return out


def bic_select(data, pmax: int = 12, intercept: bool = True) -> int:
    """Lag order minimizing BIC; ties go to the smaller p."""
    if pmax == 1:
        return 1
    return int(np.argmin(bic_values(data, pmax, intercept))) + 1


# ---------------------------------------------------------------------------
# Minnesota prior


@dataclass(frozen=True)
class MinnesotaHyper:
    """Litterman-style prior settings.

    ``scales`` are per-variable residual SDs from univariate AR(1) fits;
    left as None they are estimated from the data.
    """

    delta: float = 0.0
    lambda1: float = 0.2
    lambda2: float = 0.5
    lambda3: float = 1.0
    lambda4: float = 100.0
    scales: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError("lambda1 must be positive")
        if not 0 < self.lambda2 <= 1:
            raise ValueError("lambda2 must lie in (0, 1]")
        if not self.lambda3 >= 0:
            raise ValueError("lambda3 must be nonnegative")
        if not self.lambda4 > 0:
            raise ValueError("lambda4 must be positive")
        if self.scales is not None:
            object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
            if any(not s > 0 for s in self.scales):
                raise ValueError("scales must be positive")


@dataclass(frozen=True, eq=False)
class PosteriorDensity:
    """Normal posterior for one equation's coefficient vector."""

    mean: np.ndarray
    cov: np.ndarray
    sigma_ii: float


@dataclass(frozen=True, eq=False)
class MinnesotaPosterior:
    spec: VarSpec
    hyper: MinnesotaHyper
    equations: tuple[PosteriorDensity, ...]
    sigma: np.ndarray
    prior_mean: np.ndarray  # (n, k)
    prior_sd: np.ndarray  # (n, k)

    @property
    def beta(self) -> np.ndarray:
        """(k, n) posterior mean coefficients."""
        return np.column_stack([eq.mean for eq in self.equations])

    @property
    def coeffs(self) -> np.ndarray:
        return beta_to_coeffs(self.beta, self.spec)[0]

    @property
    def intercept(self) -> np.ndarray | None:
        return beta_to_coeffs(self.beta, self.spec)[1]


def ar1_scales(data) -> tuple[float, ...]:
    """Residual SD of an AR(1) with intercept fitted to each column."""
    y = _data(data)
    out = []
    for j in range(y.shape[1]):
        X, Y = lagged_design(y[:, [j]], 1, True)
        if X.shape[0] < 4:
            raise ValueError("insufficient observations for AR(1) scales")
        b, *_ = np.linalg.lstsq(X, Y[:, 0], rcond=None)
        e = Y[:, 0] - X @ b
        out.append(float(np.sqrt(e @ e / (len(e) - 2))))
    return tuple(out)


def minnesota_prior(spec: VarSpec, hyper: MinnesotaHyper):
    """Prior means and SDs, each (n, k), in the per-equation coefficient layout."""
    if hyper.scales is None or len(hyper.scales) != spec.n:
        raise ValueError("hyper.scales must hold one positive scale per variable")
    s = np.asarray(hyper.scales)
    n, p, c = spec.n, spec.p, int(spec.intercept)
    mean = np.zeros((n, spec.k))
    sd = np.empty((n, spec.k))
    for i in range(n):
        if c:
            sd[i, 0] = hyper.lambda1 * hyper.lambda4 * s[i]
        for lag in range(1, p + 1):
            decay = lag**hyper.lambda3
            for j in range(n):
                col = c + (lag - 1) * n + j
                if i == j:
                    sd[i, col] = hyper.lambda1 / decay
                else:
                    sd[i, col] = hyper.lambda1 * hyper.lambda2 * (s[i] / s[j]) / decay
        mean[i, c + i] = hyper.delta
    return mean, sd


def conjugate_normal_update(X, y, sigma_ii: float, prior_mean, prior_sd):
    """Posterior of a regression with known error variance and independent Normal prior."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    b0 = np.asarray(prior_mean, dtype=float)
    prior_prec = 1.0 / np.asarray(prior_sd, dtype=float) ** 2
    if not sigma_ii > 0:
        raise ValueError("error variance must be positive")
    prec = X.T @ X / sigma_ii + np.diag(prior_prec)
    rhs = X.T @ y / sigma_ii + prior_prec * b0
    try:
        chol = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        raise ValueError("singular posterior precision") from None
    eye = np.eye(len(b0))
    inv_chol = np.linalg.solve(chol, eye)
    cov = inv_chol.T @ inv_chol
    mean = cov @ rhs
    return mean, 0.5 * (cov + cov.T)


def minnesota_posterior(data, spec: VarSpec, hyper: MinnesotaHyper | None = None) -> MinnesotaPosterior:
    """Equation-by-equation posterior with sigma fixed at its OLS estimate."""
    hyper = hyper or MinnesotaHyper()
    if hyper.scales is None:
        hyper = replace(hyper, scales=ar1_scales(data))
    ols = ols_var(data, spec)
    b0, sd0 = minnesota_prior(spec, hyper)
    eqs = []
    for i in range(spec.n):
        s_ii = float(ols.sigma[i, i])
        mean, cov = conjugate_normal_update(ols.X, ols.Y[:, i], s_ii, b0[i], sd0[i])
        eqs.append(PosteriorDensity(mean, cov, s_ii))
    return MinnesotaPosterior(spec, hyper, tuple(eqs), ols.sigma.copy(), b0, sd0)


# ---------------------------------------------------------------------------
# identification and dynamics


def cholesky_impact(sigma, ordering: Sequence[int] | None = None) -> np.ndarray:
    """Lower Cholesky factor of sigma after reordering its variables.

    Column j is the impact of a one-standard-deviation shock to the j-th
    variable in ``ordering``; rows follow the same ordering.
    """
    s = np.asarray(sigma, dtype=float)
    n = s.shape[0]
    if s.shape != (n, n):
        raise ValueError("sigma must be square")
    if ordering is not None:
        order = list(ordering)
        if sorted(order) != list(range(n)):
            raise ValueError(f"ordering {order} is not a permutation of 0..{n - 1}")
        s = s[np.ix_(order, order)]
    if not np.allclose(s, s.T, rtol=0, atol=1e-10 * max(1.0, float(np.abs(s).max()))):
        raise ValueError("sigma is not symmetric")
    L = np.zeros_like(s)
    for j in range(n):
        d = s[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0:
            raise NotPositiveDefiniteError(j + 1)
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (s[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def _coeffs(est) -> np.ndarray:
    a = np.asarray(getattr(est, "coeffs", est), dtype=float)
    if a.ndim == 2:
        a = a[None]
    return a


def companion(est) -> np.ndarray:
    a = _coeffs(est)
    p, n, _ = a.shape
    C = np.zeros((n * p, n * p))
    C[:n] = np.hstack(list(a))
    if p > 1:
        C[n:, :-n] = np.eye(n * (p - 1))
    return C


def spectral_radius(est, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest eigenvalue modulus of the companion matrix.

    Power iteration on the matrix itself by repeated squaring, tracking
    ``||C^(2^j)||^(1/2^j)`` in log space. Unlike vector power iteration this
    converges when the dominant eigenvalues are a complex pair.
    """
    M = companion(est)
    log_scale = 0.0  # log of the factor divided out of C^(2^j)
    power = 1
    prev = None
    settled = 0
    for _ in range(max_iter):
        nrm = float(np.abs(M).sum(axis=1).max())
        if nrm == 0:
            return 0.0
        est_log = (log_scale + math.log(nrm)) / power
        # the norm ratio wobbles for complex pairs, so one small step is not enough
        settled = settled + 1 if prev is not None and abs(est_log - prev) <= 0.01 * tol else 0
        if settled >= 3:
            return math.exp(est_log)
        if power > 2**60:
            # Jordan-block error decays like log(power) / power; this is far below tol
            return math.exp(est_log)
        prev = est_log
        M = M / nrm
        log_scale = 2.0 * (log_scale + math.log(nrm))
        M = M @ M
        power *= 2
    raise RuntimeError("spectral radius did not converge")


def ma_coefficients(est, H: int) -> np.ndarray:
    """Phi_0..Phi_H with Phi_h = sum_j A_j Phi_{h-j}; shape (H + 1, n, n)."""
    a = _coeffs(est)
    p, n, _ = a.shape
    phi = np.zeros((H + 1, n, n))
    phi[0] = np.eye(n)
    for h in range(1, H + 1):
        acc = np.zeros((n, n))
        for j in range(1, min(h, p) + 1):
            acc += a[j - 1] @ phi[h - j]
        phi[h] = acc
    return phi


def irf_point(est, B0, H: int = 24) -> np.ndarray:
    """Responses ``[variable, shock, h]`` for h = 0..H."""
    if H < 0:
        raise ValueError("horizon must be >= 0")
    B0 = np.asarray(B0, dtype=float)
    a = _coeffs(est)
    n = a.shape[1]
    if B0.shape[0] != n:
        raise ValueError(f"impact matrix has {B0.shape[0]} rows, VAR has {n} variables")
    phi = ma_coefficients(a, H)
    return np.einsum("hij,jk->ikh", phi, B0)


def impact_in_variable_order(sigma, ordering: Sequence[int] | None) -> np.ndarray:
    """Cholesky impact with rows mapped back to the VAR's own variable order."""
    L = cholesky_impact(sigma, ordering)
    if ordering is None:
        return L
    inv = np.argsort(np.asarray(ordering))
    return L[inv, :]


@dataclass(frozen=True, eq=False)
class IrfBundle:
    horizon: int
    point: np.ndarray  # (n, n, H + 1): [response, shock, h]
    lower: np.ndarray
    upper: np.ndarray
    quantiles: tuple[float, float]
    draws: int
    seed: int
    rejected_explosive: int
    attempts: int
    ordering: tuple[int, ...]
    stability_rule: str
    impact: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, IrfBundle):
            return NotImplemented
        same_meta = (
            self.horizon, self.quantiles, self.draws, self.seed, self.rejected_explosive,
            self.attempts, self.ordering, self.stability_rule,
        ) == (
            other.horizon, other.quantiles, other.draws, other.seed, other.rejected_explosive,
            other.attempts, other.ordering, other.stability_rule,
        )
        return same_meta and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in ("point", "lower", "upper", "impact")
        )

    __hash__ = None


def _posterior_factor(cov: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(cov)):
        raise ValueError("degenerate posterior covariance: non-finite entries")
    w, V = np.linalg.eigh(0.5 * (cov + cov.T))
    scale = max(1.0, float(np.abs(w).max())) if w.size else 1.0
    if w.size and w.min() < -1e-10 * scale:
        raise ValueError("degenerate posterior covariance: not positive semidefinite")
    return V * np.sqrt(np.clip(w, 0.0, None))


def irf_bands(
    posterior: MinnesotaPosterior,
    H: int = 24,
    draws: int = 1000,
    seed: int = 0,
    quantiles: tuple[float, float] = (0.16, 0.84),
    stability_rule: str = "reject",
    ordering: Sequence[int] | None = None,
    cutoff: float = 0.999,
) -> IrfBundle:
    """Monte-Carlo IRF bands from the coefficient posterior.

    Draw ``i`` uses its own stream seeded by ``(seed, i)``, so results do not
    depend on evaluation order. Sigma, and hence the impact matrix, stays at
    the posterior value for every draw.
    """
    if draws < 100:
        raise ValueError("draws must be >= 100")
    lo_q, hi_q = quantiles
    if not 0 < lo_q < hi_q < 1:
        raise ValueError("quantiles must satisfy 0 < lower < upper < 1")
    if stability_rule not in ("keep", "reject"):
        raise ValueError(f"unknown stability rule {stability_rule!r}")
    if H < 0:
        raise ValueError("horizon must be >= 0")
    spec = posterior.spec
    n = spec.n
    order = tuple(range(n)) if ordering is None else tuple(ordering)
    B0 = impact_in_variable_order(posterior.sigma, order)
    means = np.vstack([eq.mean for eq in posterior.equations])  # (n, k)
    factors = [_posterior_factor(eq.cov) for eq in posterior.equations]
    point = irf_point(posterior.coeffs, B0, H)

    budget = 10 * draws
    attempts = 0
    rejected = 0
    out = np.empty((draws, n, n, H + 1))
    for d in range(draws):
        rng = np.random.default_rng([seed, d])
        while True:
            if attempts >= budget:
                raise RuntimeError(f"draw budget of {budget} attempts exhausted ({rejected} explosive)")
            attempts += 1
            z = rng.standard_normal((n, spec.k))
            beta = means + np.einsum("ikl,il->ik", np.stack(factors), z)
            coeffs, _ = beta_to_coeffs(beta.T, spec)
            if stability_rule == "reject" and spectral_radius(coeffs) > cutoff:
                rejected += 1
                continue
            break
        out[d] = irf_point(coeffs, B0, H)
    lower = np.quantile(out, lo_q, axis=0)
    upper = np.quantile(out, hi_q, axis=0)
    return IrfBundle(
        H, point, lower, upper, (lo_q, hi_q), draws, seed, rejected, attempts, order, stability_rule, B0
    )


def simulate_var(coeffs, sigma, T: int, seed: int, intercept=None, burn: int = 200) -> np.ndarray:
    """Gaussian VAR(p) sample path of length T after ``burn`` discarded steps."""
    a = _coeffs(coeffs)
    p, n, _ = a.shape
    chol = np.linalg.cholesky(np.asarray(sigma, dtype=float))
    c = np.zeros(n) if intercept is None else np.asarray(intercept, dtype=float)
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((T + burn, n)) @ chol.T
    y = np.zeros((T + burn + p, n))
    for t in range(p, T + burn + p):
        acc = c + e[t - p]
        for j in range(1, p + 1):
            acc = acc + a[j - 1] @ y[t - j]
        y[t] = acc
    return y[p + burn :]
