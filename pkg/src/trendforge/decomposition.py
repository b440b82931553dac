"""Trend extraction: STL when a seasonality is detected, GP posterior mean otherwise."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky
from scipy.optimize import minimize
from scipy.special import ndtri
from statsmodels.tsa.seasonal import STL

from .ingest import seasonal_cycles
from .windowing import Window, rng_from


class DecompositionError(Exception):
    pass


class PeriodTooLong(DecompositionError):
    pass


class SingularKernel(DecompositionError):
    pass


class NonFinite(DecompositionError):
    pass


@dataclass(frozen=True)
class GpParams:
    """RBF + white-noise kernel hyperparameters on the standardized scale.

    ``length_scale_sq`` is the squared length scale appearing in the RBF
    exponent denominator 2*length_scale_sq.
    """

    signal_variance: float
    length_scale_sq: float
    noise_variance: float
    log_marginal_likelihood: float

    def __post_init__(self) -> None:
        for name in ("signal_variance", "length_scale_sq", "noise_variance"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise NonFinite(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class Decomposition:
    trend: tuple[float, ...]
    seasonal: tuple[float, ...]
    residual: tuple[float, ...]
    method: str  # "stl" | "gp"
    period: int | None = None
    gp_params: GpParams | None = None


# ---------------------------------------------------------------------------
# Seasonality detection

Z_95 = float(ndtri(0.975))


def autocorrelation(values: Sequence[float]) -> np.ndarray:
    """Sample autocorrelation at lags 0..n-1 (biased normalization)."""
    x = np.asarray(values, dtype=float)
    n = x.size
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom <= 0.0:
        return np.zeros(n)
    return np.correlate(xc, xc, mode="full")[n - 1 :] / denom


def detect_period(window: Window) -> int | None:
    """Dominant seasonal period of a window, or None when none is significant.

    The window is linearly detrended, then lags up to tau//2 are screened
    against the white-noise ACF band (Bartlett, se = 1/sqrt(n)).  Natural
    cycles of the sampling granularity are tried first at the plain 95% level;
    the free search over all lags uses a Bonferroni-adjusted level so that
    featureless windows rarely produce a spurious period.  Only strict local
    ACF peaks qualify, and the strongest qualifying peak wins.
    """
    x = window.to_array()
    n = x.size
    max_lag = n // 2
    if max_lag < 2:
        return None
    t = np.arange(n, dtype=float)
    slope, intercept = np.polyfit(t, x, 1)
    resid = x - (slope * t + intercept)
    if float(np.std(resid)) < 1e-12 * max(1.0, float(np.std(x))):
        return None
    r = autocorrelation(resid)
    se = 1.0 / np.sqrt(n)

    def qualifying(p: int, z: float) -> bool:
        if not 2 <= p <= max_lag:
            return False
        if r[p] <= z * se:
            return False
        left = r[p] > r[p - 1]
        right = p == max_lag or r[p] >= r[p + 1]
        return left and right

    seeded = [
        p
        for p in seasonal_cycles(window.source.granularity)
        if qualifying(p, Z_95)
    ]
    if seeded:
        return max(seeded, key=lambda p: r[p])

    m = max_lag - 1
    z_free = float(ndtri(1.0 - 0.025 / m))
    free = [p for p in range(2, max_lag + 1) if qualifying(p, z_free)]
    if free:
        return max(free, key=lambda p: r[p])
    return None


# ---------------------------------------------------------------------------
# STL branch


@dataclass(frozen=True)
class StlConfig:
    seasonal_window: int = 7
    inner_iterations: int = 2
    robustness_iterations: int = 1


def stl_decompose(
    window: Window, period: int, config: StlConfig = StlConfig()
) -> Decomposition:
    """Additive seasonal-trend decomposition via iterated LOESS.

    The trend smoother length defaults to the smallest odd integer above
    1.5 * period / (1 - 1.5 / seasonal_window).  The residual is recomputed
    as values - trend - seasonal so the reconstruction identity is exact.
    """
    values = window.to_array()
    tau = values.size
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    if 2 * period > tau:
        raise PeriodTooLong(f"period {period} needs 2 full cycles in {tau} steps")
    result = STL(values, period=period, seasonal=config.seasonal_window).fit(
        inner_iter=config.inner_iterations, outer_iter=config.robustness_iterations
    )
    trend = np.asarray(result.trend, dtype=float)
    seasonal = np.asarray(result.seasonal, dtype=float)
    residual = values - trend - seasonal
    return Decomposition(
        trend=tuple(trend),
        seasonal=tuple(seasonal),
        residual=tuple(residual),
        method="stl",
        period=period,
    )


# ---------------------------------------------------------------------------
# GP branch

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)


def rbf_white_kernel(x: float, x_prime: float, params: GpParams) -> float:
    """sigma_r^2 * exp(-(x-x')^2 / (2*gamma)) + sigma_e^2 * [x == x']."""
    rbf = params.signal_variance * np.exp(
        -((x - x_prime) ** 2) / (2.0 * params.length_scale_sq)
    )
    return float(rbf + (params.noise_variance if x == x_prime else 0.0))


def _rbf_matrix(n: int, signal_variance: float, length_scale_sq: float) -> np.ndarray:
    t = np.arange(n, dtype=float)
    d2 = (t[:, None] - t[None, :]) ** 2
    return signal_variance * np.exp(-d2 / (2.0 * length_scale_sq))


def _chol_with_jitter(k: np.ndarray) -> np.ndarray:
    n = k.shape[0]
    for jitter in _JITTERS:
        try:
            return cholesky(k + jitter * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise SingularKernel("kernel matrix not positive definite after jitter escalation")


def log_marginal_likelihood(
    theta: Sequence[float], y: np.ndarray, with_gradient: bool = False
):
    """Zero-mean GP log marginal likelihood at log-parameters.

    ``theta`` is (log signal_variance, log length_scale_sq, log noise_variance).
    With ``with_gradient`` the analytic gradient w.r.t. theta is returned too.
    """
    log_sv, log_ls, log_nv = (float(v) for v in theta)
    n = y.size
    k_rbf = _rbf_matrix(n, np.exp(log_sv), np.exp(log_ls))
    k = k_rbf + np.exp(log_nv) * np.eye(n)
    try:
        chol = _chol_with_jitter(k)
    except SingularKernel:
        if with_gradient:
            return -np.inf, np.zeros(3)
        return -np.inf
    alpha = cho_solve((chol, True), y)
    lml = (
        -0.5 * float(y @ alpha)
        - float(np.log(np.diag(chol)).sum())
        - 0.5 * n * np.log(2.0 * np.pi)
    )
    if not with_gradient:
        return lml
    k_inv = cho_solve((chol, True), np.eye(n))
    w = np.outer(alpha, alpha) - k_inv
    t = np.arange(n, dtype=float)
    d2 = (t[:, None] - t[None, :]) ** 2
    dk_dlog_sv = k_rbf
    dk_dlog_ls = k_rbf * (d2 / (2.0 * np.exp(log_ls)))
    dk_dlog_nv = np.exp(log_nv) * np.eye(n)
    grad = np.array(
        [0.5 * float(np.sum(w * dk)) for dk in (dk_dlog_sv, dk_dlog_ls, dk_dlog_nv)]
    )
    return lml, grad


@dataclass(frozen=True)
class GpFitConfig:
    n_starts: int = 5
    seed: int = 0
    log_variance_bounds: tuple[float, float] = (-12.0, 6.0)
    coarse_grid: int = 4  # per-axis pre-scan used to seed one extra start


def _standardize(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(values.mean())
    std = float(values.std())
    if std == 0.0:
        std = 1.0
    return (values - mean) / std, mean, std


def fit_gp(window: Window, config: GpFitConfig = GpFitConfig()) -> GpParams:
    """Maximize the log marginal likelihood over log-parameters.

    The window is standardized to zero mean and unit variance internally, so
    the returned variances live on the standardized scale.  Multi-start
    L-BFGS-B with analytic gradients, bounds log gamma in [0, 2 log tau] and
    log variances in [-12, 6]; a coarse grid pre-scan supplies one start.
    """
    values = window.to_array()
    if not np.all(np.isfinite(values)):
        raise NonFinite("window contains non-finite values")
    y, _, _ = _standardize(values)
    n = y.size
    lo, hi = config.log_variance_bounds
    bounds = [(lo, hi), (0.0, 2.0 * np.log(n)), (lo, hi)]

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        lml, grad = log_marginal_likelihood(theta, y, with_gradient=True)
        if not np.isfinite(lml):
            return 1e25, np.zeros(3)
        return -lml, -grad

    starts = [np.array([0.0, np.log(max(1.0, (n / 10.0) ** 2)), np.log(0.1)])]
    axes = [np.linspace(b[0], b[1], config.coarse_grid) for b in bounds]
    grid_best, grid_theta = -np.inf, starts[0]
    for a in axes[0]:
        for b in axes[1]:
            for c in axes[2]:
                theta = np.array([a, b, c])
                lml = log_marginal_likelihood(theta, y)
                if lml > grid_best:
                    grid_best, grid_theta = lml, theta
    starts.append(grid_theta)
    rng = rng_from(config.seed)
    for _ in range(max(0, config.n_starts - 2)):
        starts.append(np.array([rng.uniform(b[0], b[1]) for b in bounds]))

    best_theta, best_lml = None, -np.inf
    for start in starts:
        res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and -res.fun > best_lml:
            best_lml, best_theta = -float(res.fun), np.asarray(res.x)
    if best_theta is None:
        raise SingularKernel("likelihood optimization failed from every start")
    sv, ls, nv = np.exp(best_theta)
    return GpParams(
        signal_variance=float(sv),
        length_scale_sq=float(ls),
        noise_variance=float(nv),
        log_marginal_likelihood=best_lml,
    )


def gp_posterior_mean(window: Window, params: GpParams) -> tuple[float, ...]:
    """Posterior mean at the training indices, de-standardized to data scale.

    Standardized scale: K_rbf (K_rbf + sigma_e^2 I)^-1 y_std.
    """
    values = window.to_array()
    y, mean, std = _standardize(values)
    n = y.size
    k_rbf = _rbf_matrix(n, params.signal_variance, params.length_scale_sq)
    k = k_rbf + params.noise_variance * np.eye(n)
    chol = _chol_with_jitter(k)
    alpha = cho_solve((chol, True), y)
    post = k_rbf @ alpha
    return tuple(mean + std * post)


def gp_decompose(window: Window, config: GpFitConfig = GpFitConfig()) -> Decomposition:
    params = fit_gp(window, config)
    trend = np.asarray(gp_posterior_mean(window, params))
    values = window.to_array()
    return Decomposition(
        trend=tuple(trend),
        seasonal=tuple(np.zeros_like(values)),
        residual=tuple(values - trend),
        method="gp",
        gp_params=params,
    )


# ---------------------------------------------------------------------------
# Routing


def decompose(
    window: Window,
    stl_config: StlConfig = StlConfig(),
    gp_config: GpFitConfig = GpFitConfig(),
) -> Decomposition:
    """STL when a significant period is detected, GP posterior mean otherwise."""
    period = detect_period(window)
    if period is not None and 2 * period <= window.length:
        return stl_decompose(window, period, stl_config)
    return gp_decompose(window, gp_config)


def decomposition_to_json(decomp: Decomposition, window_id: str) -> dict:
    obj: dict = {
        "window_id": window_id,
        "method": decomp.method,
        "period": decomp.period,
        "trend": list(decomp.trend),
        "seasonal": list(decomp.seasonal),
        "residual": list(decomp.residual),
    }
    if decomp.gp_params is not None:
        obj["gp_params"] = {
            "signal_variance": decomp.gp_params.signal_variance,
            "length_scale_sq": decomp.gp_params.length_scale_sq,
            "noise_variance": decomp.gp_params.noise_variance,
            "log_marginal_likelihood": decomp.gp_params.log_marginal_likelihood,
        }
    return obj
