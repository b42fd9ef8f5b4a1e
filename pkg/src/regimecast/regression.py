"""Regime-dummy time-series regression with ARMA-error order selection.

The model is

    y_t = b0 + b_h * hosp_t + sum_j g_j * d_j(t) + eta_t

where d_j(t) steps from 0 to 1 on the j-th changepoint date (so the g_j are
cumulative level offsets on top of a global intercept) and (1-B)^d eta_t
follows an ARMA(p, q).  Estimation minimizes the conditional sum of squares
of the innovations: the regression coefficients are profiled out exactly by
least squares on the ARMA-filtered design, and a derivative-free simplex
search handles the (phi, theta) directions, starting from zero (the OLS
solution).  Parameters breaking stationarity or invertibility are rejected
by an infinite barrier.  Order selection scans the full small grid
p in 0..2, d in 0..1, q in 0..2 and keeps the lowest AICc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from itertools import product

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import (
    ConvergenceError,
    DesignError,
    ParameterError,
    SizeError,
)
from .series import DailySeries

__all__ = [
    "DesignMatrix",
    "RegimeModelFit",
    "FitMetrics",
    "build_design",
    "split_chronological",
    "fit_ols",
    "fit_arma_errors",
    "stepwise_select",
    "evaluate",
    "predict",
]

MAX_OBJECTIVE_EVALS = 500   # simplex budget per (p, d, q) grid cell
# AR/MA polynomial roots must lie outside |z| >= ROOT_MARGIN.  The margin is
# deliberately wide of 1.0: conditional-sum-of-squares estimates are
# unreliable against the stationarity/invertibility boundary, where the
# innovation filter's memory stops decaying and near-cancelling ARMA pairs
# can soak up arbitrary noise.
ROOT_MARGIN = 1.05
BOUNDARY_TOL = 0.02         # optimum this close to the root barrier = degenerate
SELECTION_MARGIN = 2.0      # criterion gap treated as "equivalent fit"


@dataclass(frozen=True)
class DesignMatrix:
    """Regression design: intercept, exogenous column, step dummies."""

    matrix: np.ndarray
    labels: tuple[str, ...]
    start_date: date | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise DesignError("design matrix must be two-dimensional")
        if m.shape[1] != len(self.labels):
            raise DesignError(f"{m.shape[1]} columns but {len(self.labels)} labels")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def rows(self, start: int, stop: int) -> "DesignMatrix":
        sub_start = None
        if self.start_date is not None:
            sub_start = self.start_date + timedelta(days=start)
        return DesignMatrix(self.matrix[start:stop].copy(), self.labels, sub_start)


@dataclass(frozen=True)
class RegimeModelFit:
    """Fitted coefficients plus the ARMA error structure and diagnostics."""

    labels: tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    orders: tuple[int, int, int]
    phi: np.ndarray
    theta: np.ndarray
    residual_standard_error: float
    degrees_of_freedom: int
    aicc: float
    bic: float
    n_obs: int

    def coefficient(self, label: str) -> float:
        return float(self.coefficients[self.labels.index(label)])

    def to_json_dict(self) -> dict:
        return {
            "orders": list(self.orders),
            "coefficients": {
                label: {"estimate": float(est), "se": float(se)}
                for label, est, se in zip(self.labels, self.coefficients, self.std_errors)
            },
            "arma": {"phi": [float(v) for v in self.phi],
                     "theta": [float(v) for v in self.theta]},
            "residual_se": self.residual_standard_error,
            "df": self.degrees_of_freedom,
            "aicc": self.aicc,
            "bic": self.bic,
        }


@dataclass(frozen=True)
class FitMetrics:
    r_squared_train: float
    r_squared_test: float
    mse_test: float
    pred_residual_se: float

    def to_json_dict(self) -> dict:
        return {
            "r2_train": self.r_squared_train,
            "r2_test": self.r_squared_test,
            "mse_test": self.mse_test,
            "pred_residual_se": self.pred_residual_se,
        }


def build_design(hosp_smoothed: DailySeries, changepoint_dates) -> DesignMatrix:
    """Intercept + smoothed-hospitalization column + one step dummy per date.

    Each dummy is 1 on and after its changepoint date.  Dates must be
    strictly increasing and strictly inside the series span so every dummy
    starts with at least one 0 and ends with at least one 1.
    """
    n = len(hosp_smoothed)
    dates = list(changepoint_dates)
    for a, b in zip(dates, dates[1:]):
        if a >= b:
            raise ParameterError("changepoint dates must be strictly increasing")
    cols = [np.ones(n), np.asarray(hosp_smoothed.values, dtype=float)]
    labels = ["intercept", "hosp"]
    for j, d in enumerate(dates, start=1):
        offset = (d - hosp_smoothed.start_date).days
        if offset <= 0 or offset >= n:
            raise DesignError(
                f"changepoint {d.isoformat()} not strictly inside the series span")
        dummy = np.zeros(n)
        dummy[offset:] = 1.0
        cols.append(dummy)
        labels.append(f"cp{j}")
    matrix = np.column_stack(cols)
    if np.linalg.matrix_rank(matrix) < matrix.shape[1]:
        raise DesignError("design matrix is rank deficient")
    return DesignMatrix(matrix, tuple(labels), hosp_smoothed.start_date)


def split_chronological(y: DailySeries, X: DesignMatrix, train_fraction: float):
    """First round(fraction*n) rows train, the rest test; no shuffling."""
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(y)
    if X.n_rows != n:
        raise ParameterError(f"design has {X.n_rows} rows but series has {n}")
    n_train = round(train_fraction * n)
    if n_train < X.n_cols + 2:
        raise SizeError(f"split leaves only {n_train} training rows for "
                        f"{X.n_cols} coefficients")
    if n_train >= n:
        raise SizeError("split leaves an empty test set")
    train = (X.rows(0, n_train), y.slice(0, n_train))
    test = (X.rows(n_train, n), y.slice(n_train, n))
    return train, test


def fit_ols(X: DesignMatrix, y) -> RegimeModelFit:
    """Ordinary least squares; equals the ARMA path at orders (0,0,0)."""
    yv = _values(y)
    m = X.matrix
    n, k = m.shape
    if len(yv) != n:
        raise ParameterError(f"{len(yv)} observations for {n} design rows")
    if n < k:
        raise ParameterError(f"need at least {k} rows to fit {k} coefficients")
    beta, rss = _lstsq_rss(m, yv)
    df = n - k
    sigma2 = rss / df if df > 0 else math.nan  # exact interpolation: no error df
    try:
        xtx_inv = np.linalg.inv(m.T @ m)
    except np.linalg.LinAlgError:
        raise DesignError("singular normal equations")
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0)) if df > 0 \
        else np.full(k, math.nan)
    aicc, bic = _criteria(rss, n, n, k, 0, 0)
    return RegimeModelFit(
        labels=X.labels,
        coefficients=beta,
        std_errors=se,
        orders=(0, 0, 0),
        phi=np.empty(0),
        theta=np.empty(0),
        residual_standard_error=float(math.sqrt(sigma2)) if df > 0 else math.nan,
        degrees_of_freedom=df,
        aicc=aicc,
        bic=bic,
        n_obs=n,
    )


def fit_arma_errors(X: DesignMatrix, y, orders: tuple[int, int, int]) -> RegimeModelFit:
    """Regression with ARMA(p, q) errors on the d-th difference, by CSS.

    The innovation recursion conditions on the first p differenced values
    with presample innovations set to zero.  Orders (0,0,0) reduce exactly
    to OLS.
    """
    p, d, q = orders
    if not (0 <= p <= 2 and 0 <= d <= 1 and 0 <= q <= 2):
        raise ParameterError(f"orders out of range: {orders}")
    yv = _values(y)
    m = X.matrix
    n, k = m.shape
    if len(yv) != n:
        raise ParameterError(f"{len(yv)} observations for {n} design rows")
    n_eff = n - d - p
    n_params = k + p + q + 1
    if n_eff < n_params + 2:
        raise SizeError(f"orders {orders} leave {n_eff} innovations for "
                        f"{n_params} parameters")

    if p == 0 and q == 0 and d == 0:
        return fit_ols(X, yv)

    y_d = np.diff(yv, d) if d else yv
    X_d = np.diff(m, d, axis=0) if d else m
    if d and not np.all(np.any(X_d != 0.0, axis=0)):
        # Differencing absorbs any constant column; the intercept is then
        # unidentifiable, so the cell is infeasible rather than fitted.
        raise DesignError(f"constant regressor unidentifiable after d={d} differencing")

    def css(arma: np.ndarray) -> float:
        phi, theta = arma[:p], arma[p:]
        if not (_stationary(phi) and _invertible(theta)):
            return math.inf
        yf, Xf = _filter_design(y_d, X_d, phi, theta, p)
        _, rss = _lstsq_rss(Xf, yf)
        return rss

    best = np.zeros(p + q)
    if p + q:
        result = minimize(css, best, method="Nelder-Mead",
                          options={"maxfev": MAX_OBJECTIVE_EVALS,
                                   "xatol": 1e-6, "fatol": 1e-10})
        if not np.isfinite(result.fun):
            raise ConvergenceError(f"CSS optimization failed for orders {orders}")
        best = result.x
        if not (_stationary(best[:p]) and _invertible(best[p:])):
            raise ConvergenceError(f"optimizer left the stationary region at {orders}")
        # A solution hugging the barrier means the CSS surface wants the
        # forbidden region; such near-unit-root fits are spurious under
        # conditional sums of squares, so the cell is declared unusable.
        boundary = min(_min_root_modulus(-best[:p]), _min_root_modulus(best[p:]))
        if boundary < ROOT_MARGIN + BOUNDARY_TOL:
            raise ConvergenceError(
                f"orders {orders} converged onto the stationarity/invertibility "
                f"boundary (min root modulus {boundary:.4f})")

    phi, theta = best[:p].copy(), best[p:].copy()
    yf, Xf = _filter_design(y_d, X_d, phi, theta, p)
    beta, rss = _lstsq_rss(Xf, yf)
    df = n_eff - k - p - q
    sigma2 = rss / df if df > 0 else math.nan
    try:
        xtx_inv = np.linalg.inv(Xf.T @ Xf)
    except np.linalg.LinAlgError:
        raise DesignError("filtered design became singular")
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))
    aicc, bic = _criteria(rss, n_eff, n, k, p, q)
    return RegimeModelFit(
        labels=X.labels,
        coefficients=beta,
        std_errors=se,
        orders=(p, d, q),
        phi=phi,
        theta=theta,
        residual_standard_error=float(math.sqrt(sigma2)),
        degrees_of_freedom=df,
        aicc=aicc,
        bic=bic,
        n_obs=n,
    )


def stepwise_select(X: DesignMatrix, y) -> RegimeModelFit:
    """Scan the (p, d, q) grid and keep the best information-criterion fit.

    Selection is by BIC with a parsimony margin: every model whose BIC lies
    within SELECTION_MARGIN of the grid minimum counts as an equivalent fit,
    and the simplest of those wins (fewest ARMA+difference parameters, then
    lower p, then lower BIC).  Infeasible or non-convergent cells are
    skipped.
    """
    yv = _values(y)
    fits: list[tuple[float, int, int, RegimeModelFit]] = []
    failures: list[str] = []
    for p, d, q in product((0, 1, 2), (0, 1), (0, 1, 2)):
        try:
            fit = fit_arma_errors(X, yv, (p, d, q))
        except (SizeError, ConvergenceError, DesignError) as exc:
            failures.append(f"({p},{d},{q}): {exc}")
            continue
        if math.isfinite(fit.bic):
            fits.append((fit.bic, p + d + q, p, fit))
    if not fits:
        raise ConvergenceError("every (p, d, q) grid cell failed: " + "; ".join(failures))
    best = min(item[0] for item in fits)
    near = [item for item in fits if item[0] <= best + SELECTION_MARGIN]
    near.sort(key=lambda item: (item[1], item[2], item[0]))
    return near[0][3]


def predict(fit: RegimeModelFit, X_new: DesignMatrix) -> np.ndarray:
    """Point forecast X_new @ beta.

    Error forecasts start from zero history at the forecast origin, so the
    ARMA part contributes nothing and decays to zero by construction.
    """
    if X_new.labels != fit.labels:
        raise DesignError(f"design labels {X_new.labels} do not match fit "
                          f"labels {fit.labels}")
    return X_new.matrix @ fit.coefficients


def evaluate(fit: RegimeModelFit, X_test: DesignMatrix, y_raw_test,
             y_smoothed_test, y_smoothed_train, X_train: DesignMatrix) -> FitMetrics:
    """Paper-style metric split: r^2 on the smoothed target, error sizes on raw.

    r^2 is 1 - SS_res/SS_tot against the smoothed series (train and test);
    mse_test and the prediction-residual standard deviation are computed
    against the raw test series.
    """
    raw_test = _values(y_raw_test)
    smooth_test = _values(y_smoothed_test)
    smooth_train = _values(y_smoothed_train)
    yhat_train = predict(fit, X_train)
    yhat_test = predict(fit, X_test)
    if not (len(raw_test) == len(smooth_test) == len(yhat_test)):
        raise ParameterError("test series/design lengths disagree")
    if len(smooth_train) != len(yhat_train):
        raise ParameterError("train series/design lengths disagree")

    r2_train = _r_squared(smooth_train, yhat_train)
    r2_test = _r_squared(smooth_test, yhat_test)
    err = raw_test - yhat_test
    mse = float(np.mean(err ** 2))
    pred_se = float(np.std(err, ddof=1)) if len(err) >= 2 else 0.0
    return FitMetrics(r_squared_train=r2_train, r_squared_test=r2_test,
                      mse_test=mse, pred_residual_se=pred_se)


def _r_squared(target: np.ndarray, fitted: np.ndarray) -> float:
    ss_tot = float(np.sum((target - np.mean(target)) ** 2))
    if ss_tot <= 0.0:
        raise ParameterError("r^2 undefined: smoothed target has zero variance")
    ss_res = float(np.sum((target - fitted) ** 2))
    return 1.0 - ss_res / ss_tot


def _values(y) -> np.ndarray:
    if isinstance(y, DailySeries):
        return np.asarray(y.values, dtype=float)
    return np.asarray(y, dtype=float)


def _lstsq_rss(m: np.ndarray, yv: np.ndarray) -> tuple[np.ndarray, float]:
    beta, _, rank, _ = np.linalg.lstsq(m, yv, rcond=None)
    if rank < m.shape[1]:
        raise DesignError("design matrix is rank deficient")
    resid = yv - m @ beta
    return beta, float(resid @ resid)


def _filter_design(y_d: np.ndarray, X_d: np.ndarray, phi: np.ndarray,
                   theta: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Map (y, X) to innovation space for fixed ARMA parameters.

    The innovations e_t = w_t - sum_i phi_i w_{t-i} - sum_j theta_j e_{t-j}
    are affine in beta, so filtering y and every design column identically
    turns CSS minimization over beta into an ordinary least squares problem.
    """
    ar = _ar_combine(y_d, phi, p)
    arX = np.column_stack([_ar_combine(X_d[:, j], phi, p)
                           for j in range(X_d.shape[1])])
    if len(theta):
        ma_poly = np.concatenate(([1.0], theta))
        ar = lfilter([1.0], ma_poly, ar)
        arX = lfilter([1.0], ma_poly, arX, axis=0)
    return ar, arX


def _ar_combine(v: np.ndarray, phi: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return v
    out = v[p:].copy()
    for i, coef in enumerate(phi, start=1):
        out -= coef * v[p - i:len(v) - i]
    return out


def _stationary(phi: np.ndarray) -> bool:
    """All roots of 1 - phi_1 z - ... - phi_p z^p outside the unit circle."""
    return _roots_outside(-np.asarray(phi, dtype=float))


def _invertible(theta: np.ndarray) -> bool:
    """All roots of 1 + theta_1 z + ... + theta_q z^q outside the unit circle."""
    return _roots_outside(np.asarray(theta, dtype=float))


def _roots_outside(tail: np.ndarray) -> bool:
    """Root-modulus check for the polynomial 1 + tail_1 z + tail_2 z^2 + ..."""
    if not np.all(np.isfinite(tail)):
        return False
    return _min_root_modulus(tail) > ROOT_MARGIN


def _min_root_modulus(tail: np.ndarray) -> float:
    """Smallest root modulus of 1 + tail_1 z + ...; inf for the unit polynomial."""
    tail = np.asarray(tail, dtype=float)
    if tail.size == 0 or not np.any(tail):
        return math.inf
    poly = np.concatenate(([1.0], tail))[::-1]
    roots = np.roots(poly)
    if roots.size == 0:
        return math.inf
    return float(np.min(np.abs(roots)))


def _criteria(rss: float, n_eff: int, n_total: int, k: int, p: int, q: int
              ) -> tuple[float, float]:
    """(AICc, BIC) from the Gaussian CSS likelihood.

    The innovation variance is the CSS average over the model's own
    conditioning window (n_eff terms), but the likelihood is normalized to
    the full sample length so cells with different (p, d) windows compare
    on equal footing; otherwise higher orders get a free ride simply by
    conditioning away observations.
    """
    n_params = k + p + q + 1  # innovation variance counts as a parameter
    if rss <= 0.0:
        return -math.inf, -math.inf
    if n_total - n_params - 1 <= 0 or n_eff <= 0:
        return math.inf, math.inf
    neg2ll = n_total * (math.log(2.0 * math.pi) + math.log(rss / n_eff) + 1.0)
    aic = neg2ll + 2.0 * n_params
    aicc = aic + 2.0 * n_params * (n_params + 1) / (n_total - n_params - 1)
    bic = neg2ll + math.log(n_total) * n_params
    return aicc, bic
