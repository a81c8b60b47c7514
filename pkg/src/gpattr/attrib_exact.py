"""Exact path-integral feature attributions for GP posteriors.

For a straight path from a baseline z to the query x, the attribution of
feature i applied to any function F is

    attr_i(x | F) = (x_i - z_i) * integral_0^1 dF(z + t(x - z))/dx_i dt.

Applied to a GP posterior the attribution is itself Gaussian. Its mean is
the attribution of the posterior mean; its variance combines a prior
double-integral term with a data correction through the training solve.
Both pieces reduce to closed forms for the ARD squared-exponential kernel
because every integrand is a Gaussian in t times a low-degree polynomial:

    slice integrand  (q1*t + q0) * exp(-(p2*t^2 + p1*t + p0) / 2)
    variance kernel  (r0 + r2*(s-t)^2) * exp(-p2*(s-t)^2 / 2)

The closed forms are evaluated in a rearrangement whose exponents are all
non-positive (guaranteed by Cauchy-Schwarz), so nothing overflows. When
the path is degenerate (p2 ~ 0, query at the baseline) the formulas
divide by ~0 and evaluation falls back to composite-Simpson quadrature.

A Bayesian linear model admits the same construction with a trivial exact
answer, which serves as an end-to-end sanity case.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky

from .data_io import Baseline
from .gpr import GprModel, predict
from .kernels import ArdSeHyper, grad_i_cross, hess_ii_cross
from .specfun import DEFAULT_TOLERANCES, NumericalError, Tolerances, erf

__all__ = [
    "Baseline",
    "AttributionGaussian",
    "AttrCoefficients",
    "AttributionReport",
    "attr_coefficients",
    "kernel_slice_attribution",
    "prior_attribution_variance",
    "gpr_attribution",
    "attribution_report",
    "write_report_json_dict",
    "write_report_csv",
    "bayes_linear_posterior",
    "bayes_linear_attribution",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_FALLBACK_PARTITIONS = 256


@dataclass(frozen=True)
class AttributionGaussian:
    """Gaussian law of one feature's attribution: index, mean, variance."""

    feature_index: int
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise ValueError("attribution mean and variance must be finite")
        if self.variance < 0.0:
            raise ValueError(f"attribution variance must be >= 0, got {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class AttrCoefficients:
    """Coefficients of the path-restricted integrands for one (x, baseline,
    training point, feature) tuple.

    p2, p1, p0: exponent polynomial p2*t^2 + p1*t + p0 (p2 >= 0).
    q1, q0: slice prefactor line q1*t + q0 (both zero when x_i = z_i).
    r2, r0: variance kernel polynomial r0 + r2*u^2 at lag u = s - t.
    """

    p2: float
    p1: float
    p0: float
    q1: float
    q0: float
    r2: float
    r0: float


def _clamp_variance(var: float, what: str) -> float:
    if var >= 0.0:
        return var
    if var >= -1e-10:
        return 0.0
    raise NumericalError(f"{what} variance {var:.6e} is negative beyond round-off tolerance")


def _baseline_values(baseline) -> np.ndarray:
    if isinstance(baseline, Baseline):
        return baseline.values
    return np.asarray(baseline, dtype=float).reshape(-1)


def attr_coefficients(x, baseline, x_center, i: int, hyper: ArdSeHyper) -> AttrCoefficients:
    """Integrand coefficients for the kernel slice k(., x_center) and the
    variance kernel, along the path from baseline to x, feature i."""
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    c = np.asarray(x_center, dtype=float).reshape(-1)
    if not (x.size == z.size == c.size == hyper.dim):
        raise ValueError(
            f"dimension mismatch: x {x.size}, baseline {z.size}, x_center {c.size}, "
            f"hyperparameters {hyper.dim}"
        )
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    ls2 = hyper.lengthscales**2
    delta = x - z
    r = z - c
    sv = hyper.signal_variance
    li2 = ls2[i]
    return AttrCoefficients(
        p2=float(np.sum(delta**2 / ls2)),
        p1=float(2.0 * np.sum(delta * r / ls2)),
        p0=float(np.sum(r**2 / ls2)),
        q1=float(-sv * delta[i] ** 2 / li2),
        q0=float(-sv * delta[i] * r[i] / li2),
        r2=float(-sv * delta[i] ** 2 / li2**2),
        r0=float(sv / li2),
    )


def _slice_attribution_closed(
    p2: float, p1: np.ndarray, p0: np.ndarray, q1: float, q0: np.ndarray
) -> np.ndarray:
    """Closed form of integral_0^1 (q1*t + q0) exp(-(p2 t^2 + p1 t + p0)/2) dt,
    vectorized over training points (p1, p0, q0 are per-point arrays).

    Derivation: complete the square in the exponent, which splits the
    integral into an exponential difference and an erf difference. Both
    exponents here are <= 0: the erf-term exponent by Cauchy-Schwarz
    (p1^2 <= 4 p2 p0), the others because each polynomial value is a
    squared scaled distance.
    """
    root = math.sqrt(2.0 * p2)
    # endpoint-exponential difference e^{-(p0+p1+p2)/2} - e^{-p0/2}, factored
    # by the sign of p2 + p1 so the expm1 argument is never positive: the
    # single-sided form overflows when the baseline sits far from a training
    # point while the query is close (p1 << -p2), yielding inf * 0.
    half = 0.5 * (p2 + p1)
    down = np.expm1(-np.maximum(half, 0.0))
    up = np.expm1(np.minimum(half, 0.0))
    diff = np.where(
        half >= 0.0,
        np.exp(-0.5 * p0) * down,
        -np.exp(-0.5 * (p0 + p1 + p2)) * up,
    )
    exp_part = -(q1 / p2) * diff
    t0 = p1 / (2.0 * root)
    t1 = (2.0 * p2 + p1) / (2.0 * root)
    log_pref = np.minimum(p1**2 / (8.0 * p2) - 0.5 * p0, 0.0)
    erf_part = (
        _SQRT_2PI
        * (p1 * q1 - 2.0 * p2 * q0)
        / (4.0 * p2**1.5)
        * np.exp(log_pref)
        * (erf(t0) - erf(t1))
    )
    return exp_part + erf_part


def _fallback_nodes() -> tuple[np.ndarray, np.ndarray]:
    # Local import: the quadrature module sits above this one in the
    # dependency order, and only this degenerate-path branch needs it.
    from .attrib_quad import QuadratureSpec, nodes_weights

    return nodes_weights(QuadratureSpec(rule="simpson", partitions=_FALLBACK_PARTITIONS))


def _slice_attribution_vector(
    x: np.ndarray,
    z: np.ndarray,
    centers: np.ndarray,
    i: int,
    hyper: ArdSeHyper,
    tol: Tolerances,
) -> np.ndarray:
    """Attribution of feature i applied to every kernel slice k(., center)."""
    ls2 = hyper.lengthscales**2
    delta = x - z
    p2 = float(np.sum(delta**2 / ls2))
    if p2 <= tol.singular_threshold:
        t, w = _fallback_nodes()
        path = z[None, :] + t[:, None] * delta[None, :]
        grads = grad_i_cross(path, centers, i, hyper)
        return delta[i] * (grads.T @ w)
    r = z[None, :] - centers
    p1 = 2.0 * (r / ls2) @ delta
    p0 = np.sum(r**2 / ls2, axis=1)
    q1 = float(-hyper.signal_variance * delta[i] ** 2 / ls2[i])
    q0 = -hyper.signal_variance * delta[i] * r[:, i] / ls2[i]
    return _slice_attribution_closed(p2, p1, p0, q1, q0)


def kernel_slice_attribution(
    x, baseline, x_center, i: int, hyper: ArdSeHyper, tol: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Attribution of feature i applied to the function k(., x_center).

    In one dimension this telescopes to k(x, x_center) - k(z, x_center).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    center = np.asarray(x_center, dtype=float).reshape(-1)
    if not (x.size == z.size == center.size == hyper.dim):
        raise ValueError(
            f"dimension mismatch: x {x.size}, baseline {z.size}, x_center {center.size}, "
            f"hyperparameters {hyper.dim}"
        )
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    return float(_slice_attribution_vector(x, z, center[None, :], i, hyper, tol)[0])


def prior_attribution_variance(
    x, baseline, i: int, hyper: ArdSeHyper, tol: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Prior variance of feature i's attribution: the double path integral
    of the mixed kernel derivative, scaled by (x_i - z_i)^2.

    Closed form via the lag substitution u = s - t:
        (x_i - z_i)^2 * [ sqrt(2 pi) erf(sqrt(p2/2)) (p2 r0 + r2) / p2^{3/2}
                          - 2 (1 - exp(-p2/2)) (p2 r0 + 2 r2) / p2^2 ]
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    if not (x.size == z.size == hyper.dim):
        raise ValueError(
            f"dimension mismatch: x {x.size}, baseline {z.size}, hyperparameters {hyper.dim}"
        )
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    ls2 = hyper.lengthscales**2
    delta = x - z
    p2 = float(np.sum(delta**2 / ls2))
    sv = hyper.signal_variance
    if p2 <= tol.singular_threshold:
        t, w = _fallback_nodes()
        path = z[None, :] + t[:, None] * delta[None, :]
        H = hess_ii_cross(path, path, i, hyper)
        return _clamp_variance(float(delta[i] ** 2 * (w @ H @ w)), "prior attribution")
    r2 = -sv * delta[i] ** 2 / ls2[i] ** 2
    r0 = sv / ls2[i]
    one_minus_exp = -math.expm1(-0.5 * p2)
    bracket = (
        _SQRT_2PI * erf(math.sqrt(0.5 * p2)) * (p2 * r0 + r2) / p2**1.5
        - 2.0 * one_minus_exp * (p2 * r0 + 2.0 * r2) / p2**2
    )
    return _clamp_variance(float(delta[i] ** 2 * bracket), "prior attribution")


def gpr_attribution(
    model: GprModel, x, baseline, i: int, tol: Tolerances = DEFAULT_TOLERANCES
) -> AttributionGaussian:
    """Gaussian law of feature i's attribution under the GP posterior.

    mean = slice attributions dotted with the representer weights
    var  = prior double-integral term
           - (slice attributions)^T (K + noise*I)^{-1} (slice attributions)
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    hyper = model.hyper
    if not (x.size == z.size == hyper.dim):
        raise ValueError(
            f"dimension mismatch: x {x.size}, baseline {z.size}, model {hyper.dim}"
        )
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    a_vec = _slice_attribution_vector(x, z, model.x_train, i, hyper, tol)
    mean = float(a_vec @ model.alpha)
    prior = prior_attribution_variance(x, z, i, hyper, tol)
    correction = float(a_vec @ model.solve(a_vec))
    var = _clamp_variance(prior - correction, "attribution")
    return AttributionGaussian(feature_index=i, mean=mean, variance=var)


@dataclass(frozen=True)
class AttributionReport:
    """Per-feature attribution laws plus the completeness diagnostic."""

    attributions: tuple[AttributionGaussian, ...]
    completeness_residual: float
    prediction_mean: float
    baseline_prediction_mean: float

    @property
    def total_mean(self) -> float:
        return sum(a.mean for a in self.attributions)


def attribution_report(
    model: GprModel, x, baseline, tol: Tolerances = DEFAULT_TOLERANCES
) -> AttributionReport:
    """Attribute every feature and report the completeness residual

        | sum_i mean_i - (mu(x) - mu(z)) |

    which is zero in exact arithmetic for the straight-path construction.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    rows = tuple(gpr_attribution(model, x, z, i, tol) for i in range(model.hyper.dim))
    mu_x, _ = predict(model, x)
    mu_z, _ = predict(model, z)
    residual = abs(sum(r.mean for r in rows) - (mu_x - mu_z))
    return AttributionReport(
        attributions=rows,
        completeness_residual=float(residual),
        prediction_mean=mu_x,
        baseline_prediction_mean=mu_z,
    )


def write_report_json_dict(report: AttributionReport, feature_names=None) -> dict:
    """Report as a JSON-ready dict. feature_names defaults to x0, x1, ..."""
    names = _names(feature_names, len(report.attributions))
    return {
        "format": "gpattr-attribution-report",
        "version": 1,
        "prediction_mean": report.prediction_mean,
        "baseline_prediction_mean": report.baseline_prediction_mean,
        "completeness_residual": report.completeness_residual,
        "attributions": [
            {
                "feature": names[a.feature_index],
                "feature_index": a.feature_index,
                "mean": a.mean,
                "variance": a.variance,
                "std": a.std,
            }
            for a in report.attributions
        ],
    }


def write_report_csv(report: AttributionReport, path: str, feature_names=None) -> None:
    """Write rows (feature, mean, std, completeness_residual)."""
    names = _names(feature_names, len(report.attributions))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "mean", "std", "completeness_residual"])
        for a in report.attributions:
            writer.writerow(
                [names[a.feature_index], repr(a.mean), repr(a.std), repr(report.completeness_residual)]
            )


def _names(feature_names, n: int) -> list[str]:
    if feature_names is None:
        return [f"x{j}" for j in range(n)]
    names = list(feature_names)
    if len(names) != n:
        raise ValueError(f"got {len(names)} feature names for {n} attributions")
    return names


def bayes_linear_posterior(
    X, y, prior_mean, prior_cov, noise_variance: float
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior over linear weights with Gaussian prior and noise.

        cov  = (prior_cov^{-1} + X^T X / noise)^{-1}
        mean = cov (prior_cov^{-1} prior_mean + X^T y / noise)

    X may have zero rows, in which case the prior is returned.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    y = np.asarray(y, dtype=float).reshape(-1)
    mu = np.asarray(prior_mean, dtype=float).reshape(-1)
    S = np.asarray(prior_cov, dtype=float)
    d = mu.size
    if S.shape != (d, d) or X.shape[1] != d:
        raise ValueError(f"inconsistent shapes: X {X.shape}, prior_mean ({d},), prior_cov {S.shape}")
    if X.shape[0] != y.size:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.size}")
    if not (np.isfinite(noise_variance) and noise_variance > 0.0):
        raise ValueError(f"noise_variance must be finite and > 0, got {noise_variance!r}")
    try:
        Sc = cholesky(S, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("prior covariance is not positive definite") from exc
    S_inv = cho_solve((Sc, True), np.eye(d))
    precision = S_inv + X.T @ X / noise_variance
    try:
        Pc = cholesky(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("posterior precision is not positive definite") from exc
    cov = cho_solve((Pc, True), np.eye(d))
    cov = 0.5 * (cov + cov.T)
    mean = cho_solve((Pc, True), S_inv @ mu + X.T @ y / noise_variance)
    return mean, cov


def bayes_linear_attribution(post_mean, post_cov, x, baseline, i: int) -> AttributionGaussian:
    """Attribution of feature i under a linear model with Gaussian weights.

    The path integral of a constant gradient is exact:
        mean = post_mean_i * (x_i - z_i),  var = post_cov_ii * (x_i - z_i)^2
    """
    post_mean = np.asarray(post_mean, dtype=float).reshape(-1)
    post_cov = np.asarray(post_cov, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    d = post_mean.size
    if post_cov.shape != (d, d) or x.size != d or z.size != d:
        raise ValueError(
            f"inconsistent shapes: mean ({d},), cov {post_cov.shape}, x ({x.size},), baseline ({z.size},)"
        )
    if not 0 <= i < d:
        raise IndexError(f"feature index {i} out of range for dimension {d}")
    gap = float(x[i] - z[i])
    var = _clamp_variance(float(post_cov[i, i]) * gap**2, "linear attribution")
    return AttributionGaussian(feature_index=i, mean=float(post_mean[i]) * gap, variance=var)
