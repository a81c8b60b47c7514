"""Exact Gaussian process regression with the ARD squared-exponential kernel.

The prior mean is zero; targets are centered by their sample mean before
fitting and the offset is stored on the model, so predictions and the
marginal likelihood are expressed in the original target units. All solves
go through one Cholesky factor of K + noise*I, retried with escalating
diagonal jitter when the factorization fails.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .data_io import Dataset
from .kernels import ArdSeHyper, kernel_cross, kernel_matrix
from .specfun import DEFAULT_TOLERANCES, NumericalError, Tolerances

__all__ = [
    "GprModel",
    "jittered_cholesky",
    "fit",
    "predict",
    "log_marginal_likelihood",
    "optimize_hyperparameters",
    "save_model",
    "load_model",
    "load_model_payload",
]

MODEL_FORMAT = "gpattr-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class GprModel:
    """Fitted state: hyperparameters, training inputs, Cholesky factor of
    K + noise*I (lower), representer weights, target offset, and the jitter
    that had to be added (0.0 when none)."""

    hyper: ArdSeHyper
    x_train: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    y_mean_offset: float
    jitter: float = 0.0

    @property
    def n_train(self) -> int:
        return self.x_train.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve (K + noise*I) v = b with the stored factor."""
        return cho_solve((self.chol, True), b)


def jittered_cholesky(mat: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of a symmetric matrix, retrying with diagonal jitter.

    Jitter starts at tol.solver_jitter * mean(diag) and grows tenfold up to
    six times. Returns (factor, jitter_added). Raises NumericalError when
    the matrix stays non-positive-definite through the last retry.
    """
    mat = np.asarray(mat, dtype=float)
    try:
        return cholesky(mat, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    base = tol.solver_jitter * float(np.mean(np.diag(mat)))
    if base <= 0.0:
        base = tol.solver_jitter
    jitter = base
    eye = np.eye(mat.shape[0])
    for _ in range(6):
        try:
            return cholesky(mat + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(
        f"matrix not positive definite after jitter up to {jitter / 10.0:.3e} "
        f"(diag mean {np.mean(np.diag(mat)):.3e})"
    )


def fit(data: Dataset, hyper: ArdSeHyper, tol: Tolerances = DEFAULT_TOLERANCES, center: bool = True) -> GprModel:
    """Fit the GP: factor K + noise*I and solve for the representer weights.

    center=False skips target centering (offset 0), for callers that have
    already removed the mean or want the raw zero-mean-prior fit.
    """
    if data.dim != hyper.dim:
        raise ValueError(f"data has {data.dim} features, hyperparameters expect {hyper.dim}")
    K = kernel_matrix(data.X, hyper)
    K[np.diag_indices_from(K)] += hyper.noise_variance
    chol, jitter = jittered_cholesky(K, tol)
    offset = float(data.y.mean()) if center else 0.0
    alpha = cho_solve((chol, True), data.y - offset)
    return GprModel(
        hyper=hyper,
        x_train=np.array(data.X, dtype=float, copy=True),
        chol=chol,
        alpha=alpha,
        y_mean_offset=offset,
        jitter=jitter,
    )


def predict(model: GprModel, x_star) -> tuple[float, float]:
    """Posterior mean and variance at one point.

    mean = offset + k_*^T alpha
    var  = k(x_*, x_*) - k_*^T (K + noise*I)^{-1} k_*
    Tiny negative variances (>= -1e-10) from round-off clamp to zero.
    """
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    k_star = kernel_cross(model.x_train, x_star[None, :], model.hyper)[:, 0]
    mean = model.y_mean_offset + float(k_star @ model.alpha)
    w = solve_triangular(model.chol, k_star, lower=True)
    var = float(model.hyper.signal_variance - w @ w)
    if var < 0.0:
        if var < -1e-10:
            raise NumericalError(f"posterior variance {var:.3e} below round-off tolerance")
        var = 0.0
    return mean, var


def log_marginal_likelihood(model: GprModel, y) -> float:
    """Log marginal likelihood of targets y under the fitted model.

    y is centered with the model's stored offset so the quadratic form is
    consistent with the stored weights.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != model.n_train:
        raise ValueError(f"y has {y.size} entries, model was fit on {model.n_train}")
    yc = y - model.y_mean_offset
    n = y.size
    return float(
        -0.5 * yc @ model.alpha
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * n * np.log(2.0 * np.pi)
    )


def _hyper_from_log(theta: np.ndarray) -> ArdSeHyper:
    return ArdSeHyper(
        signal_variance=float(np.exp(theta[0])),
        lengthscales=np.exp(theta[2:]),
        noise_variance=float(np.exp(theta[1])),
    )


def optimize_hyperparameters(
    data: Dataset,
    init: ArdSeHyper,
    budget: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ArdSeHyper:
    """Best-found hyperparameters from a deterministic budgeted search.

    Runs a log-space coordinate descent from several starts: the given init
    and copies with every lengthscale scaled by 1/4, 1/16, and 4. The
    likelihood is multimodal in the lengthscales, and a too-long start tends
    to collapse into an all-noise basin (signal variance walks to zero)
    that greedy moves cannot leave, so the restarts spread over that axis.
    Each descent tries a multiplicative step up and down per coordinate and
    keeps improvements; the step shrinks after a pass with no accepted move.
    budget counts marginal-likelihood evaluations across all starts,
    allotted round-robin, so budget=1 evaluates init alone and returns it.
    The returned value never scores worse than init.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if data.dim != init.dim:
        raise ValueError(f"data has {data.dim} features, init expects {init.dim}")

    evals = 0

    def score(theta: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        try:
            model = fit(data, _hyper_from_log(theta), tol)
        except NumericalError:
            return -np.inf
        return log_marginal_likelihood(model, data.y)

    log_bound = np.log(1e8)

    def descend(theta: np.ndarray, current: float, limit: int) -> tuple[np.ndarray, float]:
        step = np.log(4.0)
        while evals < limit and step > 1e-3:
            moved = False
            for j in range(theta.size):
                for direction in (1.0, -1.0):
                    if evals >= limit:
                        break
                    cand = theta.copy()
                    cand[j] = np.clip(cand[j] + direction * step, -log_bound, log_bound)
                    if cand[j] == theta[j]:
                        continue
                    val = score(cand)
                    if val > current:
                        current = val
                        theta = cand
                        moved = True
                        break
            if not moved:
                step *= 0.5
        return theta, current

    theta0 = np.concatenate(
        (
            [np.log(init.signal_variance), np.log(max(init.noise_variance, 1e-12))],
            np.log(init.lengthscales),
        )
    )
    scales = (1.0, 0.25, 0.0625, 4.0)
    shares = [(budget + len(scales) - 1 - k) // len(scales) for k in range(len(scales))]
    best_theta = theta0
    best_val = -np.inf
    for k, (factor, share) in enumerate(zip(scales, shares)):
        if share < 1:
            continue
        start = theta0.copy()
        if factor != 1.0:
            start[2:] = np.clip(start[2:] + np.log(factor), -log_bound, log_bound)
        first = score(start)
        if not np.isfinite(first):
            if k == 0:
                raise NumericalError(
                    "marginal likelihood is not finite at the initial hyperparameters"
                )
            continue
        theta, val = descend(start, first, evals + share - 1)
        if val > best_val:
            best_val = val
            best_theta = theta
    return _hyper_from_log(best_theta)


def save_model(model: GprModel, path: str, metadata: dict | None = None) -> None:
    """Write the model as versioned JSON. The Cholesky factor is rebuilt on
    load from the stored hyperparameters and inputs, so it is not stored.

    metadata entries (feature names, normalization stats, training targets,
    a held-out query) ride along under their own keys for tooling; they are
    ignored by load_model.
    """
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "hyper": {
            "signal_variance": model.hyper.signal_variance,
            "lengthscales": model.hyper.lengthscales.tolist(),
            "noise_variance": model.hyper.noise_variance,
        },
        "x_train": model.x_train.tolist(),
        "alpha": model.alpha.tolist(),
        "y_mean_offset": model.y_mean_offset,
        "jitter": model.jitter,
    }
    for key, value in (metadata or {}).items():
        if key in payload:
            raise ValueError(f"metadata key {key!r} collides with a model field")
        payload[key] = value
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model_payload(path: str) -> dict:
    """Read and format-check a model file, returning the raw payload
    (model fields plus any metadata save_model attached)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {payload.get('version')!r}")
    return payload


def load_model(path: str) -> GprModel:
    """Load a model written by save_model, refactoring the kernel matrix."""
    payload = load_model_payload(path)
    hyper = ArdSeHyper(
        signal_variance=float(payload["hyper"]["signal_variance"]),
        lengthscales=np.array(payload["hyper"]["lengthscales"], dtype=float),
        noise_variance=float(payload["hyper"]["noise_variance"]),
    )
    x_train = np.array(payload["x_train"], dtype=float)
    K = kernel_matrix(x_train, hyper)
    K[np.diag_indices_from(K)] += hyper.noise_variance
    chol, jitter = jittered_cholesky(K)
    return GprModel(
        hyper=hyper,
        x_train=x_train,
        chol=chol,
        alpha=np.array(payload["alpha"], dtype=float),
        y_mean_offset=float(payload["y_mean_offset"]),
        jitter=jitter,
    )
