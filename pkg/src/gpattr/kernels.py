"""Squared-exponential kernel with per-feature lengthscales (ARD).

k(x, x') = sv * exp(-0.5 * sum_j ((x_j - x'_j) / ls_j)^2)

A single lengthscale shared across features is the special case of equal
ls_j, so one code path serves both. Scalar operations mirror the formulas
one-to-one; the *_matrix/*_cross helpers are the vectorized forms the
regression and attribution layers actually run on.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArdSeHyper",
    "ardse_eval",
    "ardse_grad_i",
    "ardse_hess_ii",
    "kernel_matrix",
    "kernel_cross",
    "grad_i_cross",
    "hess_ii_cross",
]


@dataclass(frozen=True)
class ArdSeHyper:
    """Kernel hyperparameters: signal variance, lengthscales, noise variance.

    signal_variance > 0, every lengthscale > 0, noise_variance >= 0.
    """

    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self) -> None:
        ls = np.asarray(self.lengthscales, dtype=float).reshape(-1)
        object.__setattr__(self, "lengthscales", ls)
        if not (np.isfinite(self.signal_variance) and self.signal_variance > 0.0):
            raise ValueError(f"signal_variance must be finite and > 0, got {self.signal_variance!r}")
        if ls.size == 0 or not np.all(np.isfinite(ls)) or np.any(ls <= 0.0):
            raise ValueError("lengthscales must be a non-empty vector of finite positives")
        if not (np.isfinite(self.noise_variance) and self.noise_variance >= 0.0):
            raise ValueError(f"noise_variance must be finite and >= 0, got {self.noise_variance!r}")

    @property
    def dim(self) -> int:
        return self.lengthscales.size


def _check_pair(x: np.ndarray, x2: np.ndarray, hyper: ArdSeHyper) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).reshape(-1)
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    if x.shape != x2.shape or x.size != hyper.dim:
        raise ValueError(
            f"input dimension mismatch: x {x.shape}, x2 {x2.shape}, lengthscales ({hyper.dim},)"
        )
    return x, x2


def ardse_eval(x, x2, hyper: ArdSeHyper) -> float:
    """Kernel value k(x, x2)."""
    x, x2 = _check_pair(x, x2, hyper)
    d = (x - x2) / hyper.lengthscales
    return float(hyper.signal_variance * np.exp(-0.5 * np.dot(d, d)))


def ardse_grad_i(x, x2, i: int, hyper: ArdSeHyper) -> float:
    """Partial derivative of k with respect to the first argument, feature i.

    d k / d x_i = -k(x, x2) * (x_i - x2_i) / ls_i^2
    """
    x, x2 = _check_pair(x, x2, hyper)
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    k = ardse_eval(x, x2, hyper)
    return float(-k * (x[i] - x2[i]) / hyper.lengthscales[i] ** 2)


def ardse_hess_ii(x, x2, i: int, hyper: ArdSeHyper) -> float:
    """Mixed second derivative d^2 k / (d x_i d x2_i), same feature i on both sides.

    d^2 k / (d x_i d x2_i) = k(x, x2) * (1/ls_i^2 - (x_i - x2_i)^2 / ls_i^4)
    """
    x, x2 = _check_pair(x, x2, hyper)
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    k = ardse_eval(x, x2, hyper)
    li2 = hyper.lengthscales[i] ** 2
    return float(k * (1.0 / li2 - (x[i] - x2[i]) ** 2 / li2**2))


def _as_points(X, hyper: ArdSeHyper, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != hyper.dim:
        raise ValueError(f"{name} must have shape (n, {hyper.dim}), got {X.shape}")
    return X


def kernel_cross(X, Z, hyper: ArdSeHyper) -> np.ndarray:
    """Kernel matrix k(X[n], Z[m]) with shape (len(X), len(Z)).

    Scaled differences are formed explicitly rather than via the usual
    norm expansion: exact symmetry and no cancellation for nearby points,
    at memory cost len(X)*len(Z)*dim, which stays small at this scale.
    """
    X = _as_points(X, hyper, "X")
    Z = _as_points(Z, hyper, "Z")
    diff = (X[:, None, :] - Z[None, :, :]) / hyper.lengthscales
    sq = np.einsum("nmd,nmd->nm", diff, diff)
    return hyper.signal_variance * np.exp(-0.5 * sq)


def kernel_matrix(X, hyper: ArdSeHyper) -> np.ndarray:
    """Symmetric kernel matrix over one point set (noise not included)."""
    return kernel_cross(X, X, hyper)


def grad_i_cross(Z, X, i: int, hyper: ArdSeHyper) -> np.ndarray:
    """Rows: d k(z, x_n) / d z_i for z in Z, x_n in X. Shape (len(Z), len(X))."""
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    Z = _as_points(Z, hyper, "Z")
    X = _as_points(X, hyper, "X")
    K = kernel_cross(Z, X, hyper)
    diff = Z[:, i][:, None] - X[:, i][None, :]
    return -K * diff / hyper.lengthscales[i] ** 2


def hess_ii_cross(Z, Z2, i: int, hyper: ArdSeHyper) -> np.ndarray:
    """Mixed second derivatives d^2 k(z, z') / (d z_i d z'_i) as a matrix."""
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    Z = _as_points(Z, hyper, "Z")
    Z2 = _as_points(Z2, hyper, "Z2")
    K = kernel_cross(Z, Z2, hyper)
    li2 = hyper.lengthscales[i] ** 2
    diff = Z[:, i][:, None] - Z2[:, i][None, :]
    return K * (1.0 / li2 - diff**2 / li2**2)
