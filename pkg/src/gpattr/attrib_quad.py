"""Quadrature attribution of GP posteriors, plus a Monte Carlo validator.

These estimators discretize the same path integrals the closed forms in
attrib_exact evaluate analytically, so they serve two roles: a benchmark
of quadrature rules against the exact answer, and an independent check
that the closed forms are right.

All rules produce nodes in [0, 1] with weights summing to one:

    right_hand   nodes l/L, l = 1..L, uniform weights (never touches t=0)
    trapezoid    composite trapezoid on L panels (L+1 nodes)
    simpson      composite Simpson on L panels (2L+1 nodes, midpoints)
"""

from dataclasses import dataclass

import numpy as np

from .attrib_exact import (
    AttributionGaussian,
    _baseline_values,
    _clamp_variance,
    gpr_attribution,
)
from .gpr import GprModel, jittered_cholesky
from .kernels import grad_i_cross, hess_ii_cross
from .specfun import DEFAULT_TOLERANCES, Tolerances

__all__ = [
    "QuadratureSpec",
    "nodes_weights",
    "function_evals",
    "posterior_mean_gradient",
    "quad_attribution",
    "SweepRow",
    "convergence_sweep",
    "McOracleResult",
    "mc_attribution_oracle",
]

_RULES = ("right_hand", "trapezoid", "simpson")


@dataclass(frozen=True)
class QuadratureSpec:
    """A rule name and its partition count L (panels on [0, 1])."""

    rule: str
    partitions: int

    def __post_init__(self) -> None:
        if self.rule not in _RULES:
            raise ValueError(f"unknown rule {self.rule!r}, expected one of {_RULES}")
        if self.partitions < 1:
            raise ValueError(f"partitions must be >= 1, got {self.partitions}")


def nodes_weights(spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1] for the given rule; weights sum to 1."""
    L = spec.partitions
    if spec.rule == "right_hand":
        t = np.arange(1, L + 1, dtype=float) / L
        w = np.full(L, 1.0 / L)
    elif spec.rule == "trapezoid":
        t = np.arange(0, L + 1, dtype=float) / L
        w = np.full(L + 1, 1.0 / L)
        w[0] = w[-1] = 0.5 / L
    else:  # simpson: panel weights (1, 4, 1)/6, adjacent panels share endpoints
        t = np.arange(0, 2 * L + 1, dtype=float) / (2 * L)
        w = np.empty(2 * L + 1)
        w[0::2] = 2.0 / (6.0 * L)
        w[1::2] = 4.0 / (6.0 * L)
        w[0] = w[-1] = 1.0 / (6.0 * L)
    return t, w


def function_evals(spec: QuadratureSpec) -> int:
    """Integrand evaluations the rule spends (Simpson pays for midpoints)."""
    if spec.rule == "right_hand":
        return spec.partitions
    if spec.rule == "trapezoid":
        return spec.partitions + 1
    return 2 * spec.partitions + 1


def posterior_mean_gradient(model: GprModel, x, i: int) -> float:
    """d mu / d x_i at x: kernel gradients dotted with representer weights."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != model.hyper.dim:
        raise ValueError(f"x has {x.size} features, model expects {model.hyper.dim}")
    g = grad_i_cross(x[None, :], model.x_train, i, model.hyper)[0]
    return float(g @ model.alpha)


def quad_attribution(
    model: GprModel, x, baseline, i: int, spec: QuadratureSpec
) -> AttributionGaussian:
    """Quadrature approximation of the attribution law for feature i.

    mean: (x_i - z_i) * sum_l w_l dmu/dx_i(path_l)
    var:  (x_i - z_i)^2 * w^T H w - q^T (K + noise*I)^{-1} q
    with H the matrix of mixed kernel derivatives between path nodes and
    q_n = (x_i - z_i) * sum_l w_l dk(path_l, x_n)/dx_i, so the variance is
    the exact posterior variance of the discretized functional.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    hyper = model.hyper
    if not (x.size == z.size == hyper.dim):
        raise ValueError(f"dimension mismatch: x {x.size}, baseline {z.size}, model {hyper.dim}")
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    gap = float(x[i] - z[i])
    t, w = nodes_weights(spec)
    path = z[None, :] + t[:, None] * (x - z)[None, :]

    G = grad_i_cross(path, model.x_train, i, hyper)
    mean = gap * float(w @ (G @ model.alpha))

    H = hess_ii_cross(path, path, i, hyper)
    prior = gap**2 * float(w @ H @ w)
    q = gap * (G.T @ w)
    correction = float(q @ model.solve(q))
    var = _clamp_variance(prior - correction, "quadrature attribution")
    return AttributionGaussian(feature_index=i, mean=mean, variance=var)


@dataclass(frozen=True)
class SweepRow:
    """Median absolute errors of one (rule, L) cell against the closed form."""

    rule: str
    partitions: int
    function_evals: int
    mean_abs_err: float
    var_abs_err: float


def convergence_sweep(
    model: GprModel,
    queries,
    baseline,
    rules,
    l_values,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> list[SweepRow]:
    """Benchmark quadrature rules against the exact attribution.

    Errors are medians of |quad - exact| over all query points and
    features, separately for means and variances.
    """
    queries = np.asarray(queries, dtype=float)
    if queries.ndim == 1:
        queries = queries[None, :]
    z = _baseline_values(baseline)
    dim = model.hyper.dim
    exact = [
        [gpr_attribution(model, xq, z, i, tol) for i in range(dim)] for xq in queries
    ]
    rows: list[SweepRow] = []
    for rule in rules:
        for L in l_values:
            spec = QuadratureSpec(rule=rule, partitions=int(L))
            mean_errs = []
            var_errs = []
            for qi, xq in enumerate(queries):
                for i in range(dim):
                    approx = quad_attribution(model, xq, z, i, spec)
                    mean_errs.append(abs(approx.mean - exact[qi][i].mean))
                    var_errs.append(abs(approx.variance - exact[qi][i].variance))
            rows.append(
                SweepRow(
                    rule=rule,
                    partitions=int(L),
                    function_evals=function_evals(spec),
                    mean_abs_err=float(np.median(mean_errs)),
                    var_abs_err=float(np.median(var_errs)),
                )
            )
    return rows


@dataclass(frozen=True)
class McOracleResult:
    """Sample statistics of Monte Carlo attribution draws."""

    empirical_mean: float
    empirical_var: float
    std_error: float
    samples: int


def mc_attribution_oracle(
    model: GprModel,
    x,
    baseline,
    i: int,
    grid_points: int = 257,
    samples: int = 10_000,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> McOracleResult:
    """Monte Carlo check of the attribution law, bypassing the closed forms.

    The posterior gradient field along the path is jointly Gaussian with
        mean_j = sum_n alpha_n dk(path_j, x_n)/dx_i
        cov_jk = d2k(path_j, path_k) - g_j^T (K + noise*I)^{-1} g_k.
    Draws of the field are integrated with trapezoid weights on the grid
    and scaled by (x_i - z_i). Returns the sample mean and variance with
    the standard error of the mean.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = _baseline_values(baseline)
    hyper = model.hyper
    if not (x.size == z.size == hyper.dim):
        raise ValueError(f"dimension mismatch: x {x.size}, baseline {z.size}, model {hyper.dim}")
    if not 0 <= i < hyper.dim:
        raise IndexError(f"feature index {i} out of range for dimension {hyper.dim}")
    if grid_points < 3:
        raise ValueError(f"grid_points must be >= 3, got {grid_points}")
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    gap = float(x[i] - z[i])
    if gap == 0.0:
        return McOracleResult(0.0, 0.0, 0.0, samples)

    t = np.linspace(0.0, 1.0, grid_points)
    path = z[None, :] + t[:, None] * (x - z)[None, :]
    G = grad_i_cross(path, model.x_train, i, hyper)
    mean_field = G @ model.alpha
    H = hess_ii_cross(path, path, i, hyper)
    cov = H - G @ model.solve(G.T)
    cov = 0.5 * (cov + cov.T)
    factor, _ = jittered_cholesky(cov, tol)

    w = np.full(grid_points, 1.0 / (grid_points - 1))
    w[0] = w[-1] = 0.5 / (grid_points - 1)

    rng = np.random.default_rng(seed)
    draws = rng.standard_normal(size=(samples, grid_points))
    fields = mean_field[None, :] + draws @ factor.T
    attr = gap * (fields @ w)
    emp_mean = float(np.mean(attr))
    emp_var = float(np.var(attr, ddof=1))
    sem = float(np.std(attr, ddof=1) / np.sqrt(samples))
    return McOracleResult(emp_mean, emp_var, sem, samples)
