"""Closed-form attribution tests.

Oracles: the integrand coefficients are checked pointwise against the raw
kernel derivative along the path, and the closed-form integrals against
high-resolution Simpson quadrature of those same integrands (scipy's
simpson, not this package's quadrature module).
"""

import csv
import json
import math

import numpy as np
import pytest
from scipy.integrate import simpson

from gpattr import (
    ArdSeHyper,
    NumericalError,
    ardse_eval,
    ardse_grad_i,
    attribution_report,
    bayes_linear_attribution,
    bayes_linear_posterior,
    fit,
    gpr_attribution,
    kernel_slice_attribution,
    predict,
    prior_attribution_variance,
    write_report_csv,
    write_report_json_dict,
)
from gpattr.attrib_exact import AttrCoefficients, AttributionGaussian, attr_coefficients
from gpattr.data_io import Baseline, Dataset
from gpattr.kernels import hess_ii_cross


def _draw(rng, dim=3):
    hyper = ArdSeHyper(
        float(rng.uniform(0.3, 2.0)), rng.uniform(0.6, 1.5, size=dim), 0.0
    )
    x = rng.uniform(-1.5, 1.5, size=dim)
    z = rng.uniform(-1.5, 1.5, size=dim)
    c = rng.uniform(-1.5, 1.5, size=dim)
    return hyper, x, z, c


def test_coefficients_reproduce_path_gradient(rng):
    # (q1 t + q0) exp(-(p2 t^2 + p1 t + p0)/2) must equal
    # (x_i - z_i) * dk/dx_i evaluated on the straight path at every t
    for _ in range(30):
        hyper, x, z, c = _draw(rng)
        for i in range(3):
            co = attr_coefficients(x, z, c, i, hyper)
            for t in rng.uniform(0.0, 1.0, size=7):
                point = z + t * (x - z)
                want = (x[i] - z[i]) * ardse_grad_i(point, c, i, hyper)
                got = (co.q1 * t + co.q0) * math.exp(
                    -0.5 * (co.p2 * t * t + co.p1 * t + co.p0)
                )
                assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_coefficients_reproduce_variance_kernel(rng):
    # (r0 + r2 u^2) exp(-p2 u^2 / 2) at lag u = s - t must equal the mixed
    # second kernel derivative between two path points
    for _ in range(20):
        hyper, x, z, _ = _draw(rng)
        for i in range(3):
            co = attr_coefficients(x, z, z, i, hyper)
            for s, t in rng.uniform(0.0, 1.0, size=(5, 2)):
                pa = (z + s * (x - z))[None, :]
                pb = (z + t * (x - z))[None, :]
                want = hess_ii_cross(pa, pb, i, hyper)[0, 0]
                u = s - t
                got = (co.r0 + co.r2 * u * u) * math.exp(-0.5 * co.p2 * u * u)
                assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_coefficient_invariants(rng):
    for _ in range(50):
        hyper, x, z, c = _draw(rng)
        co = attr_coefficients(x, z, c, 0, hyper)
        assert co.p2 >= 0.0 and co.p0 >= 0.0
        # Cauchy-Schwarz keeps the completed-square exponent non-positive
        assert co.p1**2 <= 4.0 * co.p2 * co.p0 + 1e-12
        assert co.r2 <= 0.0 and co.r0 > 0.0


def test_coefficients_validation():
    hyper = ArdSeHyper(1.0, np.array([1.0, 1.0]), 0.0)
    with pytest.raises(ValueError):
        attr_coefficients([0.0], [0.0, 0.0], [0.0, 0.0], 0, hyper)
    with pytest.raises(IndexError):
        attr_coefficients([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], 2, hyper)


def test_slice_matches_simpson_oracle(rng):
    ts = np.linspace(0.0, 1.0, 4097)
    for _ in range(25):
        hyper, x, z, c = _draw(rng)
        for i in range(3):
            vals = np.array(
                [(x[i] - z[i]) * ardse_grad_i(z + t * (x - z), c, i, hyper) for t in ts]
            )
            want = simpson(vals, x=ts)
            got = kernel_slice_attribution(x, z, c, i, hyper)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-12)


def test_slice_zero_when_feature_unchanged(rng):
    hyper, x, z, c = _draw(rng)
    x[1] = z[1]
    assert kernel_slice_attribution(x, z, c, 1, hyper) == 0.0


def test_slice_finite_for_distant_baseline():
    # baseline hundreds of lengthscales out while the query sits on the
    # center: the one-sided expm1 factoring used to blow up to inf * 0 here
    hyper = ArdSeHyper(1.2, np.array([0.2, 0.3]), 0.0)
    c = np.array([0.0, 0.0])
    x = np.array([0.0, 0.0])
    z = np.array([-8.0, -8.0])
    ts = np.linspace(0.0, 1.0, 4097)
    for i in range(2):
        got = kernel_slice_attribution(x, z, c, i, hyper)
        vals = np.array(
            [(x[i] - z[i]) * ardse_grad_i(z + t * (x - z), c, i, hyper) for t in ts]
        )
        assert np.isfinite(got)
        assert got == pytest.approx(simpson(vals, x=ts), rel=1e-8)


def test_slice_telescopes_in_one_dimension(rng):
    # with a single feature the path integral is the fundamental theorem
    # of calculus: k(x, c) - k(z, c)
    hyper = ArdSeHyper(1.3, np.array([0.8]), 0.0)
    for _ in range(20):
        x, z, c = rng.uniform(-2.0, 2.0, size=3)
        want = ardse_eval([x], [c], hyper) - ardse_eval([z], [c], hyper)
        got = kernel_slice_attribution([x], [z], [c], 0, hyper)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_slice_degenerate_path_falls_back_to_quadrature(rng):
    # query on top of the baseline: the closed form divides by ~0, the
    # fallback integrates a nearly constant gradient
    hyper = ArdSeHyper(1.0, np.array([1.0, 1.0]), 0.0)
    z = np.array([0.3, -0.2])
    c = np.array([1.0, 0.5])
    x = z + np.array([1e-8, 0.0])
    got = kernel_slice_attribution(x, z, c, 0, hyper)
    want = (x[0] - z[0]) * ardse_grad_i(z, c, 0, hyper)
    assert got == pytest.approx(want, rel=1e-6)
    assert kernel_slice_attribution(z, z, c, 0, hyper) == 0.0


def test_prior_variance_matches_tensor_simpson(rng):
    ts = np.linspace(0.0, 1.0, 513)
    for _ in range(8):
        hyper, x, z, _ = _draw(rng)
        path = z[None, :] + ts[:, None] * (x - z)[None, :]
        for i in range(3):
            H = hess_ii_cross(path, path, i, hyper)
            inner = simpson(H, x=ts, axis=1)
            want = (x[i] - z[i]) ** 2 * simpson(inner, x=ts)
            got = prior_attribution_variance(x, z, i, hyper)
            assert got == pytest.approx(want, rel=1e-6, abs=1e-10)


def test_prior_variance_nonnegative_everywhere(rng):
    for _ in range(1000):
        dim = int(rng.integers(1, 5))
        hyper = ArdSeHyper(
            float(rng.uniform(0.1, 3.0)), rng.uniform(0.2, 3.0, size=dim), 0.0
        )
        x = rng.uniform(-4.0, 4.0, size=dim)
        z = rng.uniform(-4.0, 4.0, size=dim)
        i = int(rng.integers(0, dim))
        assert prior_attribution_variance(x, z, i, hyper) >= 0.0


def test_prior_variance_zero_when_feature_unchanged(rng):
    hyper, x, z, _ = _draw(rng)
    x[0] = z[0]
    assert prior_attribution_variance(x, z, 0, hyper) == 0.0


def test_prior_variance_degenerate_path(rng):
    hyper = ArdSeHyper(1.0, np.array([1.0, 1.0]), 0.0)
    z = np.array([0.1, 0.2])
    assert prior_attribution_variance(z, z, 0, hyper) == 0.0
    x = z + np.array([1e-8, 0.0])
    # nearly constant integrand: variance ~ gap^2 * hess(z, z)
    want = 1e-16 * hess_ii_cross(z[None, :], z[None, :], 0, hyper)[0, 0]
    assert prior_attribution_variance(x, z, 0, hyper) == pytest.approx(want, rel=1e-4)


def test_model_attribution_zero_at_baseline(sim_model):
    z = np.array([2.0, 5.0])
    for i in range(2):
        a = gpr_attribution(sim_model, z, z, i)
        assert a.mean == 0.0 and a.variance == 0.0


def test_model_attribution_completeness(sim_model, rng):
    # the per-feature means must sum to the prediction difference
    for _ in range(100):
        x = rng.uniform(0.0, 10.0, size=2)
        z = rng.uniform(0.0, 10.0, size=2)
        total = sum(gpr_attribution(sim_model, x, z, i).mean for i in range(2))
        want = predict(sim_model, x)[0] - predict(sim_model, z)[0]
        assert abs(total - want) <= 1e-10


def test_model_attribution_posterior_variance_below_prior(sim_model, rng):
    for _ in range(25):
        x = rng.uniform(0.0, 10.0, size=2)
        z = rng.uniform(0.0, 10.0, size=2)
        for i in range(2):
            a = gpr_attribution(sim_model, x, z, i)
            prior = prior_attribution_variance(x, z, i, sim_model.hyper)
            assert 0.0 <= a.variance <= prior + 1e-12


def test_model_attribution_ignores_inert_feature(rng):
    # a feature with an enormous lengthscale cannot move the kernel, so its
    # attribution collapses to zero regardless of the gap
    hyper = ArdSeHyper(1.0, np.array([1.0, 1.0, 1e6]), 0.1)
    X = rng.uniform(-2.0, 2.0, size=(30, 3))
    y = np.sin(X[:, 0]) + 0.3 * rng.standard_normal(30)
    model = fit(Dataset(X, y, ("a", "b", "inert")), hyper)
    a = gpr_attribution(model, [1.0, 0.5, 2.0], [0.0, 0.0, -2.0], 2)
    assert abs(a.mean) <= 1e-9
    assert a.variance <= 1e-9


def test_model_attribution_uncertainty_grows_with_distance(sim_model):
    # same direction, growing gap, baseline at a training-dense spot:
    # the attribution variance should grow with how far the path wanders
    z = np.array([5.0, 5.0])
    small = gpr_attribution(sim_model, z + np.array([0.1, 0.1]), z, 0).variance
    large = gpr_attribution(sim_model, z + np.array([4.0, 4.0]), z, 0).variance
    assert large > small


def test_report_fields_and_residual(sim_model):
    x = np.array([7.0, 2.0])
    z = Baseline(np.array([3.0, 4.0]))
    rep = attribution_report(sim_model, x, z)
    assert len(rep.attributions) == 2
    assert rep.prediction_mean == pytest.approx(predict(sim_model, x)[0])
    assert rep.baseline_prediction_mean == pytest.approx(predict(sim_model, z.values)[0])
    want = abs(rep.total_mean - (rep.prediction_mean - rep.baseline_prediction_mean))
    assert rep.completeness_residual == pytest.approx(want, abs=1e-15)
    assert rep.completeness_residual <= 1e-10


def test_report_json_dict_shape(sim_model):
    rep = attribution_report(sim_model, [7.0, 2.0], [3.0, 4.0])
    doc = write_report_json_dict(rep, feature_names=["alpha", "beta"])
    assert doc["format"] == "gpattr-attribution-report" and doc["version"] == 1
    assert [a["feature"] for a in doc["attributions"]] == ["alpha", "beta"]
    a0 = doc["attributions"][0]
    assert a0["std"] == pytest.approx(math.sqrt(a0["variance"]))
    json.dumps(doc)  # must be serializable as-is
    with pytest.raises(ValueError):
        write_report_json_dict(rep, feature_names=["only-one"])


def test_report_csv_round_trips(sim_model, tmp_path):
    rep = attribution_report(sim_model, [7.0, 2.0], [3.0, 4.0])
    path = tmp_path / "report.csv"
    write_report_csv(rep, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["feature", "mean", "std", "completeness_residual"]
    assert len(rows) == 3
    # repr round-trips floats exactly
    assert float(rows[1][1]) == rep.attributions[0].mean
    assert float(rows[2][2]) == rep.attributions[1].std


def test_attribution_gaussian_validation():
    a = AttributionGaussian(0, 1.0, 4.0)
    assert a.std == 2.0
    with pytest.raises(ValueError):
        AttributionGaussian(0, np.nan, 1.0)
    with pytest.raises(ValueError):
        AttributionGaussian(0, 0.0, -1e-6)


def test_variance_clamp_policy():
    from gpattr.attrib_exact import _clamp_variance

    assert _clamp_variance(-5e-11, "test") == 0.0
    assert _clamp_variance(2.0, "test") == 2.0
    with pytest.raises(NumericalError):
        _clamp_variance(-1e-6, "test")


def test_linear_posterior_matches_dense_oracle(rng):
    d, n = 3, 40
    X = rng.standard_normal((n, d))
    w_true = np.array([1.5, -2.0, 0.5])
    y = X @ w_true + 0.1 * rng.standard_normal(n)
    mu0 = np.zeros(d)
    S0 = 2.0 * np.eye(d) + 0.3
    noise = 0.04
    mean, cov = bayes_linear_posterior(X, y, mu0, S0, noise)
    S0_inv = np.linalg.inv(S0)
    cov_want = np.linalg.inv(S0_inv + X.T @ X / noise)
    mean_want = cov_want @ (S0_inv @ mu0 + X.T @ y / noise)
    assert np.abs(cov - cov_want).max() <= 1e-10
    assert np.abs(mean - mean_want).max() <= 1e-10


def test_linear_posterior_no_data_returns_prior():
    mu0 = np.array([1.0, -1.0])
    S0 = np.array([[2.0, 0.5], [0.5, 1.0]])
    mean, cov = bayes_linear_posterior(np.zeros((0, 2)), np.zeros(0), mu0, S0, 1.0)
    assert np.allclose(mean, mu0, atol=1e-12)
    assert np.allclose(cov, S0, atol=1e-12)


def test_linear_posterior_huge_noise_keeps_prior(rng):
    X = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    mu0 = np.array([0.3, -0.7])
    S0 = np.eye(2) * 1.5
    mean, cov = bayes_linear_posterior(X, y, mu0, S0, 1e12)
    assert np.allclose(mean, mu0, atol=1e-9)
    assert np.allclose(cov, S0, atol=1e-9)


def test_linear_posterior_rejects_bad_prior():
    with pytest.raises(NumericalError):
        bayes_linear_posterior(np.zeros((1, 2)), [0.0], np.zeros(2), -np.eye(2), 1.0)
    with pytest.raises(ValueError):
        bayes_linear_posterior(np.zeros((1, 2)), [0.0], np.zeros(2), np.eye(2), 0.0)


def test_linear_attribution_exact_for_known_weights():
    # integrated gradient of a linear function is the weight times the gap
    mean = np.array([2.0, -3.0])
    cov = np.array([[0.5, 0.1], [0.1, 0.25]])
    x = np.array([2.0, 1.0])
    z = np.array([0.5, 3.0])
    a0 = bayes_linear_attribution(mean, cov, x, z, 0)
    a1 = bayes_linear_attribution(mean, cov, x, z, 1)
    assert a0.mean == pytest.approx(2.0 * 1.5) and a0.variance == pytest.approx(0.5 * 1.5**2)
    assert a1.mean == pytest.approx(-3.0 * -2.0) and a1.variance == pytest.approx(0.25 * 4.0)
    # completeness for the linear family: sum of means equals w . (x - z)
    assert a0.mean + a1.mean == pytest.approx(mean @ (x - z))


def test_linear_attribution_variance_scales_with_gap_squared():
    mean = np.array([1.0])
    cov = np.array([[0.7]])
    base = bayes_linear_attribution(mean, cov, [1.0], [0.0], 0).variance
    scaled = bayes_linear_attribution(mean, cov, [3.0], [0.0], 0).variance
    assert scaled == pytest.approx(9.0 * base, rel=1e-12)
