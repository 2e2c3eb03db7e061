import json

import numpy as np
import pytest
from scipy.stats import kstest, kstwobign, norm

from hpcauchy._rng import substream
from hpcauchy.errors import AccuracyError, DomainError, FitError, SamplerQualityError
from hpcauchy.experiments import generator_values, resolve
from hpcauchy.hp_core import AtomicMeasure, Periodic, ProcessTruncated, QuasiPeriodic, Represented
from hpcauchy.point_process import sample_poisson
from hpcauchy.stats import (
    CauchyParams,
    EmpiricalDistribution,
    GofReport,
    boole_verify,
    cauchy_samples,
    estimate_gamma_height,
    estimate_gamma_inverse,
    fit_cauchy_charfn,
    fit_cauchy_quantile,
    histogram_rows,
    kolmogorov_sf,
    ks_test_cauchy,
    normal_pv,
    predicted_gamma,
    pv_integral,
    shift_distribution,
    star_modulus,
    write_histogram_csv,
)
from hpcauchy.stieltjes import boundary_value


def _periodic(N, seed=0):
    return shift_distribution(Periodic().boundary, 1000.0, N, substream(30, seed))


# ------------------------------------------------------------ sampling


def test_empirical_cdf_properties():
    d = EmpiricalDistribution(np.array([3.0, 1.0, 2.0, 2.0]))
    xs = np.linspace(0, 4, 41)
    F = d.cdf(xs)
    assert F[0] == 0 and F[-1] == 1 and np.all(np.diff(F) >= 0)
    assert d.cdf(2.0) == 0.75  # right-continuous at the double point
    with pytest.raises(DomainError):
        EmpiricalDistribution(np.array([1j])).cdf(0.0)


def test_periodic_shift_distribution_ks():
    N = 20_000
    d = _periodic(N)
    assert ks_test_cauchy(d, 1j * np.pi).ks < 1.63 / np.sqrt(N)


def test_periodic_is_cot_of_uniform():
    # direct CDF transform: F(x) = -pi cot(pi x) with U uniform on (0, 1)
    d = _periodic(5000, seed=1)
    u = np.mod(np.arctan2(-np.pi, d.samples) / np.pi, 1.0)
    assert kstest(u, "uniform").pvalue > 0.001


def test_constant_is_point_mass():
    d = shift_distribution(lambda x: np.full(x.shape, 2.5), 10.0, 500, substream(30, 2))
    assert np.all(d.samples == 2.5)
    q = fit_cauchy_quantile(d)
    assert (q.re_gamma, q.im_gamma) == (2.5, 0.0)
    assert estimate_gamma_inverse(d) == pytest.approx(2.5 + 0j, abs=1e-12)


def test_quasiperiodic_width_three():
    F = QuasiPeriodic([1.0, 2.0], [1.0, np.sqrt(2)], [0.0, 0.0])
    d = shift_distribution(F.boundary, 10_000.0, 100_000, substream(30, 3))
    q = fit_cauchy_quantile(d)
    assert abs(q.im_gamma - 3) < 0.1 and abs(q.re_gamma) < 0.05
    h = estimate_gamma_height(F, 0.3, [1.0, 5.0, 20.0])
    assert abs(h.gamma - 3j) < 1e-8
    assert predicted_gamma("quasiperiodic", alpha=[1, 2], beta=[1, np.sqrt(2)]) == 3j


def test_rejections_are_redrawn_and_counted():
    calls = {"n": 0}

    def sampler(x):
        calls["n"] += 1
        out = np.ones_like(x)
        if calls["n"] == 1:
            out[:3] = np.nan
        return out

    d = shift_distribution(sampler, 1.0, 10_000, substream(30, 4))
    assert d.rejections == 3 and np.all(d.samples == 1)
    with pytest.raises(SamplerQualityError):
        shift_distribution(lambda x: np.full(x.shape, np.nan), 1.0, 100, substream(30, 5))


def test_stratified_positions():
    seen = []

    def sampler(x):
        seen.append(x.copy())
        return x

    shift_distribution(sampler, 10.0, 100, substream(30, 6), stratified=True)
    cells = np.floor((seen[0] + 5.0) / 0.1)
    assert np.array_equal(cells, np.arange(100))


# -------------------------------------------------------------- fitting


def test_quantile_fit_examples():
    q = fit_cauchy_quantile(cauchy_samples(3 + 2j, 100_000, substream(31, 0)))
    assert abs(q.re_gamma - 3) < 0.05 and abs(q.im_gamma - 2) < 0.05
    q = fit_cauchy_quantile(_periodic(100_000, seed=7))
    assert abs(q.re_gamma) < 0.05 and abs(q.im_gamma - np.pi) < 0.05
    with pytest.raises(FitError):
        fit_cauchy_quantile(np.zeros(50))


def test_charfn_fit_examples():
    c = fit_cauchy_charfn(EmpiricalDistribution(cauchy_samples(1j * np.pi, 100_000, substream(31, 1))))
    assert c.im_gamma == pytest.approx(np.pi, rel=0.02)
    c = fit_cauchy_charfn(np.full(2000, 5.0))
    assert c.re_gamma == pytest.approx(5.0) and c.im_gamma == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(FitError):
        fit_cauchy_charfn(np.zeros(500))


def test_charfn_below_noise_floor():
    with pytest.raises(FitError):
        fit_cauchy_charfn(cauchy_samples(300j, 1000, substream(31, 2)), t_grid=[1.0])


def test_charfn_on_poisson_shift_samples():
    # 1000 realizations x 100 shifts; shifts of one realization are correlated
    vals, _ = generator_values(resolve("cauchy", {"generator": "poisson", "samples": 100_000}))
    c = fit_cauchy_charfn(vals)
    assert abs(c.gamma - 1j * np.pi) < 0.05 * np.pi


@pytest.mark.parametrize("gamma", [0 + 1j, np.pi * 1j, 2 + 0.5j, -1.8 + 3.1j])
def test_quantile_and_charfn_agree(gamma):
    d = EmpiricalDistribution(cauchy_samples(gamma, 20_000, substream(32, int(abs(gamma) * 100))))
    q, c = fit_cauchy_quantile(d), fit_cauchy_charfn(d)
    assert abs(q.re_gamma - c.re_gamma) <= 3 * np.hypot(q.se_re, c.se_re)
    assert abs(q.im_gamma - c.im_gamma) <= 3 * np.hypot(q.se_im, c.se_im)


def test_cauchy_params():
    p = CauchyParams(1.0, 2.0, route="quantile")
    assert p.gamma == 1 + 2j and p.cdf(1.0) == 0.5
    assert json.loads(p.to_json())["im_gamma"] == 2.0
    with pytest.raises(DomainError):
        CauchyParams(0.0, -1.0)


# -------------------------------------------------------------------- KS


def test_kolmogorov_sf_matches_reference():
    for lam in (0.2, 0.5, 0.8, 1.0, 1.36, 2.0, 3.0):
        assert kolmogorov_sf(lam) == pytest.approx(kstwobign.sf(lam), abs=1e-12)
    assert kolmogorov_sf(0.0) == 1.0


def test_ks_null_calibration():
    ps = [ks_test_cauchy(cauchy_samples(1j, 2000, substream(33, i)), 1j).p_value for i in range(200)]
    assert kstest(ps, "uniform").statistic < 0.1


def test_ks_power_against_gaussian():
    r = ks_test_cauchy(substream(34, 0).standard_normal(10_000), CauchyParams(0.0, 1.0))
    assert r.p_value < 1e-6


def test_ks_periodic_passes():
    r = ks_test_cauchy(_periodic(10_000, seed=8), 1j * np.pi)
    assert isinstance(r, GofReport) and r.p_value > 0.01 and 0 <= r.ks <= 1
    assert json.loads(r.to_json())["n"] == 10_000


def test_ks_degenerate_law_rejected():
    with pytest.raises(FitError):
        ks_test_cauchy(np.zeros(100), 1.0 + 0j)


# ------------------------------------------------------ inverse estimator


def test_inverse_point_mass_exact():
    for c in (-3.0, 0.0, 0.7, 12.5):
        assert estimate_gamma_inverse(np.full(1000, c)) == pytest.approx(c + 0j, abs=1e-12)


def test_inverse_synthetic_cauchy():
    g = estimate_gamma_inverse(cauchy_samples(1j * np.pi, 100_000, substream(35, 0)))
    assert abs(g - 1j * np.pi) < 0.05


def test_inverse_is_shift_equivariant_for_cauchy_data():
    # exact for point masses; for Cauchy samples only up to Monte-Carlo error
    v = cauchy_samples(1j * np.pi, 100_000, substream(35, 1))
    for c in (-2.0, 1.0, 5.0):
        d = estimate_gamma_inverse(v + c) - estimate_gamma_inverse(v)
        assert abs(d - c) < 0.1


def test_inverse_instability_guard():
    with pytest.raises(AccuracyError):
        estimate_gamma_inverse(np.array([1e13, -1e13]))


def _inverse_se(v):
    r = 1.0 / (v + 1j)
    m = r.mean()
    return np.hypot(r.real.std(), r.imag.std()) / np.sqrt(v.size) / abs(m) ** 2


def test_inverse_agrees_with_quantile_on_gue_traces():
    vals, _ = generator_values(resolve("cauchy", {"generator": "gue", "n": 200, "samples": 2000, "e0": 0.5}))
    q = fit_cauchy_quantile(vals)
    inv = estimate_gamma_inverse(vals)
    tol = 3 * np.hypot(np.hypot(q.se_re, q.se_im), _inverse_se(vals))
    assert abs(inv - q.gamma) <= tol


# -------------------------------------------------------- height estimator


def test_height_periodic():
    h = estimate_gamma_height(Periodic(), 0.3, [1.0, 3.0, 10.0])
    assert abs(h.gamma - 1j * np.pi) < 1e-8 and h.x_gap < 1e-8
    assert h.values[0] == pytest.approx(-np.pi / np.tan(np.pi * (0.3 + 1j)))


def test_height_single_atom_decays():
    h = estimate_gamma_height(Represented(AtomicMeasure([0.0])), 0.0, [1.0, 10.0, 100.0])
    assert np.all(np.diff(np.abs(h.values)) < 0) and abs(h.gamma) == pytest.approx(0.01)


def test_height_poisson():
    s = sample_poisson(10_000.0, 1.0, substream(36, 0))
    h = estimate_gamma_height(ProcessTruncated(s), 0.0, [10.0, 100.0, s.W / 4])
    assert abs(h.gamma - 1j * np.pi) < 0.1


def test_height_grid_validation():
    with pytest.raises(DomainError):
        estimate_gamma_height(Periodic(), 0.0, [2.0, 1.0])


# ------------------------------------------------------------------ Boole


def test_boole_examples():
    r = boole_verify(AtomicMeasure([0.0], [1.0]), 1.0)
    assert r.level_set_measure == pytest.approx(1.0, abs=1e-12) and r.roots[0] == pytest.approx(-1.0)
    r = boole_verify(AtomicMeasure([-1.0, 1.0], [1.0, 1.0]), 2.0)
    assert r.exact == 1.0 and r.relative_error < 1e-9


def test_boole_random_suite():
    worst = 0.0
    for k in range(20):
        rng = substream(37, k)
        mu = AtomicMeasure(rng.uniform(-50, 50, 50), 10 * (1 - rng.random(50)))
        for t in (0.1, 1.0, 10.0):
            worst = max(worst, boole_verify(mu, t).relative_error)
    assert worst < 1e-9


def test_boole_guards():
    with pytest.raises(DomainError):
        boole_verify(AtomicMeasure(), 1.0)
    with pytest.raises(DomainError):
        boole_verify(AtomicMeasure([0.0]), 0.0)


# ------------------------------------------------------------- *-modulus


class _Constant:
    def __call__(self, rng):
        return lambda xs: np.full(np.shape(xs), 3.0)


class _Poisson:
    def __call__(self, rng):
        s = sample_poisson(40.0, 1.0, rng)
        return lambda xs: np.array([boundary_value(s, x, reference="limit") for x in xs])


def test_star_modulus_trivial_cases():
    k, skipped = star_modulus(_Constant(), 0.0, [0.0, 1.0], 1000)
    assert np.all(k == 0) and skipped == 0
    k, _ = star_modulus(_Poisson(), 0.0, [0.0, 0.5], 1000, seed=1)
    assert k[0] == 0 and 0 < k[1] <= 2
    with pytest.raises(DomainError):
        star_modulus(_Constant(), 0.0, [1.0], 10)


def test_star_modulus_worker_independent():
    a, _ = star_modulus(_Poisson(), 0.0, [1.0, 0.1], 1000, seed=2, workers=1)
    b, _ = star_modulus(_Poisson(), 0.0, [1.0, 0.1], 1000, seed=2, workers=2)
    assert np.array_equal(a, b)


# ------------------------------------------------------------ predictions


def test_pv_against_dawson_closed_form():
    for x in (0.0, 0.5, 1.3, -2.0):
        v, err = pv_integral(norm.pdf, x)
        assert v == pytest.approx(normal_pv(x), abs=1e-10) and err < 1e-8


def test_predicted_gamma_table():
    assert predicted_gamma("periodic") == 1j * np.pi
    assert predicted_gamma("poisson", rho=2.0) == 2j * np.pi
    assert predicted_gamma("gue", E0=0.0) == 1j * np.pi
    assert predicted_gamma("gue", E0=1.0).real == pytest.approx(-np.pi / np.sqrt(3))
    g = predicted_gamma("diagonal", E0=0.5)
    assert g.real == pytest.approx(normal_pv(0.5) / norm.pdf(0.5), abs=1e-9) and g.imag == np.pi
    assert predicted_gamma("diagonal", E0=0.0).real == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        predicted_gamma("unknown")


# ---------------------------------------------------------------- export


def test_histogram_csv(tmp_path):
    edges = np.array([-1.0, 0.0, 1.0])
    assert histogram_rows([-0.5, 0.5, 0.7, 3.0], edges) == [(-1.0, 0.0, 1), (0.0, 1.0, 2)]
    write_histogram_csv(tmp_path / "h.csv", [-0.5], edges)
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == "bin_left,bin_right,count"
