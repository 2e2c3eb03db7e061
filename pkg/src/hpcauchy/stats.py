"""Cauchy-law estimation and testing for boundary values of HP functions.

Three routes to the baricenter ``Gamma`` are provided: sample quantiles, the
empirical characteristic function, and the inverse-mean identity
``Gamma = 1/E[1/(F+i)] - i``.  A fourth, ``estimate_gamma_height``, evaluates a
single function far above the axis.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special, stats

from ._rng import as_generator, fsum_complex, map_substreams
from .errors import AccuracyError, ConvergenceError, DomainError, FitError, SamplerQualityError
from .hp_core import AtomicMeasure, evaluate
from .rmt import semicircle_density

MAX_REJECTION_RATE = 1e-3
KOLMOGOROV_TERMS = 100


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sample of boundary values with a sorted cache for CDF queries."""

    samples: np.ndarray
    rejections: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.samples).ravel()
        if not np.iscomplexobj(v):
            v = v.astype(float)
        v.flags.writeable = False
        object.__setattr__(self, "samples", v)
        srt = np.sort(v.real) if not np.iscomplexobj(v) else None
        object.__setattr__(self, "_sorted", srt)

    def __len__(self):
        return self.samples.size

    @property
    def sorted(self):
        if self._sorted is None:
            raise DomainError("CDF queries need real samples")
        return self._sorted

    def cdf(self, x):
        s = self.sorted
        r = np.searchsorted(s, np.asarray(x, dtype=float), side="right") / s.size
        return float(r) if np.ndim(r) == 0 else r

    def real(self):
        if np.iscomplexobj(self.samples):
            raise DomainError("estimator needs real boundary values")
        return self.samples


@dataclass(frozen=True)
class CauchyParams:
    re_gamma: float
    im_gamma: float
    se_re: float | None = None
    se_im: float | None = None
    route: str = ""

    def __post_init__(self):
        if self.im_gamma < 0:
            raise DomainError("Im Gamma must be nonnegative")

    @property
    def gamma(self):
        return complex(self.re_gamma, self.im_gamma)

    def cdf(self, x):
        return 0.5 + np.arctan((np.asarray(x, dtype=float) - self.re_gamma) / self.im_gamma) / np.pi

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class GofReport:
    ks: float
    p_value: float
    n: int
    params: CauchyParams
    route: str = "ks"

    def to_dict(self):
        d = asdict(self)
        d["params"] = self.params.to_dict()
        return d

    def to_json(self):
        return json.dumps(self.to_dict())


# ------------------------------------------------------------- sampling


def shift_distribution(sampler, L, N, rng=None, stratified=False, max_rejection=MAX_REJECTION_RATE):
    """Boundary values at uniform positions in ``[-L/2, L/2]``.

    ``sampler`` maps an array of positions to boundary values, with NaN where
    the position is rejected (too close to a pole); rejected positions are
    redrawn.  With ``stratified=True`` the ``k``-th position is uniform in the
    ``k``-th of ``N`` equal cells.
    """
    if not (L > 0 and N > 0):
        raise DomainError("L and N must be positive")
    rng = as_generator(rng)
    if stratified:
        x = -L / 2 + L * (np.arange(N) + rng.random(N)) / N
    else:
        x = rng.uniform(-L / 2, L / 2, N)
    vals = np.asarray(sampler(x), dtype=float)
    rejected = 0
    bad = ~np.isfinite(vals)
    while np.any(bad):
        k = int(bad.sum())
        rejected += k
        if rejected > max_rejection * N:
            raise SamplerQualityError(f"{rejected} rejections out of {N} draws")
        if stratified:
            i = np.flatnonzero(bad)
            x[i] = -L / 2 + L * (i + rng.random(k)) / N
        else:
            x[bad] = rng.uniform(-L / 2, L / 2, k)
        vals[bad] = np.asarray(sampler(x[bad]), dtype=float)
        bad = ~np.isfinite(vals)
    return EmpiricalDistribution(vals, rejected, {"L": L, "N": N, "stratified": stratified})


def cauchy_samples(gamma, N, rng=None):
    """Inverse-CDF draws from the Cauchy law with baricenter ``gamma``."""
    rng = as_generator(rng)
    g = complex(gamma)
    return g.real + g.imag * np.tan(np.pi * (rng.random(N) - 0.5))


# ------------------------------------------------------------ estimators


def fit_cauchy_quantile(d):
    """Median and half inter-quartile range, with asymptotic standard errors."""
    v = d.real() if isinstance(d, EmpiricalDistribution) else np.asarray(d, dtype=float)
    if v.size < 100:
        raise FitError("quantile fit needs at least 100 samples")
    q25, med, q75 = np.quantile(v, [0.25, 0.5, 0.75])
    im = 0.5 * (q75 - q25)
    se = np.pi * im / (2 * np.sqrt(v.size))
    return CauchyParams(float(med), float(im), float(se), float(se), "quantile")


DEFAULT_T_GRID = np.round(np.arange(1, 11) * 0.1, 12)


def fit_cauchy_charfn(d, t_grid=DEFAULT_T_GRID):
    """Least-squares fit of ``log phi(t) = i t Re Gamma - t Im Gamma``.

    Both lines pass through the origin.  The phase is unwrapped starting from
    ``t = 0``.  Grid points where ``|phi|`` is below ``3/sqrt(N)`` are dropped.
    Standard errors come from the influence function of each sample.
    """
    v = d.real() if isinstance(d, EmpiricalDistribution) else np.asarray(d, dtype=float)
    N = v.size
    if N < 1000:
        raise FitError("characteristic-function fit needs at least 1000 samples")
    t = np.sort(np.asarray(t_grid, dtype=float))
    if np.any(t <= 0):
        raise FitError("t grid must be positive")
    E = np.exp(1j * np.outer(v, t))
    phi = E.mean(axis=0)
    ok = np.abs(phi) > 3 / np.sqrt(N)
    # keep the leading run only, so the phase can be unwrapped from t = 0
    stop = int(np.argmin(ok)) if not ok.all() else t.size
    if stop == 0:
        raise FitError("empirical characteristic function is below the noise floor")
    t, phi, E = t[:stop], phi[:stop], E[:, :stop]
    logmod = np.log(np.abs(phi))
    arg = np.unwrap(np.concatenate(([0.0], np.angle(phi))))[1:]
    tt = float(t @ t)
    im = -float(t @ logmod) / tt
    re = float(t @ arg) / tt
    infl = (E - phi) / phi
    se_im = float(np.std(infl.real @ t / tt) / np.sqrt(N))
    se_re = float(np.std(infl.imag @ t / tt) / np.sqrt(N))
    return CauchyParams(re, max(im, 0.0), se_re, se_im, "charfn")


def kolmogorov_sf(lam):
    """``P(K > lam)`` for the Kolmogorov distribution, 100-term series.

    The alternating series converges fast for ``lam >= 1``; below that the
    theta-function form of the CDF is used instead.
    """
    lam = float(lam)
    if lam <= 0:
        return 1.0
    k = np.arange(1, KOLMOGOROV_TERMS + 1)
    if lam >= 1.0:
        p = 2 * np.sum((-1.0) ** (k - 1) * np.exp(-2 * k**2 * lam**2))
    else:
        cdf = np.sqrt(2 * np.pi) / lam * np.sum(np.exp(-((2 * k - 1) ** 2) * np.pi**2 / (8 * lam**2)))
        p = 1 - cdf
    return float(min(max(p, 0.0), 1.0))


def ks_statistic(sorted_values, cdf):
    F = cdf(sorted_values)
    n = sorted_values.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_test_cauchy(d, params):
    """Exact KS distance to a Cauchy law and its asymptotic p-value."""
    if not isinstance(params, CauchyParams):
        g = complex(params)
        params = CauchyParams(g.real, g.imag)
    if not params.im_gamma > 0:
        raise FitError("KS test needs a nondegenerate Cauchy law")
    if not isinstance(d, EmpiricalDistribution):
        d = EmpiricalDistribution(d)
    D = ks_statistic(d.sorted, params.cdf)
    return GofReport(D, kolmogorov_sf(np.sqrt(len(d)) * D), len(d), params, params.route or "ks")


def estimate_gamma_inverse(d):
    """``{mean of 1/(F_k + i)}^{-1} - i`` with compensated summation."""
    v = d.real() if isinstance(d, EmpiricalDistribution) else np.asarray(d, dtype=float)
    if v.size == 0:
        raise FitError("no samples")
    m = fsum_complex(1.0 / (v + 1j)) / v.size
    if abs(m) < 1e-12:
        raise AccuracyError("mean of 1/(F+i) is too small to invert", abs(m))
    return 1.0 / m - 1j


@dataclass(frozen=True)
class HeightEstimate:
    eta: np.ndarray
    values: np.ndarray
    x: float
    x_check: float
    x_gap: float

    @property
    def gamma(self):
        return complex(self.values[-1])


def estimate_gamma_height(F, x, eta_grid, x_check=None):
    """``F(x + i eta)`` along an increasing grid; the last value estimates Gamma.

    ``F`` is an HP function or any callable ``z -> complex``.  The top of the
    grid is also evaluated at ``x_check`` (default ``x + 1``) and the gap
    between the two values is reported.
    """
    eta = np.asarray(eta_grid, dtype=float)
    if eta.size == 0 or np.any(eta <= 0) or np.any(np.diff(eta) <= 0):
        raise DomainError("eta grid must be positive and increasing")
    f = (lambda z: evaluate(F, z)) if hasattr(F, "_eval") else F
    vals = np.array([complex(f(complex(x, e))) for e in eta])
    xc = x + 1.0 if x_check is None else float(x_check)
    gap = abs(complex(f(complex(xc, eta[-1]))) - vals[-1])
    return HeightEstimate(eta, vals, float(x), xc, float(gap))


# ------------------------------------------------------------ Boole


@dataclass(frozen=True)
class BooleResult:
    level_set_measure: float
    exact: float
    relative_error: float
    roots: np.ndarray = field(repr=False)

    def to_dict(self):
        return {k: getattr(self, k) for k in ("level_set_measure", "exact", "relative_error")}


def boole_verify(mu, t, tol=1e-13, max_iter=200):
    """Lebesgue measure of ``{x : sum_j w_j/(u_j - x) > t}`` versus ``mu(R)/t``.

    Left of each atom ``u_k`` the function climbs to ``+inf``; the root of
    ``F = t`` just left of ``u_k`` is bracketed by the previous atom (or by
    ``u_1 - mu(R)/t`` for the first one) and found by bisection.
    """
    if not isinstance(mu, AtomicMeasure):
        mu = AtomicMeasure(*mu)
    if len(mu) == 0:
        raise DomainError("measure must be nonempty")
    if not t > 0:
        raise DomainError("t must be positive")
    u, w = mu.positions, mu.weights
    total = float(np.sum(w))

    def F(x):
        return (w / (u[None, :] - x[:, None])).sum(axis=1)

    hi = u.copy()
    lo = np.concatenate(([u[0] - total / t - 1.0], u[:-1]))
    if F(lo[:1])[0] > t:
        raise ConvergenceError("left bracket failed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)
        above = F(mid) > t
        hi = np.where(above & ~stuck, mid, hi)
        lo = np.where(~above & ~stuck, mid, lo)
        if np.all((hi - lo <= tol) | stuck):
            break
    else:
        raise ConvergenceError("bisection did not reach the requested tolerance")
    roots = 0.5 * (lo + hi)
    if np.any(roots <= np.concatenate(([-np.inf], u[:-1]))) or np.any(roots >= u):
        raise ConvergenceError("root left its bracket; atoms may need merging")
    meas = math.fsum(u - roots)
    exact = total / t
    return BooleResult(meas, exact, abs(meas - exact) / exact, roots)


# --------------------------------------------------------- *-continuity


def _kappa_worker(realize, x, deltas, rng):
    f = realize(rng)
    pts = np.concatenate(([x], x + deltas))
    v = np.asarray(f(pts), dtype=float)
    r = 1.0 / (v + 1j)
    return np.abs(r[1:] - r[0])


def star_modulus(realize, x, deltas, N, seed=0, workers=1):
    """Monte-Carlo estimate of ``E |1/(F(x+d)+i) - 1/(F(x)+i)|`` per ``d``.

    ``realize(rng)`` returns a boundary-value function for one realization.
    Realizations whose values are not finite are skipped and counted.
    """
    if N < 1000:
        raise DomainError("star_modulus needs at least 1000 realizations")
    deltas = np.asarray(deltas, dtype=float)
    rows = np.array(map_substreams(_KappaTask(realize, x, deltas), seed, N, workers))
    ok = np.all(np.isfinite(rows), axis=1)
    return np.clip(rows[ok].mean(axis=0), 0.0, 2.0), int(np.sum(~ok))


class _KappaTask:
    def __init__(self, realize, x, deltas):
        self.realize, self.x, self.deltas = realize, x, deltas

    def __call__(self, rng):
        return _kappa_worker(self.realize, self.x, self.deltas, rng)


# --------------------------------------------------------- predictions


def pv_integral(pdf, x, h0=0.5, levels=6):
    """``PV int pdf(v)/(v - x) dv`` by symmetric exclusion and Richardson.

    With the interval ``(x-h, x+h)`` removed the error is an odd series in
    ``h``; halving ``h`` and eliminating ``h, h^3, h^5, ...`` gives the
    extrapolated value.  Returns ``(value, error_estimate)``.
    """

    def excluded(h):
        g = lambda s: (pdf(x + s) - pdf(x - s)) / s
        val, _ = integrate.quad(g, h, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
        return val

    hs = h0 / 2.0 ** np.arange(levels)
    T = [np.array([excluded(h) for h in hs])]
    for k in range(1, levels):
        p = 2 * k - 1
        prev = T[-1]
        T.append((2.0**p * prev[1:] - prev[:-1]) / (2.0**p - 1))
    best = float(T[-1][0])
    err = float(abs(T[-1][0] - T[-2][-1]))
    return best, err


def predicted_gamma(generator, **p):
    """Baricenter predicted for each generator.

    ``poisson`` takes ``rho``; ``quasiperiodic`` takes ``alpha``, ``beta`` and
    ``theta``; ``gue`` takes ``E0``; ``diagonal`` takes ``E0`` and an optional
    frozen ``density`` (standard normal by default).
    """
    if generator in ("periodic", "sine-kernel"):
        return complex(0, np.pi)
    if generator == "poisson":
        return complex(0, np.pi * p.get("rho", 1.0))
    if generator == "quasiperiodic":
        al = np.asarray(p["alpha"], dtype=float)
        be = np.asarray(p["beta"], dtype=float)
        th = np.asarray(p.get("theta", np.zeros_like(al)), dtype=float)
        im = float(np.sum(al[be > 0]))
        re = float(-np.sum(al[be == 0] / np.tan(th[be == 0]))) if np.any(be == 0) else 0.0
        return complex(re, im)
    if generator == "gue":
        E0 = p.get("E0", 0.0)
        return complex(-E0 / (2 * semicircle_density(E0)), np.pi)
    if generator == "diagonal":
        E0 = p.get("E0", 0.0)
        dens = p.get("density")
        if dens is None:
            dens = stats.norm()
        pv, _ = pv_integral(dens.pdf, E0)
        return complex(pv / dens.pdf(E0), np.pi)
    raise DomainError(f"no prediction for generator {generator!r}")


def normal_pv(x):
    """Closed form ``PV int phi(v)/(v-x) dv = -sqrt(2) D(x/sqrt 2)`` (Dawson ``D``)."""
    return -np.sqrt(2.0) * special.dawsn(np.asarray(x) / np.sqrt(2.0))


# ------------------------------------------------------------ exports


def histogram_rows(values, edges):
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=np.asarray(edges, dtype=float))
    return [(float(a), float(b), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]


def write_histogram_csv(path, values, edges):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_left", "bin_right", "count"])
        for a, b, c in histogram_rows(values, edges):
            w.writerow([repr(a), repr(b), c])
