"""Experiment families run by the command line and the acceptance suite.

Every experiment takes a flat configuration dict, merged over its defaults,
and returns an :class:`ExperimentResult`.  All randomness comes from
per-index substreams of ``seed``, so results depend only on the config.
Acceptance thresholds are config keys, never constants in the logic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import scipy.stats

from ._rng import map_substreams, substream
from .errors import DomainError, PoleError
from .hp_core import AtomicMeasure, DiskHP, Periodic, ProcessTruncated, QuasiPeriodic
from .metrics import (
    flat_distance,
    gbound_check,
    normalized_wasserstein,
    random_circle_measure,
    variational_distance,
    wasserstein_circle,
)
from .point_process import (
    nearest_neighbor_gaps,
    number_variance_from_samples,
    sample_poisson,
    sample_sine_kernel,
)
from .rmt import (
    check_bulk_energy,
    microscopic_rescale,
    sample_diagonal_rescaled,
    sample_gue_spectrum,
    unfolded_bulk_gaps,
)
from .stats import (
    EmpiricalDistribution,
    boole_verify,
    estimate_gamma_height,
    estimate_gamma_inverse,
    fit_cauchy_charfn,
    fit_cauchy_quantile,
    ks_test_cauchy,
    predicted_gamma,
    shift_distribution,
    star_modulus,
)
from .stieltjes import POLE_CUTOFF, boundary_value, shift_covariance_check, shift_sample

GENERATORS = ("periodic", "quasiperiodic", "poisson", "sine-kernel", "gue", "diagonal")

_HIST = {"hist_lo": -20.0, "hist_hi": 20.0, "hist_bins": 80}

_CAUCHY_BY_GENERATOR = {
    "periodic": {"samples": 100_000, "L": 1000.0, "tol_re": 0.05, "tol_im": 0.05, "ks_max": 1.0, "p_min": 0.01},
    "quasiperiodic": {"samples": 100_000, "L": 10_000.0, "tol_re": 0.05, "tol_im": 0.1, "ks_max": 1.0, "p_min": 0.01},
    "poisson": {"samples": 10_000, "W": 1000.0, "tol_re": 0.1, "tol_im": 0.1, "ks_max": 0.02, "p_min": 0.0},
    "sine-kernel": {"samples": 10_000, "W": 250.0, "tol_re": 0.1, "tol_im": 0.1, "ks_max": 0.03, "p_min": 0.0},
    "gue": {"samples": 5000, "n": 500, "tol_re": 0.1, "tol_im": 0.1, "ks_max": 0.03, "p_min": 0.0},
    "diagonal": {"samples": 10_000, "n": 2000, "tol_re": 0.1, "tol_im": 0.1, "ks_max": 1.0, "p_min": 0.0},
}

DEFAULTS = {
    "boole": {"seed": 7, "atoms": 50, "t": [0.1, 1.0, 10.0], "seeds": 20, "span": 50.0, "max_weight": 10.0,
              "rel_tol": 1e-9},
    "cauchy": {"seed": 7, "generator": "periodic", "samples": None, "workers": 1, "W": None, "L": None,
               "rho": 1.0, "h": 0.05, "n": None, "e0": 0.0, "jitter": 0.01, "shifts": 100,
               "alpha": [1.0, 2.0], "beta": [1.0, math.sqrt(2.0)], "theta": [0.0, 0.0],
               "tol_re": None, "tol_im": None, "ks_max": None, "p_min": None, **_HIST},
    "number-variance": {"seed": 7, "process": "sine-kernel", "samples": 1000, "W": 250.0, "h": 0.05, "rho": 1.0,
                        "x_min": 10.0, "x_max": 500.0, "x_points": 12, "anchors": "sliding", "anchor_step": 1.0,
                        "workers": 1,
                        "slope_rel_tol": 0.15, "var_rel_tol": 0.15},
    "gamma": {"seed": 7, "route": "quantile", "generator": "periodic", "samples": None, "workers": 1, "W": None,
              "L": None, "rho": 1.0, "h": 0.05, "n": None, "e0": 0.0, "jitter": 0.01, "shifts": 100,
              "alpha": [1.0, 2.0], "beta": [1.0, math.sqrt(2.0)], "theta": [0.0, 0.0],
              "x": 0.3, "eta_max": None, "eta_points": 8, "tol": 0.1, **_HIST},
    "metrics-sweep": {"seed": 7, "pairs": 1000, "max_atoms": 8, "w_max": 0.9, "slack": 1e-9},
    "shift-covariance": {"seed": 7, "samples": 100, "a": 5.0, "z_re": 0.0, "z_im": 1.0,
                         "windows": [250.0, 500.0, 1000.0], "max_discrepancy": 0.1},
    "star-modulus": {"seed": 7, "samples": 1000, "W": 200.0, "x": 0.0, "deltas": [1.0, 0.3, 0.1, 0.03],
                     "workers": 1},
}

DESCRIPTIONS = {
    "boole": "level-set measure of a finite Stieltjes transform versus mu(R)/t",
    "cauchy": "boundary-value law of a generator versus its predicted Cauchy law",
    "number-variance": "variance of the point count versus interval length, with log fit",
    "gamma": "baricenter by one route: quantile, charfn, inverse or height",
    "metrics-sweep": "random checks of the disk bound and of the circle distances",
    "shift-covariance": "window-shift discrepancy of Poisson transforms under n-doubling",
    "star-modulus": "Monte-Carlo *-continuity modulus of Poisson boundary values",
}


@dataclass
class ExperimentResult:
    summary: dict
    passed: bool
    values: np.ndarray | None = None
    edges: np.ndarray | None = None
    sample_lines: list = field(default_factory=list)


def resolve(name, overrides):
    """Defaults merged with ``overrides``; unknown keys are refused."""
    if name not in DEFAULTS:
        raise DomainError(f"unknown experiment {name!r}")
    cfg = dict(DEFAULTS[name])
    bad = sorted(set(overrides) - set(cfg))
    if bad:
        raise DomainError(f"unknown config keys for {name}: {', '.join(bad)}")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if name in ("cauchy", "gamma"):
        gen = cfg["generator"]
        if gen not in GENERATORS:
            raise DomainError(f"unknown generator {gen!r}")
        for k, v in _CAUCHY_BY_GENERATOR[gen].items():
            if k in cfg and cfg[k] is None:
                cfg[k] = v
    return cfg


def run(name, overrides=None):
    cfg = resolve(name, overrides or {})
    return _RUNNERS[name](cfg), cfg


# ------------------------------------------------------- boundary samplers


def _centred_value(s, x, n):
    """``F(x + i0)`` from the window of half-width ``n`` centred at ``x``."""
    try:
        return boundary_value(shift_sample(s, x), 0.0, n, reference="limit")
    except PoleError:
        return np.nan


def _process_values(kind, W, rho, h, m, rng):
    """``m`` shift samples of one realization on ``[-W, W]``."""
    if kind == "poisson":
        s = sample_poisson(W, rho, rng)
    else:
        s = sample_sine_kernel(W, h, rng)
    n = s.W / 2
    sampler = lambda xs: np.array([_centred_value(s, x, n) for x in xs])
    d = shift_distribution(sampler, s.W, m, rng)
    return d.samples, d.rejections


def _ensemble_value(kind, n, E0, jitter, rng):
    """Rescaled trace ``sum_j 1/(p_j - x)`` at a jittered ``x`` near 0."""
    if kind == "gue":
        pts = microscopic_rescale(sample_gue_spectrum(n, rng), E0).points
    else:
        pts = sample_diagonal_rescaled(n, scipy.stats.norm(), E0, rng).points
    rejected = 0
    while True:
        x = jitter * (rng.random() - 0.5)
        if np.min(np.abs(pts - x)) >= POLE_CUTOFF:
            break
        rejected += 1
    return math.fsum(1.0 / (pts - x)), rejected


def generator_values(cfg):
    """Boundary values for ``cfg['generator']``; returns ``(values, rejections)``."""
    gen, N, seed = cfg["generator"], int(cfg["samples"]), cfg["seed"]
    if gen == "periodic":
        d = shift_distribution(Periodic().boundary, cfg["L"], N, substream(seed, 0))
        return d.samples, d.rejections
    if gen == "quasiperiodic":
        F = QuasiPeriodic(cfg["alpha"], cfg["beta"], cfg["theta"])
        d = shift_distribution(F.boundary, cfg["L"], N, substream(seed, 0))
        return d.samples, d.rejections
    if gen in ("poisson", "sine-kernel"):
        m = int(cfg["shifts"])
        if N % m:
            raise DomainError("samples must be a multiple of shifts")
        W = cfg["W"]
        work = partial(_process_values, gen, W, cfg["rho"] if gen == "poisson" else 1.0, cfg["h"], m)
        parts = map_substreams(work, seed, N // m, cfg["workers"])
        return np.concatenate([p[0] for p in parts]), int(sum(p[1] for p in parts))
    check_bulk_energy(cfg["e0"])
    work = partial(_ensemble_value, gen, int(cfg["n"]), float(cfg["e0"]), float(cfg["jitter"]))
    parts = map_substreams(work, seed, N, cfg["workers"])
    return np.array([p[0] for p in parts]), int(sum(p[1] for p in parts))


def predicted_for(cfg):
    gen = cfg["generator"]
    if gen == "quasiperiodic":
        return predicted_gamma(gen, alpha=cfg["alpha"], beta=cfg["beta"], theta=cfg["theta"])
    if gen == "poisson":
        return predicted_gamma(gen, rho=cfg["rho"])
    if gen in ("gue", "diagonal"):
        return predicted_gamma(gen, E0=cfg["e0"])
    return predicted_gamma(gen)


def _edges(cfg):
    return np.linspace(cfg["hist_lo"], cfg["hist_hi"], int(cfg["hist_bins"]) + 1)


def _params_dict(p):
    return {"re_gamma": p.re_gamma, "im_gamma": p.im_gamma, "se_re": p.se_re, "se_im": p.se_im}


def _run_cauchy(cfg):
    vals, rejected = generator_values(cfg)
    d = EmpiricalDistribution(vals)
    pred = predicted_for(cfg)
    q = fit_cauchy_quantile(d)
    # the characteristic-function fit needs 1000 samples; smaller runs skip it
    c = fit_cauchy_charfn(d) if len(d) >= 1000 else None
    inv = estimate_gamma_inverse(d)
    ks = ks_test_cauchy(d, pred)
    checks = {
        "re": abs(q.re_gamma - pred.real) <= cfg["tol_re"],
        "im": abs(q.im_gamma - pred.imag) <= cfg["tol_im"],
        "ks": ks.ks < cfg["ks_max"],
        "p": ks.p_value > cfg["p_min"] if cfg["p_min"] > 0 else True,
    }
    summary = {
        "generator": cfg["generator"],
        "samples": len(d),
        "rejections": rejected,
        "rejection_rate": rejected / (len(d) + rejected),
        "predicted": [pred.real, pred.imag],
        "fit_quantile": _params_dict(q),
        "fit_charfn": _params_dict(c) if c is not None else None,
        "estimate_inverse": [inv.real, inv.imag],
        "ks": ks.ks,
        "p_value": ks.p_value,
        "checks": checks,
        "passed": all(checks.values()),
    }
    if cfg["generator"] in ("gue", "diagonal"):
        summary["jitter_width"] = cfg["jitter"]
    if cfg["generator"] == "gue":
        summary["scale_note"] = "GUE scaled to bulk support [-2, 2]"
    if cfg["generator"] in ("poisson", "sine-kernel"):
        summary["convention"] = "limit reference i*pi*rho, no real constant added"
    lines = [{"index": i, "value": float(v)} for i, v in enumerate(vals)]
    return ExperimentResult(summary, summary["passed"], vals, _edges(cfg), lines)


# ------------------------------------------------------------- others


def _run_boole(cfg):
    worst = 0.0
    rows = []
    for k in range(int(cfg["seeds"])):
        rng = substream(cfg["seed"], k)
        n = int(cfg["atoms"])
        # weights in (0, max_weight]
        mu = AtomicMeasure(rng.uniform(-cfg["span"], cfg["span"], n), cfg["max_weight"] * (1 - rng.random(n)))
        for t in cfg["t"]:
            r = boole_verify(mu, float(t))
            worst = max(worst, r.relative_error)
            rows.append({"seed_index": k, "t": float(t), **r.to_dict()})
    passed = worst < cfg["rel_tol"]
    summary = {"runs": len(rows), "max_relative_error": worst, "passed": passed}
    return ExperimentResult(summary, passed, sample_lines=rows)


def sine_or_poisson_samples(process, W, h, rho, count, seed, workers=1):
    if process == "sine-kernel":
        fn = partial(_sine_sample, W, h)
    elif process == "poisson":
        fn = partial(_poisson_sample, W, rho)
    else:
        raise DomainError(f"unknown process {process!r}")
    return map_substreams(fn, seed, count, workers)


def _sine_sample(W, h, rng):
    return sample_sine_kernel(W, h, rng)


def _poisson_sample(W, rho, rng):
    return sample_poisson(W, rho, rng)


def _run_number_variance(cfg):
    xs = np.geomspace(cfg["x_min"], cfg["x_max"], int(cfg["x_points"]))
    samples = sine_or_poisson_samples(
        cfg["process"], cfg["W"], cfg["h"], cfg["rho"], int(cfg["samples"]), cfg["seed"], cfg["workers"]
    )
    est = number_variance_from_samples(samples, xs, cfg["anchors"], cfg["anchor_step"])
    if cfg["process"] == "sine-kernel":
        target = 1 / np.pi**2
        err = abs(est.slope - target) / target
        passed = bool(err <= cfg["slope_rel_tol"])
        extra = {"target_slope": target, "slope_rel_error": err}
    else:
        rel = np.abs(est.variance - cfg["rho"] * xs) / (cfg["rho"] * xs)
        passed = bool(np.all(rel <= cfg["var_rel_tol"]))
        extra = {"max_variance_rel_error": float(rel.max())}
    summary = {"process": cfg["process"], **est.to_dict(), **extra, "passed": passed}
    return ExperimentResult(summary, passed)


def _run_gamma(cfg):
    gen, route = cfg["generator"], cfg["route"]
    pred = predicted_for(cfg)
    if route == "height":
        est, extra = _height_estimate(cfg)
    else:
        vals, _ = generator_values(cfg)
        d = EmpiricalDistribution(vals)
        if route == "quantile":
            est = fit_cauchy_quantile(d).gamma
        elif route == "charfn":
            est = fit_cauchy_charfn(d).gamma
        elif route == "inverse":
            est = estimate_gamma_inverse(d)
        else:
            raise DomainError(f"unknown route {route!r}")
        extra = {"samples": len(d)}
    ok = abs(est.real - pred.real) <= cfg["tol"] and abs(est.imag - pred.imag) <= cfg["tol"]
    summary = {"route": route, "generator": gen, "estimate": [est.real, est.imag],
               "predicted": [pred.real, pred.imag], **extra, "passed": bool(ok)}
    return ExperimentResult(summary, bool(ok))


def _height_estimate(cfg):
    gen = cfg["generator"]
    if gen == "periodic":
        F, top = Periodic(), cfg["eta_max"] or 10.0
    elif gen == "quasiperiodic":
        F, top = QuasiPeriodic(cfg["alpha"], cfg["beta"], cfg["theta"]), cfg["eta_max"] or 20.0
    elif gen in ("poisson", "sine-kernel"):
        W = cfg["W"] or (10_000.0 if gen == "poisson" else 250.0)
        rng = substream(cfg["seed"], 0)
        s = sample_poisson(W, cfg["rho"], rng) if gen == "poisson" else sample_sine_kernel(W, cfg["h"], rng)
        F, top = ProcessTruncated(s), cfg["eta_max"] or s.W / 4
    else:
        raise DomainError("height route supports periodic, quasiperiodic, poisson and sine-kernel")
    eta = np.geomspace(1.0, top, int(cfg["eta_points"]))
    h = estimate_gamma_height(F, cfg["x"], eta)
    return h.gamma, {"eta": h.eta.tolist(), "values": [[v.real, v.imag] for v in h.values], "x_gap": h.x_gap}


def _run_metrics_sweep(cfg):
    rng = substream(cfg["seed"], 0)
    fails = {"gbound": 0, "flat_le_tv": 0, "flat_le_w_plus_gap": 0, "triangle": 0}
    worst_ratio = 0.0
    for _ in range(int(cfg["pairs"])):
        k1, k2 = rng.integers(1, int(cfg["max_atoms"]) + 1, 2)
        s1, s2 = random_circle_measure(rng, k1), random_circle_measure(rng, k2)
        G1, G2 = DiskHP(s1, rng.normal()), DiskHP(s2, rng.normal())
        w = cfg["w_max"] * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        g = gbound_check(G1, G2, w)
        fails["gbound"] += not g.holds
        if g.rhs > 0:
            worst_ratio = max(worst_ratio, g.lhs / g.rhs)
        f = flat_distance(s1, s2)
        tv = variational_distance(s1, s2)
        fails["flat_le_tv"] += f > tv + cfg["slack"]
        m1, m2 = s1.total_mass, s2.total_mass
        bound = abs(m1 - m2) + min(m1, m2) * normalized_wasserstein(s1, s2)
        fails["flat_le_w_plus_gap"] += f > bound + cfg["slack"]
        t3 = random_circle_measure(rng, int(rng.integers(1, int(cfg["max_atoms"]) + 1)))
        p1, p2, p3 = s1.normalized(), s2.normalized(), t3.normalized()
        fails["triangle"] += wasserstein_circle(p1, p3) > (
            wasserstein_circle(p1, p2) + wasserstein_circle(p2, p3) + cfg["slack"]
        )
    passed = not any(fails.values())
    summary = {"pairs": int(cfg["pairs"]), "failures": fails, "max_lhs_over_rhs": worst_ratio, "passed": passed}
    return ExperimentResult(summary, passed)


def _covariance_row(a, z, windows, W, rng):
    s = sample_poisson(W, 1.0, rng)
    return [shift_covariance_check(s, a, z, n) for n in windows]


def _run_shift_covariance(cfg):
    windows = [float(v) for v in cfg["windows"]]
    a = float(cfg["a"])
    z = complex(cfg["z_re"], cfg["z_im"])
    W = max(windows) + abs(a)
    rows = np.array(map_substreams(partial(_covariance_row, a, z, windows, W), cfg["seed"], int(cfg["samples"])))
    med = np.median(rows, axis=0)
    decreasing = bool(np.all(np.diff(med) < 0))
    small = bool(med[-1] < cfg["max_discrepancy"])
    summary = {"windows": windows, "a": a, "z": [z.real, z.imag], "median_discrepancy": med.tolist(),
               "decreasing": decreasing, "passed": decreasing and small}
    return ExperimentResult(summary, decreasing and small)


class _PoissonBoundary:
    """Picklable realization of Poisson boundary values on a fixed window."""

    def __init__(self, W):
        self.W = W

    def __call__(self, rng):
        s = sample_poisson(self.W, 1.0, rng)

        def f(xs):
            out = []
            for x in xs:
                try:
                    out.append(boundary_value(s, x, s.W, reference="limit"))
                except PoleError:
                    out.append(np.nan)
            return np.array(out)

        return f


def _run_star_modulus(cfg):
    kappa, skipped = star_modulus(
        _PoissonBoundary(float(cfg["W"])), float(cfg["x"]), cfg["deltas"], int(cfg["samples"]), cfg["seed"],
        cfg["workers"],
    )
    summary = {"deltas": list(map(float, cfg["deltas"])), "kappa": kappa.tolist(), "skipped": skipped,
               "note": "diagnostic only, no acceptance threshold", "passed": True}
    return ExperimentResult(summary, True)


_RUNNERS = {
    "boole": _run_boole,
    "cauchy": _run_cauchy,
    "number-variance": _run_number_variance,
    "gamma": _run_gamma,
    "metrics-sweep": _run_metrics_sweep,
    "shift-covariance": _run_shift_covariance,
    "star-modulus": _run_star_modulus,
}


def gap_ks_distance(sine_samples, gue_spectra, margin=5.0, E_max=1.0):
    """Two-sample KS distance between sine-kernel gaps and unfolded GUE bulk gaps."""
    g1 = np.concatenate([nearest_neighbor_gaps(s, margin) for s in sine_samples])
    g2 = np.concatenate([unfolded_bulk_gaps(sp, E_max) for sp in gue_spectra])
    res = scipy.stats.ks_2samp(g1, g2)
    return float(res.statistic), g1.size, g2.size
