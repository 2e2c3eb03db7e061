"""Stationary point processes on the line and their counting functions.

Two samplers are provided: homogeneous Poisson and the sine-kernel
determinantal process ``K(x, y) = sin(pi (x-y)) / (pi (x-y))``.  The latter is
sampled exactly for the kernel discretized on a grid of spacing ``h``; see
:func:`sine_kernel_basis`.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.signal.windows import dpss

from ._rng import as_generator, map_substreams
from .errors import AccuracyError, DomainError

DEFAULT_H = 0.05
MAX_GRID_CELLS = 40_000
EIG_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class PointSample:
    """Realized configuration in the window ``[-W, W]``.

    ``bulk_halfwidth`` is set only for rescaled matrix spectra, where the
    configuration extends past the region in which it approximates a
    stationary process.
    """

    points: np.ndarray
    W: float
    reference_intensity: float = 1.0
    seed: object = None
    bulk_halfwidth: float | None = None

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float).ravel())
        if not self.W > 0:
            raise DomainError("window half-width must be positive")
        if self.reference_intensity < 0:
            raise DomainError("reference intensity must be nonnegative")
        if pts.size and (pts[0] < -self.W or pts[-1] > self.W):
            raise DomainError("points must lie in [-W, W]")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "W", float(self.W))
        object.__setattr__(self, "reference_intensity", float(self.reference_intensity))

    def __len__(self):
        return self.points.size

    def counting(self, x):
        return counting(self, x)

    def delta_N(self, x):
        return delta_N(self, x)

    def to_json_line(self):
        return json.dumps(
            {"seed": self.seed, "W": self.W, "rho": self.reference_intensity, "points": self.points.tolist()}
        )

    @classmethod
    def from_json_line(cls, line):
        d = json.loads(line)
        return cls(d["points"], d["W"], d["rho"], d.get("seed"))

    def write_csv(self, path, xs):
        """Write ``(x, N(x), deltaN(x))`` rows for the requested abscissae."""
        xs = np.asarray(xs, dtype=float)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "N", "deltaN"])
            for x, n, d in zip(xs, counting(self, xs), delta_N(self, xs)):
                w.writerow([repr(float(x)), int(n), repr(float(d))])


def counting(s, x):
    """Signed count: ``#(0, x]`` for ``x >= 0`` and ``-#(x, 0]`` for ``x < 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > s.W):
        raise DomainError("counting function is defined on [-W, W] only")
    n = np.searchsorted(s.points, xa, side="right") - np.searchsorted(s.points, 0.0, side="right")
    return int(n) if n.ndim == 0 else n


def delta_N(s, x):
    xa = np.asarray(x, dtype=float)
    d = counting(s, xa) - s.reference_intensity * xa
    return float(d) if np.ndim(d) == 0 else d


def sample_poisson(W, intensity, rng=None, seed=None):
    if not (W > 0 and intensity > 0):
        raise DomainError("W and intensity must be positive")
    rng = as_generator(rng)
    k = rng.poisson(2 * W * intensity)
    return PointSample(rng.uniform(-W, W, size=k), W, intensity, seed)


# ----------------------------------------------------------- sine kernel


@dataclass(frozen=True, eq=False)
class SineKernelBasis:
    """Eigenpairs of ``h sinc(x_i - x_j)`` on the cell centres of ``[-W, W]``.

    Only eigenvalues above ``EIG_FLOOR`` are kept; ``neglected_mass`` bounds
    the sum of the dropped ones and ``clipped_mass`` records how much the
    kept ones had to be moved into ``[0, 1]``.
    """

    W: float
    h: float
    grid: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    clipped_mass: float
    neglected_mass: float


_basis_cache = {}
_basis_lock = threading.Lock()


def sine_kernel_basis(W, h=DEFAULT_H):
    """Cached eigendecomposition of the discretized sine kernel.

    On the lattice ``h Z`` the matrix ``h sin(pi h m)/(pi h m)`` is the
    band-limiting kernel whose restriction to ``M`` consecutive sites has
    the discrete prolate spheroidal sequences as eigenvectors, with
    half-bandwidth ``h/2`` cycles per site (time-bandwidth product
    ``M h / 2 = W``).  Those are obtained from the commuting tridiagonal
    matrix in ``O(M K)`` work instead of a dense ``O(M^3)`` solve.
    """
    if not (W > 0 and h > 0):
        raise DomainError("W and h must be positive")
    if h > 0.1:
        raise AccuracyError(f"grid spacing h={h} is too coarse (need h <= 0.1)", h)
    M = int(round(2 * W / h))
    if M > MAX_GRID_CELLS:
        raise DomainError(f"{M} grid cells exceed the memory guard of {MAX_GRID_CELLS}")
    key = (M, float(h))
    with _basis_lock:
        hit = _basis_cache.get(key)
        if hit is not None:
            return hit
        Weff = M * h / 2
        kmax = min(M, int(2 * Weff + 8 * np.log(M) + 24))
        while True:
            vecs, lam = dpss(M, Weff, Kmax=kmax, sym=True, norm=2, return_ratios=True)
            if lam[-1] < EIG_FLOOR or kmax == M:
                break
            kmax = min(M, 2 * kmax)
        clipped = float(np.sum(np.clip(lam - 1, 0, None)) + np.sum(np.clip(-lam, 0, None)))
        keep = lam > EIG_FLOOR
        neglected = float(np.sum(np.clip(lam[~keep], 0, None)) + (M - kmax) * max(lam[-1], 0.0))
        if clipped > 1e-3 or neglected > 1e-3:
            raise AccuracyError("sine-kernel spectrum could not be resolved", max(clipped, neglected))
        lam = np.clip(lam[keep], 0.0, 1.0)
        V = np.ascontiguousarray(vecs[keep].T)
        grid = -Weff + h * (np.arange(M) + 0.5)
        basis = SineKernelBasis(Weff, h, grid, lam, V, clipped, neglected)
        _basis_cache[key] = basis
        return basis


def sample_projection_dpp(V, rng):
    """Indices drawn from the projection DPP with kernel ``V V^T``.

    ``V`` has orthonormal columns.  Each step picks a site with probability
    proportional to the squared norm of its row after projecting out the rows
    already chosen (Gram-Schmidt downdating in coefficient space).
    """
    M, k = V.shape
    if k == 0:
        return np.empty(0, dtype=np.int64)
    norms = np.einsum("ij,ij->i", V, V)
    explained = np.zeros(M)
    basis = np.zeros((k, k))
    chosen = np.empty(k, dtype=np.int64)
    for j in range(k):
        p = norms - explained
        np.clip(p, 0.0, None, out=p)
        p[chosen[:j]] = 0.0
        c = np.cumsum(p)
        y = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
        y = min(y, M - 1)
        chosen[j] = y
        v = V[y].copy()
        for _ in range(2):
            v -= basis[:j].T @ (basis[:j] @ v)
        v /= np.linalg.norm(v)
        basis[j] = v
        explained += (V @ v) ** 2
    return np.sort(chosen)


def sample_sine_kernel(W, h=DEFAULT_H, rng=None, seed=None):
    """Sine-kernel process restricted to ``[-W, W]``.

    Eigenvectors of the discretized kernel are kept independently with
    probability equal to their eigenvalue; the projection DPP they span is
    then sampled site by site.  Each selected cell yields one point placed
    uniformly inside the cell, so distinct points always sit in distinct cells.
    """
    rng = as_generator(rng)
    basis = sine_kernel_basis(W, h)
    sel = rng.random(basis.eigenvalues.size) < basis.eigenvalues
    V = np.ascontiguousarray(basis.eigenvectors[:, sel])
    idx = sample_projection_dpp(V, rng)
    pts = basis.grid[idx] + basis.h * (rng.random(idx.size) - 0.5)
    return PointSample(np.clip(pts, -basis.W, basis.W), basis.W, 1.0, seed)


def sine_kernel_number_variance(x):
    """Exact ``Var N(0, x]`` of the sine process: ``x - int_0^x int_0^x K^2``.

    Uses ``int_0^x int_0^x sinc^2(s-t) = 2 int_0^x (x-u) sinc^2(u) du``.
    """
    from scipy.integrate import quad

    def one(xx):
        f = lambda u: (xx - u) * np.sinc(u) ** 2
        pts = np.arange(1, int(xx)) if xx > 1 else None
        val, _ = quad(f, 0, xx, points=pts, limit=max(50, 4 * int(xx) + 10))
        return xx - 2 * val

    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([one(v) for v in xa])
    return float(out[0]) if np.ndim(x) == 0 else out


# ------------------------------------------------------- number variance


@dataclass(frozen=True)
class NumberVarianceEstimate:
    x: np.ndarray
    variance: np.ndarray
    n_samples: int
    slope: float | None = None
    intercept: float | None = None
    anchors: str = "origin"

    def to_dict(self):
        return {
            "x": self.x.tolist(),
            "variance": self.variance.tolist(),
            "n_samples": self.n_samples,
            "slope": self.slope,
            "intercept": self.intercept,
            "anchors": self.anchors,
        }


def _interval_counts(s, x_grid, anchors, anchor_step):
    """deltaN over intervals of each length; one row of values per length."""
    rows = []
    for x in x_grid:
        if anchors == "origin":
            rows.append(np.atleast_1d(delta_N(s, x)))
            continue
        W = s.W
        if x > 2 * W:
            raise DomainError("interval longer than the sampling window")
        step = anchor_step if anchor_step else max(x / 2, 1.0)
        starts = -W + step * np.arange(int(np.floor((2 * W - x) / step)) + 1)
        cnt = np.searchsorted(s.points, starts + x, side="right") - np.searchsorted(s.points, starts, side="right")
        rows.append(cnt - s.reference_intensity * x)
    return rows


def _nv_worker(sampler, x_grid, anchors, anchor_step, rng):
    return _interval_counts(sampler(rng=rng), x_grid, anchors, anchor_step)


def _check_grid(x_grid, n_samples):
    if n_samples < 100:
        raise DomainError("number_variance needs at least 100 samples")
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or np.any(x_grid <= 0) or np.any(np.diff(x_grid) <= 0):
        raise DomainError("x grid must be positive and increasing")
    return x_grid


def _summarize(per_sample, x_grid, anchors):
    var = np.empty(x_grid.size)
    for k in range(x_grid.size):
        vals = np.stack([row[k] for row in per_sample])
        var[k] = float(np.mean(np.var(vals, axis=0, ddof=1)))
    slope = intercept = None
    if x_grid.size >= 2:
        slope, intercept = (float(c) for c in np.polyfit(np.log(x_grid), var, 1))
    return NumberVarianceEstimate(x_grid, var, len(per_sample), slope, intercept, anchors)


def number_variance(sampler, x_grid, n_samples, seed=0, anchors="origin", anchor_step=None, workers=1):
    """Monte-Carlo variance of ``deltaN(x)`` and a least-squares fit on ``log x``.

    ``sampler(rng=...)`` must return a :class:`PointSample`.  With
    ``anchors="origin"`` the statistic is ``N(x) - rho x`` counted from 0.
    With ``anchors="sliding"`` it is the discrepancy over every interval
    ``(a, a + x]`` in the window with ``a`` on a grid of spacing
    ``anchor_step`` (default ``x/2``); by stationarity these have the same
    law, and the per-anchor unbiased variances are averaged.
    """
    x_grid = _check_grid(x_grid, n_samples)
    worker = partial(_nv_worker, sampler, x_grid, anchors, anchor_step)
    per_sample = map_substreams(worker, seed, n_samples, workers)
    return _summarize(per_sample, x_grid, anchors)


def number_variance_from_samples(samples, x_grid, anchors="origin", anchor_step=None):
    """Same estimate as :func:`number_variance` for samples already drawn."""
    x_grid = _check_grid(x_grid, len(samples))
    per_sample = [_interval_counts(s, x_grid, anchors, anchor_step) for s in samples]
    return _summarize(per_sample, x_grid, anchors)


def nearest_neighbor_gaps(s, margin=0.0):
    """Gaps between consecutive points whose left point is ``margin`` inside the window."""
    p = s.points
    g = np.diff(p)
    keep = (p[:-1] >= -s.W + margin) & (p[1:] <= s.W - margin)
    return g[keep]
