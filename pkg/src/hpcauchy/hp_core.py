"""Herglotz-Pick functions: half-plane and disk representations.

A Herglotz-Pick (HP) function maps the open upper half-plane into its
closure.  With a discrete spectral measure ``mu = sum_j w_j delta_{u_j}`` it
reads::

    F(z) = b + a z + sum_j w_j [1/(u_j - z) - u_j/(u_j**2 + 1)]

The same function is written on the unit disk through ``w = (z-i)/(z+i)`` as::

    G(w) = b + sum_k m_k * i (e^{i t_k} + w)/(e^{i t_k} - w)

where the circle atoms ``(t_k, m_k)`` are the images of the real atoms with
masses ``w_j/(u_j**2+1)``, and the linear coefficient ``a`` sits at angle 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, DomainError, PointAtInfinityError, PoleError

MERGE_TOL = 1e-12
EXCLUSION_HALF_WIDTH = 1e-6
_CHUNK = 1 << 21


def _merge_sorted(pos, wts, tol):
    """Merge runs of positions closer than ``tol``; weights add up."""
    if pos.size == 0:
        return pos, wts
    starts = np.concatenate(([True], np.diff(pos) > tol))
    groups = np.cumsum(starts) - 1
    w = np.bincount(groups, weights=wts)
    p = np.bincount(groups, weights=wts * pos) / w
    return p, w


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite weighted point configuration on the real line."""

    positions: np.ndarray
    weights: np.ndarray
    herglotz_norm: float = field(init=False)

    def __init__(self, positions=(), weights=None):
        pos = np.asarray(positions, dtype=float).ravel()
        if weights is None:
            wts = np.ones_like(pos)
        else:
            wts = np.broadcast_to(np.asarray(weights, dtype=float), pos.shape).copy()
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(wts)):
            raise DomainError("atoms must be finite")
        if np.any(wts <= 0):
            raise DomainError("atom weights must be positive")
        order = np.argsort(pos, kind="stable")
        pos, wts = _merge_sorted(pos[order], wts[order], MERGE_TOL)
        pos.flags.writeable = False
        wts.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "herglotz_norm", float(np.sum(wts / (pos**2 + 1))))

    def __len__(self):
        return self.positions.size

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def atoms(self):
        return list(zip(self.positions.tolist(), self.weights.tolist()))

    def shifted(self, u):
        """The measure ``T_u mu``, i.e. ``(T_u mu)(I) = mu(I + u)``."""
        return AtomicMeasure(self.positions - u, self.weights)

    def __eq__(self, other):
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self):
        return hash((self.positions.tobytes(), self.weights.tobytes()))


def _cot(w):
    """cot(w) evaluated stably for complex arguments of any imaginary part."""
    w = np.asarray(w, dtype=complex)
    flip = w.imag < 0
    ww = np.where(flip, np.conj(w), w)
    q = np.exp(2j * ww)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = 1j * (q + 1) / (q - 1)
    real = ww.imag == 0
    if np.any(real):
        x = ww.real[real]
        with np.errstate(divide="ignore", invalid="ignore"):
            c[real] = np.cos(x) / np.sin(x)
    return np.where(flip, np.conj(c), c)


class HPFunction:
    """Base class.  Subclasses implement ``_eval`` on validated arrays."""

    variant = "abstract"

    def __call__(self, z):
        return evaluate(self, z)

    def _eval(self, z):
        raise NotImplementedError

    def pole_mask(self, x, tol):
        """Boolean mask of real points lying within ``tol`` of a pole."""
        return np.zeros(np.shape(x), dtype=bool)

    def boundary(self, x):
        """Real boundary values ``F(x + i0)``; NaN where ``x`` hits a pole."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, np.nan)
        ok = ~self.pole_mask(x, 0.0)
        if np.any(ok):
            with np.errstate(divide="ignore", invalid="ignore"):
                out[ok] = self._eval(x[ok].astype(complex)).real
        return out


@dataclass(frozen=True, eq=False)
class Represented(HPFunction):
    """``b + a z + sum_j w_j [1/(u_j - z) - u_j/(u_j^2+1)]``."""

    mu: AtomicMeasure = field(default_factory=AtomicMeasure)
    a: float = 0.0
    b: float = 0.0
    variant = "represented"

    def __post_init__(self):
        if not self.a >= 0:
            raise DomainError("linear coefficient a must be nonnegative")
        if not np.isfinite(self.b):
            raise DomainError("b must be finite")

    def _eval(self, z):
        u = self.mu.positions
        w = self.mu.weights
        out = self.b + self.a * z
        if u.size == 0:
            return out + 0j
        shift = float(np.sum(w * u / (u**2 + 1)))
        flat = z.ravel()
        res = np.empty(flat.shape, dtype=complex)
        step = max(1, _CHUNK // u.size)
        for s in range(0, flat.size, step):
            zz = flat[s : s + step, None]
            res[s : s + step] = (w / (u - zz)).sum(axis=1)
        return out + res.reshape(z.shape) - shift

    def pole_mask(self, x, tol):
        return _near_sorted(self.mu.positions, x, tol)


@dataclass(frozen=True, eq=False)
class Periodic(HPFunction):
    """``-pi cot(pi z)``: unit poles at the integers."""

    variant = "periodic"

    def _eval(self, z):
        z = z - np.round(z.real)
        return -np.pi * _cot(np.pi * z)

    def pole_mask(self, x, tol):
        x = np.asarray(x, dtype=float)
        return np.abs(x - np.round(x)) <= tol


@dataclass(frozen=True, eq=False)
class QuasiPeriodic(HPFunction):
    """``-sum_j alpha_j cot(beta_j z + theta_j)`` with alpha_j, beta_j >= 0."""

    alpha: tuple = ()
    beta: tuple = ()
    theta: tuple = ()
    variant = "quasiperiodic"

    def __post_init__(self):
        al = tuple(float(v) for v in self.alpha)
        be = tuple(float(v) for v in self.beta)
        th = tuple(float(v) for v in (self.theta if len(self.theta) else [0.0] * len(al)))
        if not (len(al) == len(be) == len(th)):
            raise DomainError("alpha, beta, theta must have equal length")
        if any(v < 0 for v in al):
            raise DomainError("alpha_j must be nonnegative")
        # a negative frequency flips the sign of Im F on the upper half-plane
        if any(v < 0 for v in be):
            raise DomainError("beta_j must be nonnegative for an HP function")
        object.__setattr__(self, "alpha", al)
        object.__setattr__(self, "beta", be)
        object.__setattr__(self, "theta", th)

    def _eval(self, z):
        out = np.zeros(z.shape, dtype=complex)
        for al, be, th in zip(self.alpha, self.beta, self.theta):
            arg = be * z + th
            # reduce the real part modulo pi (cot has period pi)
            arg = arg - np.pi * np.round(arg.real / np.pi)
            out -= al * _cot(arg)
        return out

    def pole_mask(self, x, tol):
        x = np.asarray(x, dtype=float)
        mask = np.zeros(x.shape, dtype=bool)
        for al, be, th in zip(self.alpha, self.beta, self.theta):
            if al == 0:
                continue
            if be == 0:
                if math.sin(th) == 0:
                    mask[...] = True
                continue
            arg = be * x + th
            dist = np.abs(arg - np.pi * np.round(arg / np.pi)) / be
            mask |= dist <= tol
        return mask


@dataclass(frozen=True, eq=False)
class ProcessTruncated(HPFunction):
    """Stieltjes transform of a sampled point process on the window ``[-n, n]``.

    The value is the counting-function representation with the truncated
    reference transform replaced by its limit ``i pi rho``; no real constant
    is added (the real centre of the resulting Cauchy law is therefore 0 for
    a Lebesgue reference).
    """

    sample: object = None
    n: float | None = None
    variant = "process_truncated"

    def __post_init__(self):
        if self.sample is None:
            raise DomainError("a point sample is required")
        if self.n is None:
            object.__setattr__(self, "n", float(self.sample.W))
        if not 0 < self.n <= self.sample.W:
            raise DomainError("window n must lie in (0, W]")

    def _eval(self, z):
        from .stieltjes import corrected_transform

        flat = z.ravel()
        vals = [corrected_transform(self.sample, zz, self.n, reference="limit").value for zz in flat]
        return np.asarray(vals, dtype=complex).reshape(z.shape)

    def pole_mask(self, x, tol):
        pts = self.sample.points
        pts = pts[np.abs(pts) <= self.n]
        return _near_sorted(pts, x, tol)


def _near_sorted(sorted_points, x, tol):
    x = np.asarray(x, dtype=float)
    if sorted_points.size == 0:
        return np.zeros(x.shape, dtype=bool)
    idx = np.searchsorted(sorted_points, x)
    lo = sorted_points[np.clip(idx - 1, 0, sorted_points.size - 1)]
    hi = sorted_points[np.clip(idx, 0, sorted_points.size - 1)]
    return (np.abs(x - lo) <= tol) | (np.abs(hi - x) <= tol)


def evaluate(F, z):
    """Evaluate ``F`` at ``z`` (scalar or array) with ``Im z >= 0``.

    Real arguments are allowed away from the poles; the library never moves
    them, so a real ``z`` sitting on a pole raises :class:`PoleError`.
    """
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(zz.imag < 0):
        raise DomainError("F is defined on the closed upper half-plane only")
    if not np.all(np.isfinite(zz)):
        raise DomainError("z must be finite")
    real = zz.imag == 0
    if np.any(real) and np.any(F.pole_mask(zz.real[real], 0.0)):
        raise PoleError("evaluation at a pole of F")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = F._eval(zz)
    if np.any(~np.isfinite(out)):
        raise PoleError("evaluation at a pole of F")
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------- disk side


def mobius_to_disk(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise DomainError("z must lie in the closed upper half-plane")
    w = (z - 1j) / (z + 1j)
    return complex(w) if w.ndim == 0 else w


def mobius_to_halfplane(w):
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w) > 1 + 1e-15):
        raise DomainError("w must lie in the closed unit disk")
    if np.any(w == 1):
        raise PointAtInfinityError("w = 1 is the image of the point at infinity")
    z = 1j * (1 + w) / (1 - w)
    return complex(z) if z.ndim == 0 else z


@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Atomic measure on the unit circle, angles in ``[0, 2 pi)``."""

    angles: np.ndarray
    masses: np.ndarray

    def __init__(self, angles=(), masses=None):
        ang = np.asarray(angles, dtype=float).ravel()
        mas = np.ones_like(ang) if masses is None else np.asarray(masses, dtype=float).ravel()
        if ang.shape != mas.shape:
            raise DomainError("angles and masses differ in length")
        if np.any(mas < 0) or not np.all(np.isfinite(mas)):
            raise DomainError("masses must be finite and nonnegative")
        keep = mas > 0
        ang, mas = np.mod(ang[keep], 2 * np.pi), mas[keep]
        ang[ang >= 2 * np.pi - MERGE_TOL] = 0.0
        order = np.argsort(ang, kind="stable")
        ang, mas = _merge_sorted(ang[order], mas[order], MERGE_TOL)
        ang.flags.writeable = False
        mas.flags.writeable = False
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "masses", mas)

    def __len__(self):
        return self.angles.size

    @property
    def total_mass(self):
        return float(np.sum(self.masses))

    def mass_at(self, angle, tol=MERGE_TOL):
        d = np.abs(np.angle(np.exp(1j * (self.angles - angle))))
        return float(np.sum(self.masses[d <= tol]))

    def integrate(self, g):
        return complex(np.sum(self.masses * g(self.angles)))

    def normalized(self):
        m = self.total_mass
        return CircleMeasure(self.angles, self.masses / m) if m > 0 else self


@dataclass(frozen=True, eq=False)
class DiskHP:
    """The pair ``(sigma, b)`` defining ``G`` on the unit disk."""

    sigma: CircleMeasure = field(default_factory=CircleMeasure)
    b: float = 0.0

    @property
    def G0(self):
        return complex(self.b, self.sigma.total_mass)

    def __call__(self, w):
        return evaluate_disk(self, w)


def evaluate_disk(G, w):
    scalar = np.ndim(w) == 0
    ww = np.atleast_1d(np.asarray(w, dtype=complex))
    if np.any(np.abs(ww) >= 1):
        raise DomainError("G is evaluated on the open unit disk only")
    e = np.exp(1j * G.sigma.angles)
    out = np.full(ww.shape, complex(G.b))
    flat = ww.ravel()
    step = max(1, _CHUNK // max(1, e.size))
    res = np.empty(flat.shape, dtype=complex)
    for s in range(0, flat.size, step):
        x = flat[s : s + step, None]
        res[s : s + step] = (G.sigma.masses * 1j * (e + x) / (e - x)).sum(axis=1)
    out = out + res.reshape(ww.shape)
    return complex(out[0]) if scalar else out


def to_disk(F):
    """Disk representation ``(sigma, b)`` of a :class:`Represented` function."""
    if not isinstance(F, Represented):
        raise DomainError("to_disk needs the represented variant")
    u = F.mu.positions
    theta = 2 * np.arctan2(1.0, -u)
    mass = F.mu.weights / (u**2 + 1)
    if F.a > 0:
        theta = np.concatenate(([0.0], theta))
        mass = np.concatenate(([F.a], mass))
    return DiskHP(CircleMeasure(theta, mass), F.b)


def from_disk(G):
    """Inverse of :func:`to_disk`; the atom at angle 0 becomes ``a``."""
    ang, mas = G.sigma.angles, G.sigma.masses
    at0 = ang == 0.0
    a = float(np.sum(mas[at0]))
    ang, mas = ang[~at0], mas[~at0]
    u = -1.0 / np.tan(ang / 2)
    return Represented(AtomicMeasure(u, mas * (u**2 + 1)), a=a, b=G.b)


# --------------------------------------------------------- Poisson smoothing


def _psi(v):
    return -1.0 / (v + 1j)


@dataclass(frozen=True)
class SmoothedValue:
    value: complex
    direct: complex
    error_estimate: float
    n_points: int


def poisson_smooth(F, x, eta, tol=1e-5, max_points=1 << 22, start_points=1 << 12):
    """Poisson average of ``Psi(F(u + i0))`` with ``Psi(v) = -1/(v + i)``.

    The kernel ``eta/pi/((u-x)^2+eta^2) du`` becomes ``d phi / pi`` under
    ``u = x + eta tan(phi)``, which removes the heavy tails from the problem.
    The midpoint rule in ``phi`` is refined by doubling until two successive
    values agree to ``tol``.  Points within ``EXCLUSION_HALF_WIDTH`` of a pole
    contribute ``Psi(inf) = 0``.
    """
    if not eta > 0:
        raise DomainError("eta must be positive")

    def rule(npts):
        phi = -np.pi / 2 + (np.arange(npts) + 0.5) * (np.pi / npts)
        u = x + eta * np.tan(phi)
        total = 0j
        for s in range(0, npts, _CHUNK):
            uu = u[s : s + _CHUNK]
            vals = np.zeros(uu.shape, dtype=complex)
            ok = ~F.pole_mask(uu, EXCLUSION_HALF_WIDTH)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                fv = F._eval(uu[ok].astype(complex)).real
                vals[ok] = _psi(fv)
            vals[~np.isfinite(vals)] = 0.0
            total += vals.sum()
        return total / npts

    npts = start_points
    prev = rule(npts)
    err = np.inf
    while npts < max_points:
        npts *= 2
        cur = rule(npts)
        err = abs(cur - prev)
        prev = cur
        if err < tol:
            break
    direct = _psi(evaluate(F, complex(x, eta)))
    if err >= tol:
        raise AccuracyError(f"Poisson quadrature did not converge (estimate {err:.2e})", err)
    return SmoothedValue(complex(prev), complex(direct), float(err), npts)


# ------------------------------------------------------------ serialization


def to_json(F):
    """JSON-ready dict ``{variant, atoms, a, b, params}``."""
    d = {"variant": F.variant, "atoms": [], "a": 0.0, "b": 0.0, "params": {}}
    if isinstance(F, Represented):
        d.update(atoms=[[p, w] for p, w in F.mu.atoms()], a=float(F.a), b=float(F.b))
    elif isinstance(F, QuasiPeriodic):
        d["params"] = {"alpha": list(F.alpha), "beta": list(F.beta), "theta": list(F.theta)}
    elif isinstance(F, ProcessTruncated):
        s = F.sample
        d["atoms"] = [[p, 1.0] for p in s.points.tolist()]
        d["params"] = {"W": s.W, "rho": s.reference_intensity, "n": F.n, "seed": s.seed}
    return d


def from_json(d):
    v = d["variant"]
    if v == "represented":
        atoms = np.asarray(d["atoms"], dtype=float).reshape(-1, 2)
        return Represented(AtomicMeasure(atoms[:, 0], atoms[:, 1]), a=d["a"], b=d["b"])
    if v == "periodic":
        return Periodic()
    if v == "quasiperiodic":
        p = d["params"]
        return QuasiPeriodic(p["alpha"], p["beta"], p["theta"])
    if v == "process_truncated":
        from .point_process import PointSample

        p = d["params"]
        pts = [a[0] for a in d["atoms"]]
        return ProcessTruncated(PointSample(pts, p["W"], p["rho"], p.get("seed")), p["n"])
    raise DomainError(f"unknown HP variant {v!r}")
