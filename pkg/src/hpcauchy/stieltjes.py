"""Stieltjes transforms of point samples, boundary values and the shift action.

For a sample with counting function ``N`` and reference intensity ``rho`` the
symmetric truncated sum ``sum_{|u_j| <= n} 1/(u_j - z)`` is rewritten, by
integration by parts against ``dN = rho dx + d(deltaN)``, as::

    Fbar_n(z) + deltaN(n)/(n - z) - deltaN(-n-)/(-n - z) + int_{-n}^{n} deltaN(x)/(x - z)^2 dx

with ``Fbar_n(z) = rho log((n - z)/(-n - z))``.  ``deltaN`` is affine between
consecutive points, so the integral is a finite sum of closed-form pieces.
On the real axis all logarithms are taken as limits from the upper
half-plane, which keeps the identity exact for real ``z`` off the points.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import AccuracyError, DomainError, PoleError
from .hp_core import AtomicMeasure
from .point_process import PointSample

POLE_CUTOFF = 1e-9
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class TransformResult:
    """Value of a truncated transform and its decomposition.

    For the corrected transform ``value = reference + boundary + integral``.
    For the plain truncated sum the three parts are ``None``.
    """

    value: complex
    n: float
    reference: complex | None = None
    boundary: complex | None = None
    integral: complex | None = None
    truncation_error: float = 0.0
    reference_kind: str = "truncated"

    def to_json(self):
        d = asdict(self)
        for k in ("value", "reference", "boundary", "integral"):
            v = d[k]
            d[k] = None if v is None else [v.real, v.imag]
        return json.dumps(d)


def _check(s, z, n):
    z = complex(z)
    if z.imag < 0:
        raise DomainError("z must lie in the closed upper half-plane")
    if not 0 < n <= s.W:
        raise DomainError("window n must lie in (0, W]")
    if z.imag == 0 and np.any(s.points[np.abs(s.points) <= n] == z.real):
        raise PoleError("z coincides with a point of the sample")
    return z


def _log_above(v):
    """``log(v)`` for ``Im v <= 0``; real negative ``v`` is read as ``v - i0``."""
    v = np.asarray(v, dtype=complex).copy()
    v.imag = np.where(v.imag == 0, -0.0, v.imag)
    return np.log(v)


def _truncation_error(s, n):
    return float(abs(_delta_left(s, n, right=True)) / n + abs(_delta_left(s, -n, right=True)) / n)


def _delta_left(s, x, right):
    """``deltaN(x)`` (right limit) or ``deltaN(x-)`` (left limit)."""
    side = "right" if right else "left"
    N = np.searchsorted(s.points, x, side=side) - np.searchsorted(s.points, 0.0, side="right")
    return float(N) - s.reference_intensity * x


def truncated_transform(s, z, n=None):
    """``sum_{|u_j| <= n} 1/(u_j - z)``."""
    n = s.W if n is None else float(n)
    z = _check(s, z, n)
    pts = s.points
    inside = pts[np.searchsorted(pts, -n, "left") : np.searchsorted(pts, n, "right")]
    val = complex(np.sum(1.0 / (inside - z))) if inside.size else 0j
    return TransformResult(val, n, truncation_error=_truncation_error(s, n))


def corrected_transform(s, z, n=None, reference="truncated"):
    """Counting-function form of the truncated transform.

    ``reference="truncated"`` keeps ``Fbar_n`` and reproduces
    :func:`truncated_transform` up to rounding.  ``reference="limit"``
    replaces ``Fbar_n`` by its large-``n`` limit ``i pi rho``, which removes the
    ``O(z/n)`` drift of the symmetric window.
    """
    n = s.W if n is None else float(n)
    z = _check(s, z, n)
    rho = s.reference_intensity
    pts = s.points
    inner = pts[(pts > -n) & (pts < n)]
    br = np.unique(np.concatenate(([-n], inner, [n])))
    a, b = br[:-1], br[1:]
    # N is constant on each open segment; evaluate it at the midpoint
    mid = 0.5 * (a + b)
    c = np.searchsorted(pts, mid, "right") - np.searchsorted(pts, 0.0, "right")
    rational = np.sum((c - rho * z) * (b - a) / ((a - z) * (b - z)))
    lb = _log_above([n - z, -n - z])
    fbar = rho * complex(lb[0] - lb[1])
    integral = complex(rational) - fbar
    dn_hi = _delta_left(s, n, right=True)
    dn_lo = _delta_left(s, -n, right=False)
    boundary = dn_hi / (n - z) - dn_lo / (-n - z)
    if reference == "truncated":
        ref = fbar
    elif reference == "limit":
        ref = complex(0.0, np.pi * rho)
    else:
        raise DomainError(f"unknown reference {reference!r}")
    value = ref + boundary + integral
    return TransformResult(
        complex(value), n, complex(ref), complex(boundary), integral, _truncation_error(s, n), reference
    )


def boundary_value(s, x, n=None, reference="truncated"):
    """Real boundary value ``F(x + i0)`` of the corrected transform."""
    n = s.W if n is None else float(n)
    x = float(x)
    if abs(x) > n / 2:
        raise DomainError("boundary values need |x| <= n/2")
    pts = s.points
    if pts.size:
        k = np.searchsorted(pts, x)
        near = pts[max(k - 1, 0) : k + 1]
        if np.min(np.abs(near - x)) < POLE_CUTOFF:
            raise PoleError("x is within the pole-proximity cutoff of a point")
    r = corrected_transform(s, x, n, reference)
    if abs(r.value.imag) >= IMAG_TOL:
        raise AccuracyError(f"boundary value has imaginary part {r.value.imag:.3e}", abs(r.value.imag))
    return r.value.real


# --------------------------------------------------------------- shifts


def shift_sample(s, a):
    """Sample translated by ``-a``; the window shrinks to ``W - |a|``."""
    a = float(a)
    if abs(a) > s.W / 2:
        raise DomainError("shift exceeds half the window")
    if a == 0:
        return s
    W = s.W - abs(a)
    p = s.points - a
    p = p[(p >= -W) & (p <= W)]
    return PointSample(p, W, s.reference_intensity, s.seed, s.bulk_halfwidth)


def cocycle_Q(u, mu):
    """``Q(u, mu) = sum_j w_j [1/(x_j - u - i) - 1/(x_j - i)]``."""
    if len(mu) == 0 or u == 0:
        return 0j
    x, w = mu.positions, mu.weights
    return complex(np.sum(w * (1.0 / (x - u - 1j) - 1.0 / (x - 1j))))


def linear_coefficient(mu, beta):
    """``a = Im beta - sum_j w_j/(x_j^2 + 1)`` for the pair ``(mu, beta)``."""
    return float(complex(beta).imag - mu.herglotz_norm)


def shift_hp(mu, beta, u):
    """Action of the shift by ``u`` on the pair ``(mu, beta = F(i))``.

    Returns ``(T_u mu, beta + Q(u, mu) + u a)``; the new constant is ``F(i + u)``.
    """
    if not isinstance(mu, AtomicMeasure):
        mu = AtomicMeasure(*mu)
    a = linear_coefficient(mu, beta)
    if a < -1e-12 * max(1.0, abs(complex(beta))):
        raise DomainError("pair (mu, beta) has a negative linear coefficient")
    return mu.shifted(u), complex(beta) + cocycle_Q(u, mu) + u * max(a, 0.0)


def shift_covariance_check(s, a, z, n):
    """``|F_{T_a s}^{(n)}(z) - F_s^{(n)}(z + a)|`` with limit-reference transforms.

    The shifted sample is truncated to ``[-n, n]`` around its own origin, which
    is ``[a - n, a + n]`` in the original coordinates, so the gap measures the
    effect of moving the window by ``a``.
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("shift covariance is checked for Im z > 0")
    if n > s.W - abs(a):
        raise DomainError("window n does not fit the shifted sample")
    if a == 0:
        return 0.0
    lhs = corrected_transform(shift_sample(s, a), z, n, "limit").value
    rhs = corrected_transform(s, z + a, n, "limit").value
    return float(abs(lhs - rhs))
