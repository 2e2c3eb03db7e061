"""Distances between circle measures and checks of the disk-side bounds.

The ground metric on the circle is arc length.  For atomic measures the
1-Wasserstein distance then has a closed form: with ``D`` the cumulative mass
difference along the circle, ``W = min_c int |D - c|``, attained at a
weighted median of ``D``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .hp_core import MERGE_TOL, CircleMeasure, evaluate_disk

MAX_EXACT_ATOMS = 12
TWO_PI = 2 * np.pi


def _joint_support(s1, s2):
    """Merged angles and the two mass vectors on them."""
    ang = np.concatenate((s1.angles, s2.angles))
    lab = np.concatenate((np.zeros(len(s1), int), np.ones(len(s2), int)))
    mas = np.concatenate((s1.masses, s2.masses))
    order = np.argsort(ang, kind="stable")
    ang, lab, mas = ang[order], lab[order], mas[order]
    if ang.size == 0:
        return ang, np.zeros(0), np.zeros(0)
    start = np.concatenate(([True], np.diff(ang) > MERGE_TOL))
    g = np.cumsum(start) - 1
    k = g[-1] + 1
    m1 = np.bincount(g[lab == 0], weights=mas[lab == 0], minlength=k)
    m2 = np.bincount(g[lab == 1], weights=mas[lab == 1], minlength=k)
    return ang[start], m1, m2


def arc_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % TWO_PI
    return np.minimum(d, TWO_PI - d)


def variational_distance(s1, s2):
    """Total variation ``sum |m1 - m2|`` of the difference of two atomic measures."""
    _, m1, m2 = _joint_support(s1, s2)
    return float(np.sum(np.abs(m1 - m2)))


def _weighted_median(x, w):
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    c = np.cumsum(w)
    return float(x[np.searchsorted(c, 0.5 * c[-1])])


def _w1_unnormalized(ang, p, q):
    if ang.size <= 1:
        return 0.0
    D = np.cumsum(p - q)
    gaps = np.diff(np.concatenate((ang, [ang[0] + TWO_PI])))
    c = _weighted_median(D, gaps)
    return float(np.sum(gaps * np.abs(D - c)))


def wasserstein_circle(s1, s2):
    """1-Wasserstein distance (arc length) between measures of equal mass.

    The measures are normalized before transport and the cost is scaled back
    by the common mass.
    """
    m1, m2 = s1.total_mass, s2.total_mass
    if abs(m1 - m2) > 1e-12 * max(1.0, m1, m2):
        raise DomainError("Wasserstein distance needs equal total masses")
    if m1 == 0:
        return 0.0
    ang, p, q = _joint_support(s1, s2)
    return m1 * _w1_unnormalized(ang, p / m1, q / m2)


def normalized_wasserstein(s1, s2):
    """``W(s1/|s1|, s2/|s2|)``; zero when either measure vanishes."""
    if s1.total_mass == 0 or s2.total_mass == 0:
        return 0.0
    return wasserstein_circle(s1.normalized(), s2.normalized())


def _flat_lp(s1, s2):
    a, b = s1.masses, s2.masses
    n1, n2 = a.size, b.size
    d = arc_distance(s1.angles[:, None], s2.angles[None, :])
    # minimize sum g d + (m1 - |g|) + (m2 - |g|) over partial couplings g
    c = (d - 2.0).ravel()
    rows = np.zeros((n1 + n2, n1 * n2))
    for i in range(n1):
        rows[i, i * n2 : (i + 1) * n2] = 1.0
    for j in range(n2):
        rows[n1 + j, j::n2] = 1.0
    res = linprog(c, A_ub=rows, b_ub=np.concatenate((a, b)), bounds=(0, None), method="highs")
    if res.status != 0:
        raise DomainError(f"flat-distance LP failed: {res.message}")
    return float(res.fun + a.sum() + b.sum())


def flat_distance(s1, s2, max_exact_atoms=MAX_EXACT_ATOMS):
    """Flat distance ``inf |s1 - t1| + |s2 - t2| + W(t1, t2)`` over ``|t1| = |t2|``.

    An optimal pair can be taken below ``s1`` and ``s2``, which turns the
    problem into a linear program over partial couplings; it is solved exactly
    when both supports have at most ``max_exact_atoms`` atoms.  Larger inputs
    use the upper bound ``min(TV, |m1 - m2| + min(m1, m2) W(s1~, s2~))``
    obtained by scaling the heavier measure down to the lighter mass.
    """
    if len(s1) == 0 or len(s2) == 0:
        return s1.total_mass + s2.total_mass
    if len(s1) <= max_exact_atoms and len(s2) <= max_exact_atoms:
        return min(_flat_lp(s1, s2), variational_distance(s1, s2))
    m1, m2 = s1.total_mass, s2.total_mass
    heur = abs(m1 - m2) + min(m1, m2) * normalized_wasserstein(s1, s2)
    return float(min(heur, variational_distance(s1, s2)))


# ------------------------------------------------------------ G bounds


@dataclass(frozen=True)
class GBound:
    lhs: float
    rhs: float
    holds: bool


def gbound_check(G1, G2, w):
    """Compare ``|G1(w) - G2(w)|`` with the bound from ``G(0)`` and ``W``."""
    w = complex(w)
    r = abs(w)
    if r >= 1:
        raise DomainError("|w| must be below 1")
    lhs = abs(evaluate_disk(G1, w) - evaluate_disk(G2, w))
    dG0 = G1.G0 - G2.G0
    rhs = abs(dG0.real) + abs(dG0.imag) * 2 / (1 - r)
    m1, m2 = G1.sigma.total_mass, G2.sigma.total_mass
    if m1 > 0 and m2 > 0:
        rhs += 0.5 * (m1 + m2) * normalized_wasserstein(G1.sigma, G2.sigma) * 2 * r / (1 - r) ** 2
    return GBound(float(lhs), float(rhs), bool(lhs <= rhs + 1e-9))


# ------------------------------------------------------ convergence report


def trig_dictionary():
    """The 16 test functions ``1, cos k t (k <= 8), sin k t (k <= 7)``."""
    fs = [("1", lambda t: np.ones_like(t))]
    fs += [(f"cos{k}", lambda t, k=k: np.cos(k * t)) for k in range(1, 9)]
    fs += [(f"sin{k}", lambda t, k=k: np.sin(k * t)) for k in range(1, 8)]
    return fs


@dataclass(frozen=True)
class ConvergenceReport:
    a1_gap: list
    a2_gap: list
    probe_gap: list
    atom0_gap: list
    inconsistent: bool
    atom0_flag: bool

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


def _shrinks(seq, factor):
    first, last = seq[0], seq[-1]
    return last <= 1e-14 or (first > 0 and last <= first / factor)


def convergence_diagnostic(sequence, target, probes):
    """Gaps of a sequence of disk functions to a target.

    For each member: ``|G_n(0) - G(0)|``, the largest gap over the test
    dictionary ``|sigma_n(g) - sigma(g)|``, the largest pointwise gap over the
    probes, and ``|sigma_n({0}) - sigma({0})|``.  ``inconsistent`` is raised
    when the first two gaps shrink by a factor 4 over the sequence while the
    pointwise gap does not shrink by 2.  ``atom0_flag`` is raised when the
    dictionary gap shrinks but the mass at angle 0 does not; this is the
    coefficient ``a`` failing to follow a weakly convergent sequence.
    """
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    if np.any(np.abs(probes) > 0.9):
        raise DomainError("probe points must satisfy |w| <= 0.9")
    if not np.any(probes == 0):
        raise DomainError("probe set must contain 0")
    seq = list(sequence)
    if not seq:
        raise DomainError("empty sequence")
    dic = trig_dictionary()
    tv = np.array([target.sigma.integrate(f) for _, f in dic])
    tG = evaluate_disk(target, probes)
    t0 = target.sigma.mass_at(0.0)
    a1, a2, pc, m0 = [], [], [], []
    for G in seq:
        a1.append(float(abs(G.G0 - target.G0)))
        gv = np.array([G.sigma.integrate(f) for _, f in dic])
        a2.append(float(np.max(np.abs(gv - tv))))
        pc.append(float(np.max(np.abs(evaluate_disk(G, probes) - tG))))
        m0.append(float(abs(G.sigma.mass_at(0.0) - t0)))
    inconsistent = len(seq) > 1 and _shrinks(a1, 4) and _shrinks(a2, 4) and not _shrinks(pc, 2)
    atom0 = len(seq) > 1 and _shrinks(a2, 4) and not _shrinks(m0, 2)
    return ConvergenceReport(a1, a2, pc, m0, bool(inconsistent), bool(atom0))


def random_circle_measure(rng, n_atoms, mass_scale=1.0):
    return CircleMeasure(rng.uniform(0, TWO_PI, n_atoms), mass_scale * rng.random(n_atoms))
