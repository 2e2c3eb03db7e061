import itertools
import json

import numpy as np
import pytest
from scipy.optimize import linprog

from hpcauchy.errors import DomainError
from hpcauchy.hp_core import CircleMeasure, DiskHP
from hpcauchy.metrics import (
    arc_distance,
    convergence_diagnostic,
    flat_distance,
    gbound_check,
    normalized_wasserstein,
    random_circle_measure,
    trig_dictionary,
    variational_distance,
    wasserstein_circle,
)

# ------------------------------------------------------------ variational


def test_variational_examples():
    s = CircleMeasure([0.5, 2.0], [1.0, 0.3])
    assert variational_distance(s, s) == 0
    assert variational_distance(CircleMeasure([0.1], [1.0]), CircleMeasure([2.0], [1.0])) == 2
    assert variational_distance(CircleMeasure([1.0], [1.0]), CircleMeasure([1.0], [3.0])) == 2


def test_variational_merges_close_angles():
    a = CircleMeasure([1.0], [1.0])
    b = CircleMeasure([1.0 + 1e-13], [1.0])
    assert variational_distance(a, b) == pytest.approx(0.0, abs=1e-12)


# ------------------------------------------------------------- Wasserstein


def test_wasserstein_examples():
    s = CircleMeasure([0.5, 2.0], [0.4, 0.6])
    assert wasserstein_circle(s, s) == 0
    th = 6.1
    a, b = CircleMeasure([th], [1.0]), CircleMeasure([th + 0.3], [1.0])
    assert wasserstein_circle(a, b) == pytest.approx(0.3, abs=1e-12)
    a, b = CircleMeasure([0.2], [1.0]), CircleMeasure([0.2 + np.pi], [1.0])
    assert wasserstein_circle(a, b) == pytest.approx(np.pi, abs=1e-12)


def test_wasserstein_scales_with_mass():
    a, b = CircleMeasure([0.0], [2.5]), CircleMeasure([1.0], [2.5])
    assert wasserstein_circle(a, b) == pytest.approx(2.5)
    assert normalized_wasserstein(a, b) == pytest.approx(1.0)


def test_wasserstein_mass_mismatch():
    with pytest.raises(DomainError):
        wasserstein_circle(CircleMeasure([0.0], [1.0]), CircleMeasure([1.0], [2.0]))


def _transport_lp(a, b):
    # independent oracle: the transport LP with arc-length costs
    n1, n2 = len(a), len(b)
    C = arc_distance(a.angles[:, None], b.angles[None, :]).ravel()
    A = np.zeros((n1 + n2, n1 * n2))
    for i in range(n1):
        A[i, i * n2 : (i + 1) * n2] = 1
    for j in range(n2):
        A[n1 + j, j::n2] = 1
    res = linprog(C, A_eq=A, b_eq=np.concatenate((a.masses, b.masses)), bounds=(0, None), method="highs")
    return res.fun


def test_wasserstein_matches_transport_lp():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = random_circle_measure(rng, rng.integers(1, 7)).normalized()
        b = random_circle_measure(rng, rng.integers(1, 7)).normalized()
        assert wasserstein_circle(a, b) == pytest.approx(_transport_lp(a, b), abs=1e-9)


def test_wasserstein_metric_properties():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        p, q, r = (random_circle_measure(rng, rng.integers(1, 8)).normalized() for _ in range(3))
        assert wasserstein_circle(p, q) == pytest.approx(wasserstein_circle(q, p), abs=1e-12)
        assert wasserstein_circle(p, r) <= wasserstein_circle(p, q) + wasserstein_circle(q, r) + 1e-9
        assert wasserstein_circle(p, p) == 0


# -------------------------------------------------------------------- flat


def _w_two(t1, x1, t2, x2):
    # equal-mass transport between two 2-atom measures: one free coupling entry
    m = t1.sum()
    if m == 0:
        return 0.0
    d = arc_distance(x1[:, None], x2[None, :])
    lo, hi = max(0.0, t1[0] - t2[1]), min(t1[0], t2[0])
    best = np.inf
    for g in (lo, hi):
        G = np.array([[g, t1[0] - g], [t2[0] - g, t2[1] - t1[0] + g]])
        best = min(best, float(np.sum(G * d)))
    return best


def _flat_brute(x1, m1, x2, m2, step=0.125):
    # grid over surrogate masses on the same supports, allowed to exceed the originals
    top = max(m1.max(), m2.max()) + 2 * step
    grid = np.arange(0, top + step / 2, step)
    best = np.inf
    for a0, a1, b0 in itertools.product(grid, grid, grid):
        b1 = a0 + a1 - b0
        if b1 < -1e-12:
            continue
        t1, t2 = np.array([a0, a1]), np.array([b0, b1])
        cost = np.abs(m1 - t1).sum() + np.abs(m2 - t2).sum() + _w_two(t1, x1, t2, x2)
        best = min(best, cost)
    return best


def test_flat_against_brute_force_two_atoms():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x1, x2 = rng.uniform(0, 2 * np.pi, 2), rng.uniform(0, 2 * np.pi, 2)
        m1, m2 = rng.integers(1, 9, 2) * 0.125, rng.integers(1, 9, 2) * 0.125
        got = flat_distance(CircleMeasure(x1, m1), CircleMeasure(x2, m2))
        assert got == pytest.approx(_flat_brute(x1, m1, x2, m2), abs=1e-6)


def test_flat_examples():
    s = CircleMeasure([0.3, 4.0], [0.5, 1.5])
    assert flat_distance(s, s) == pytest.approx(0.0, abs=1e-12)
    more = CircleMeasure([0.3, 4.0, 5.5], [0.5, 1.5, 0.7])
    assert flat_distance(s, more) <= 0.7 + 1e-12
    assert flat_distance(s, CircleMeasure()) == pytest.approx(2.0)


def test_flat_bounds_on_random_instances():
    rng = np.random.default_rng(3)
    for k in (3, 12, 20):
        for _ in range(50):
            s1, s2 = random_circle_measure(rng, k), random_circle_measure(rng, rng.integers(1, k + 1))
            f = flat_distance(s1, s2)
            gap = abs(s1.total_mass - s2.total_mass)
            assert f <= variational_distance(s1, s2) + 1e-9
            assert f <= gap + min(s1.total_mass, s2.total_mass) * normalized_wasserstein(s1, s2) + 1e-9


def test_flat_heuristic_is_upper_bound_of_exact():
    rng = np.random.default_rng(4)
    for _ in range(30):
        s1, s2 = random_circle_measure(rng, 6), random_circle_measure(rng, 6)
        assert flat_distance(s1, s2) <= flat_distance(s1, s2, max_exact_atoms=0) + 1e-9


# ----------------------------------------------------------------- G bound


def test_gbound_examples():
    s = CircleMeasure([1.0, 3.0], [0.4, 0.2])
    g = gbound_check(DiskHP(s, 0.5), DiskHP(s, 0.5), 0.3j)
    assert g.lhs == 0 and g.rhs == 0 and g.holds
    g = gbound_check(DiskHP(s, 1.5), DiskHP(s, 0.5), 0.6 + 0.2j)
    assert g.lhs == pytest.approx(1.0) and g.rhs == pytest.approx(1.0) and g.holds
    with pytest.raises(DomainError):
        gbound_check(DiskHP(s), DiskHP(s), 1.0)


def test_gbound_random_pairs():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        G1 = DiskHP(random_circle_measure(rng, rng.integers(1, 9)), rng.normal())
        G2 = DiskHP(random_circle_measure(rng, rng.integers(1, 9)), rng.normal())
        w = 0.9 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        assert gbound_check(G1, G2, w).holds


# ------------------------------------------------------------ convergence


def test_trig_dictionary_size():
    assert len(trig_dictionary()) == 16


def test_convergence_constant_sequence():
    G = DiskHP(CircleMeasure([1.0, 2.0], [0.3, 0.4]), 0.2)
    r = convergence_diagnostic([G, G, G], G, [0.0, 0.5, 0.8j])
    assert max(r.a1_gap + r.a2_gap + r.probe_gap + r.atom0_gap) == 0
    assert not r.inconsistent and not r.atom0_flag
    assert json.loads(r.to_json())["a1_gap"] == [0.0, 0.0, 0.0]


def test_convergence_moving_atom():
    ns = [4, 8, 16, 32, 64]
    seq = [DiskHP(CircleMeasure([1.0 / n], [1.0])) for n in ns]
    target = DiskHP(CircleMeasure([0.0], [1.0]))
    r = convergence_diagnostic(seq, target, [0.0, 0.5, -0.5, 0.7j])
    # the mass is fixed, so G_n(0) = G(0) exactly
    assert max(r.a1_gap) == pytest.approx(0.0, abs=1e-15)
    for gaps in (r.a2_gap, r.probe_gap):
        ratios = np.array(gaps[:-1]) / np.array(gaps[1:])
        assert np.all(np.abs(ratios - 2) < 0.2)
    assert not r.inconsistent


def test_convergence_flags_mass_at_angle_zero():
    # atoms approach angle 0 from the side; the target keeps its mass at 0 as the coefficient a
    seq = [DiskHP(CircleMeasure([1.0 / n], [1.0])) for n in (4, 16, 64, 256)]
    target = DiskHP(CircleMeasure([0.0], [1.0]))
    r = convergence_diagnostic(seq, target, [0.0, 0.5])
    assert r.atom0_flag and r.atom0_gap == [1.0] * 4


def test_convergence_probe_validation():
    G = DiskHP(CircleMeasure([1.0], [1.0]))
    with pytest.raises(DomainError):
        convergence_diagnostic([G], G, [0.5])
    with pytest.raises(DomainError):
        convergence_diagnostic([G], G, [0.0, 0.95])
