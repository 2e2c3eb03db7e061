"""Boundary values of -pi cot(pi x) at uniform shifts against the Cauchy(0, pi) density.

    python demos/periodic_cauchy.py [N]
"""

import sys

import numpy as np

from hpcauchy._rng import substream
from hpcauchy.hp_core import Periodic
from hpcauchy.stats import fit_cauchy_quantile, ks_test_cauchy, shift_distribution

N = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
d = shift_distribution(Periodic().boundary, 1000.0, N, substream(7, 0))
q = fit_cauchy_quantile(d)
r = ks_test_cauchy(d, 1j * np.pi)
print(f"N={N}  fitted Gamma=({q.re_gamma:.4f}, {q.im_gamma:.4f})  KS={r.ks:.4f}  p={r.p_value:.3f}")

edges = np.linspace(-15, 15, 16)
counts, _ = np.histogram(d.samples, edges)
mid = 0.5 * (edges[1:] + edges[:-1])
emp = counts / (N * np.diff(edges))
ref = np.pi / (np.pi * (mid**2 + np.pi**2))
print(f"{'x':>7} {'empirical':>10} {'Cauchy':>10}")
for x, e, c in zip(mid, emp, ref):
    print(f"{x:7.1f} {e:10.4f} {c:10.4f}")
