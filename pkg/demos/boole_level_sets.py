"""Level sets of a finite Stieltjes transform: measure of {F > t} against mu(R)/t.

    python demos/boole_level_sets.py
"""

import numpy as np

from hpcauchy.hp_core import AtomicMeasure
from hpcauchy.stats import boole_verify

rng = np.random.default_rng(7)
mu = AtomicMeasure(rng.uniform(-20, 20, 12), rng.uniform(0.1, 3, 12))
print(f"mu(R) = {mu.weights.sum():.6f}")
print(f"{'t':>8} {'|{F>t}|':>14} {'mu(R)/t':>14} {'rel err':>10}")
for t in (0.01, 0.1, 1.0, 10.0, 100.0):
    r = boole_verify(mu, t)
    print(f"{t:8.2f} {r.level_set_measure:14.9f} {r.exact:14.9f} {r.relative_error:10.1e}")
