"""Rescaled GUE traces across the bulk: fitted baricenter against -E0/(2 rho(E0)) + i pi.

    python demos/gue_baricenter.py [samples] [n]
"""

import sys

import numpy as np

from hpcauchy.experiments import run

samples = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
n = int(sys.argv[2]) if len(sys.argv) > 2 else 300
print(f"{'E0':>5} {'Re fit':>8} {'Re pred':>8} {'Im fit':>8} {'KS':>7}")
for e0 in np.arange(-1.5, 1.51, 0.5):
    res, _ = run("cauchy", {"generator": "gue", "n": n, "samples": samples, "e0": float(e0)})
    s = res.summary
    q = s["fit_quantile"]
    print(f"{e0:5.1f} {q['re_gamma']:8.3f} {s['predicted'][0]:8.3f} {q['im_gamma']:8.3f} {s['ks']:7.4f}")
