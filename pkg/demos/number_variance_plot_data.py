"""Number variance of Poisson and sine-kernel samples, written as CSV for plotting.

    python demos/number_variance_plot_data.py [samples] > nv.csv
"""

import sys

import numpy as np

from hpcauchy.experiments import sine_or_poisson_samples
from hpcauchy.point_process import number_variance_from_samples, sine_kernel_number_variance

count = int(sys.argv[1]) if len(sys.argv) > 1 else 40
xs = np.geomspace(5.0, 200.0, 10)
poi = number_variance_from_samples(sine_or_poisson_samples("poisson", 100.0, 0.05, 1.0, count, 7), xs, "sliding")
sk = number_variance_from_samples(sine_or_poisson_samples("sine-kernel", 100.0, 0.05, 1.0, count, 7), xs, "sliding")
print("x,poisson,sine_kernel,sine_kernel_exact")
for x, a, b in zip(xs, poi.variance, sk.variance):
    print(f"{x:.4f},{a:.5f},{b:.5f},{sine_kernel_number_variance(x):.5f}")
