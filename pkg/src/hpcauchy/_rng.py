"""Seeded random streams and order-independent reductions.

Every Monte-Carlo loop in the package draws sample ``i`` from its own
substream ``substream(seed, i)``.  The substream depends only on ``(seed, i)``,
so results do not change with the number of workers or the order in which
samples are produced.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np


def substream(seed, index):
    """Independent generator for sample ``index`` under root ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def fsum_complex(values):
    """Compensated (exactly rounded) sum of a complex array."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real), math.fsum(values.imag))
    return math.fsum(values)


def _call_indexed(args):
    func, seed, index = args
    return func(substream(seed, index))


def map_substreams(func, seed, count, workers=1):
    """Evaluate ``func(substream(seed, i))`` for ``i < count``, in index order.

    ``func`` must be picklable when ``workers > 1``.
    """
    if workers is None or workers <= 1:
        return [func(substream(seed, i)) for i in range(count)]
    tasks = [(func, seed, i) for i in range(count)]
    chunk = max(1, count // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call_indexed, tasks, chunksize=chunk))
