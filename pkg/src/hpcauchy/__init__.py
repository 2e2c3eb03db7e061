"""Random Herglotz-Pick functions from point processes and their Cauchy laws."""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    ConvergenceError,
    DomainError,
    FitError,
    PointAtInfinityError,
    PoleError,
    SamplerQualityError,
)
from .hp_core import (
    AtomicMeasure,
    CircleMeasure,
    DiskHP,
    Periodic,
    ProcessTruncated,
    QuasiPeriodic,
    Represented,
    evaluate,
    evaluate_disk,
    from_disk,
    mobius_to_disk,
    mobius_to_halfplane,
    poisson_smooth,
    to_disk,
)
from .point_process import PointSample, counting, delta_N, number_variance, sample_poisson, sample_sine_kernel
from .stieltjes import boundary_value, cocycle_Q, corrected_transform, shift_hp, shift_sample, truncated_transform
