"""Stochastic performance characterization of inference workloads on edge/cloud machines."""

__version__ = "0.1.0"

from .distributions import Exponential, Family, LogNormal, Normal, StudentT, fit_mle, sample
from .errors import InputError, NumericalError, StochPerfError
from .rate_metrics import InstructionCount, RateEstimate, calibrate_instructions, harmonic_mean, mips, point_mips
from .resampling import bootstrap_ci, jackknife_ci, jackknife_pseudo_values
from .scheduling import EtcMatrix, Machine, Task, build_etc, simulate
from .stat_tests import fit_and_select, ks_p_value, ks_statistic, shapiro_wilk
from .traces import TraceSample, TraceSet, parse_trace_csv, serialize_trace_csv, summarize

__all__ = [
    "__version__",
    "Exponential",
    "Family",
    "LogNormal",
    "Normal",
    "StudentT",
    "fit_mle",
    "sample",
    "InputError",
    "NumericalError",
    "StochPerfError",
    "InstructionCount",
    "RateEstimate",
    "calibrate_instructions",
    "harmonic_mean",
    "mips",
    "point_mips",
    "bootstrap_ci",
    "jackknife_ci",
    "jackknife_pseudo_values",
    "EtcMatrix",
    "Machine",
    "Task",
    "build_etc",
    "simulate",
    "fit_and_select",
    "ks_p_value",
    "ks_statistic",
    "shapiro_wilk",
    "TraceSample",
    "TraceSet",
    "parse_trace_csv",
    "serialize_trace_csv",
    "summarize",
]
