"""Stationary symmetric alpha-stable processes through their flow representations."""

__version__ = "0.1.0"

from .stable_core import (DivergenceError, RngStream, StabilityIndex, StableScale,  # noqa: E402
                          sample_sas, series_constant)
from .kernels import KernelSpec, StepFunction, eval_kernel, kernel_norm  # noqa: E402
from .catalog import CATALOG, CatalogEntry, get_entry, list_catalog  # noqa: E402
from .classify import ClassifierConfig, classify_point, classify_process, decompose  # noqa: E402
from .simulate import SeriesConfig, simulate_series  # noqa: E402
from .diagnostics import ergodicity_functional, gross_criterion, maxima_scaling  # noqa: E402

__all__ = [
    "__version__", "DivergenceError", "RngStream", "StabilityIndex", "StableScale", "sample_sas",
    "series_constant", "KernelSpec", "StepFunction", "eval_kernel", "kernel_norm", "CATALOG",
    "CatalogEntry", "get_entry", "list_catalog", "ClassifierConfig", "classify_point",
    "classify_process", "decompose", "SeriesConfig", "simulate_series", "ergodicity_functional",
    "gross_criterion", "maxima_scaling",
]
