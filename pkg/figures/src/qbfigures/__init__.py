"""Figure rendering for quantum-battery CSV artifacts.

This package draws publication-style panels from the CSV files and JSON
manifests produced by the qbattery command line; it performs no numeric
computation of its own.
"""

__version__ = "0.1.0"

from .jobs import FigureJob, JobError, PanelSpec, load_job
from .render import render

__all__ = ["FigureJob", "JobError", "PanelSpec", "load_job", "render", "__version__"]
