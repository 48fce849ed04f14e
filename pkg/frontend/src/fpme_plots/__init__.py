"""Batch figure rendering for the solver's CSV output files.

Consumes only the documented CSV schemas (snapshots, per-step diagnostics,
sweep error matrices); no coupling to solver internals.
"""

__version__ = "0.1.0"
