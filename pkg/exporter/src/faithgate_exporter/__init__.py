"""Batch inference over saved model checkpoints, emitting prediction-set CSVs.

This package is deliberately thin: it loads checkpoints, scores a dataset,
and writes the interchange CSV that the audit tooling ingests.  It computes
no metrics of its own and talks to the audit side only through files.
"""

from .export import ExportJob, export, export_to_file
from .models import LoadedModel, load_model

__all__ = ["ExportJob", "LoadedModel", "export", "export_to_file", "load_model"]
