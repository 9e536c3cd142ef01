"""Terminal-aware metric embeddings, spanners and tree distributions."""

__version__ = "0.1.0"
