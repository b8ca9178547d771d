"""Categorical modularity for word embeddings."""

__version__ = "0.1.0"
