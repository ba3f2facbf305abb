"""Segmented knowledge-graph embeddings: scoring, training, evaluation."""
