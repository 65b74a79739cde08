"""Synthetic data, independent oracles and evaluation metrics."""
