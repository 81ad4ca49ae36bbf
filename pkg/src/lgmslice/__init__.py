"""Slice sampling of covariance hyperparameters in latent Gaussian models."""

__version__ = "0.1.0"
