"""Desk-scale multilingual scene text editing with latent diffusion."""

__version__ = "0.1.0"
