"""Eigenvalue moments and reconstruction error for irregularly sampled fields.

Subpackages are imported on demand; ``sampspectra.cli`` pins BLAS thread
counts before numpy loads, so this module must stay free of heavy imports.
"""

__version__ = "0.1.0"
