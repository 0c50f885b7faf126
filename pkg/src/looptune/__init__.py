"""looptune: loop-transformation autotuning toolkit.

Tokenizes C loop nests, enumerates and applies semantics-preserving loop
transformations, trains a convolutional regressor to predict per-
transformation speedup, and ranks transformations for a given loop.
"""

__version__ = "0.1.0"
