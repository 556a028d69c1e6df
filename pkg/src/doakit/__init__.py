"""Direction-of-arrival estimation toolkit.

Classical subspace estimators (MUSIC, Bartlett) alongside a trainable
pipeline that learns a surrogate covariance from raw snapshots and is
optimized end to end through the eigendecomposition.
"""

__version__ = "0.1.0"
