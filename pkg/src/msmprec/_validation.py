"""Input validation helpers shared by the estimator API and the functional layer."""

import numpy as np

from .exceptions import DimensionMismatch


def check_channel(H):
    """Validate a channel matrix and return it as a complex (M, N) array.

    Rows are users, columns are transmit antennas; requires 1 <= M <= N and
    finite entries.
    """
    H = np.asarray(H)
    if H.ndim != 2:
        raise DimensionMismatch(f"channel must be 2-D (users x antennas), got shape {H.shape}")
    H = H.astype(complex, copy=False)
    m, n = H.shape
    if m < 1 or n < 1:
        raise DimensionMismatch(f"channel needs at least one user and one antenna, got {H.shape}")
    if m > n:
        raise DimensionMismatch(f"more users than antennas ({m} > {n}) is unsupported")
    if not np.all(np.isfinite(H.real)) or not np.all(np.isfinite(H.imag)):
        raise DimensionMismatch("channel contains non-finite entries")
    return H


def check_symbol_vector(s, n_users):
    """Validate one complex symbol vector against the fitted user count."""
    s = np.asarray(s)
    if s.ndim != 1 or s.shape[0] != n_users:
        raise DimensionMismatch(f"expected symbol vector of length {n_users}, got shape {s.shape}")
    return s.astype(complex, copy=False)


def check_symbol_indices(X, order, n_users):
    """Validate an (n_vectors, M) integer index array into a constellation."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_users:
        raise DimensionMismatch(f"expected (n_vectors, {n_users}) symbol indices, got shape {X.shape}")
    if not np.issubdtype(X.dtype, np.integer):
        raise DimensionMismatch("symbol indices must be integers")
    if X.min(initial=0) < 0 or X.max(initial=0) >= order:
        raise DimensionMismatch(f"symbol indices must lie in [0, {order})")
    return X
