"""Estimator-style wrappers around the per-vector precoders.

fit() takes the channel matrix, transform() maps arrays of symbol indices to
transmit vectors.  Parameters follow the scikit-learn convention: plain
attributes set in __init__, fitted state suffixed with an underscore,
get_params/set_params inherited from BaseEstimator.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_channel, check_symbol_indices
from .constellation import named_constellation
from .exceptions import ConfigError
from .precoder import (msm_psk, msm_qam, qwf_precode, wf_ce_precode,
                       wf_filter, wf_precode)


def _resolve_ptx(ptx, n_antennas):
    if ptx is None:
        return float(n_antennas)
    if not ptx > 0:
        raise ConfigError("ptx must be positive")
    return float(ptx)


class MsmPrecoder(BaseEstimator, TransformerMixin):
    """Margin-maximizing constant-envelope precoder.

    Parameters
    ----------
    modulation : str, constellation name ("qpsk", "16qam", ...).
    phase_count : int, size Q of the transmit phase alphabet.
    ptx : float or None, total transmit power; None means P_tx = N.
    tol : float, LP feasibility and pricing tolerance.
    max_iters : int or None, simplex iteration budget (None = 50(m+n)).
    pivot_rule : str, "dantzig" or "bland".
    """

    def __init__(self, modulation="qpsk", phase_count=4, ptx=None,
                 tol=1e-9, max_iters=None, pivot_rule="dantzig"):
        self.modulation = modulation
        self.phase_count = phase_count
        self.ptx = ptx
        self.tol = tol
        self.max_iters = max_iters
        self.pivot_rule = pivot_rule

    def fit(self, X, y=None):
        """Store the channel matrix X of shape (M, N)."""
        self.channel_ = check_channel(X)
        self.constellation_ = named_constellation(self.modulation)
        self.n_users_, self.n_antennas_ = self.channel_.shape
        return self

    def precode(self, X):
        """Full per-vector results for symbol-index rows X of shape (V, M)."""
        check_is_fitted(self, "channel_")
        X = check_symbol_indices(X, self.constellation_.order, self.n_users_)
        opts = dict(tol=self.tol, max_iters=self.max_iters,
                    pivot_rule=self.pivot_rule)
        solve = msm_psk if self.constellation_.kind == "psk" else msm_qam
        return [solve(self.channel_, self.constellation_.points[row],
                      self.phase_count, self.constellation_, **opts)
                for row in X]

    def transform(self, X):
        """Transmit vectors of shape (V, N), scaled to the configured power."""
        results = self.precode(X)
        scale = np.sqrt(_resolve_ptx(self.ptx, self.n_antennas_) / self.n_antennas_)
        return scale * np.vstack([r.t for r in results])


class WfPrecoder(BaseEstimator, TransformerMixin):
    """Regularized zero-forcing baseline with optional envelope projection.

    quantizer: "none" keeps the linear output, "ce" projects phases onto the
    continuous circle, "qce" additionally quantizes to the Q-point alphabet.
    """

    def __init__(self, modulation="qpsk", quantizer="none", phase_count=4,
                 ptx=None, noise_var=1.0):
        self.modulation = modulation
        self.quantizer = quantizer
        self.phase_count = phase_count
        self.ptx = ptx
        self.noise_var = noise_var

    def fit(self, X, y=None):
        if self.quantizer not in ("none", "ce", "qce"):
            raise ConfigError(f"unknown quantizer {self.quantizer!r}")
        self.channel_ = check_channel(X)
        self.constellation_ = named_constellation(self.modulation)
        self.n_users_, self.n_antennas_ = self.channel_.shape
        self.ptx_ = _resolve_ptx(self.ptx, self.n_antennas_)
        self.filter_, self.beta_ = wf_filter(
            self.channel_, self.ptx_, self.constellation_.avg_power,
            self.noise_var)
        return self

    def transform(self, X):
        """Transmit vectors of shape (V, N) for symbol-index rows X."""
        check_is_fitted(self, "channel_")
        X = check_symbol_indices(X, self.constellation_.order, self.n_users_)
        S = self.constellation_.points[X]
        if self.quantizer == "none":
            return wf_precode(self.channel_, S, self.ptx_, self.constellation_,
                              self.noise_var)
        if self.quantizer == "ce":
            return wf_ce_precode(self.channel_, S, self.ptx_,
                                 self.constellation_, self.noise_var)
        return qwf_precode(self.channel_, S, self.phase_count, self.ptx_,
                           self.constellation_, self.noise_var)
