"""scikit-learn compatible wrappers around the transformations and memories."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .experiments import retrieval_label
from .hopfield import (
    PatternSet,
    RetrievalConfig,
    energy,
    make_method,
    retrieve,
    separation_report,
)
from .structured import ActiveSetConfig, FactorGraph, sparsemap
from .transforms import transform


class RegularizedArgmax(TransformerMixin, BaseEstimator):
    """Row-wise sparse argmax of a score matrix.

    Parameters
    ----------
    method : str
        One of ``softmax``, ``entmax``, ``normmax``, ``sparsemax``,
        ``ksubsets``, ``seq-ksubsets``.
    alpha : float, optional
        Entropic index for ``entmax`` / ``normmax``.
    k : int, optional
        Budget for the structured methods.
    edge_score : float
        Pairwise score of ``seq-ksubsets``.
    beta : float
        Inverse temperature applied to the scores.
    """

    def __init__(self, method="sparsemax", alpha=None, k=None, edge_score=0.0, beta=1.0):
        self.method = method
        self.alpha = alpha
        self.k = k
        self.edge_score = edge_score
        self.beta = beta

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        self.method_ = make_method(self.method, self.alpha, self.k, X.shape[1], self.edge_score)
        return self

    def transform(self, X):
        check_is_fitted(self, "method_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} scores per row, got {X.shape[1]}")
        if isinstance(self.method_, FactorGraph):
            return np.array([sparsemap(self.method_, row, self.beta).mu_v for row in X])
        return np.array([transform(self.method_, row, self.beta) for row in X])


class HopfieldMemory(TransformerMixin, BaseEstimator):
    """Associative memory with Hopfield-Fenchel-Young dynamics.

    ``fit`` stores the rows of ``X`` as memory patterns. ``transform`` runs
    the retrieval dynamics from each query and returns the final states;
    ``predict`` returns the index of the exactly retrieved pattern (the bit
    encoding of the retrieved structure for structured methods) or -1.
    """

    def __init__(self, method="sparsemax", alpha=None, k=None, edge_score=0.0, beta=1.0,
                 max_steps=200, fix_tol=1e-10, active_set_iters=100):
        self.method = method
        self.alpha = alpha
        self.k = k
        self.edge_score = edge_score
        self.beta = beta
        self.max_steps = max_steps
        self.fix_tol = fix_tol
        self.active_set_iters = active_set_iters

    def fit(self, X, y=None):
        X = check_array(X)
        self.patterns_ = PatternSet(X)
        self.n_features_in_ = X.shape[1]
        method = make_method(self.method, self.alpha, self.k, X.shape[0], self.edge_score)
        self.config_ = RetrievalConfig(
            method, self.beta, self.max_steps, self.fix_tol,
            ActiveSetConfig(max_iters=self.active_set_iters),
        )
        return self

    def _queries(self, Q):
        check_is_fitted(self, "patterns_")
        Q = check_array(Q)
        if Q.shape[1] != self.n_features_in_:
            raise ValueError(f"expected queries of dimension {self.n_features_in_}, got {Q.shape[1]}")
        return Q

    def retrieve(self, Q, track_energy=False):
        """Full :class:`~hfy.hopfield.RetrievalResult` for each query row."""
        return [retrieve(self.patterns_, q, self.config_, track_energy) for q in self._queries(Q)]

    def transform(self, Q):
        return np.array([r.q_final for r in self.retrieve(Q)])

    def predict(self, Q):
        results = self.retrieve(Q)
        softmax = not self.config_.structured and not self.config_.method.is_sparse
        return np.array([
            retrieval_label(self.patterns_, r, self.config_.structured, softmax)
            for r in results
        ])

    def energy(self, Q):
        return np.array([energy(self.patterns_, q, self.config_) for q in self._queries(Q)])

    def separation(self, candidates=None):
        check_is_fitted(self, "patterns_")
        return separation_report(self.patterns_, self.config_, candidates)
