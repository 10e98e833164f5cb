"""RSS feature representations: positive, exponential and powed.

Raw fingerprints (dBm, with the NOT_DETECTED sentinel) are mapped to
non-negative feature vectors before any distance computation. All three
mappings send NOT_DETECTED to exactly 0.0 and are strictly increasing in the
detected RSS value.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ipsbench.data import DEFAULT_MIN_RSS, NOT_DETECTED

REPRESENTATION_KINDS = ("positive", "exponential", "powed")

DEFAULT_ALPHA = 24.0
DEFAULT_BETA = math.e


class RssRepresentation(BaseEstimator, TransformerMixin):
    """Stateless transformer from raw RSS matrices to feature matrices.

    Parameters
    ----------
    kind : {"positive", "exponential", "powed"}
    min_rss : minimal legal RSS value in dBm (must be negative).
    alpha : scale of the exponential representation.
    beta : exponent of the powed representation.
    """

    def __init__(
        self,
        kind: str = "positive",
        min_rss: float = DEFAULT_MIN_RSS,
        alpha: float = DEFAULT_ALPHA,
        beta: float = DEFAULT_BETA,
    ):
        self.kind = kind
        self.min_rss = min_rss
        self.alpha = alpha
        self.beta = beta

    def _validate_params(self) -> None:
        if self.kind not in REPRESENTATION_KINDS:
            raise ValueError(
                f"unknown representation {self.kind!r}; expected one of {REPRESENTATION_KINDS}"
            )
        if not self.min_rss < 0:
            raise ValueError("min_rss must be negative")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")

    def fit(self, X=None, y=None) -> "RssRepresentation":
        self._validate_params()
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Transform raw RSS (vector or matrix) to non-negative features."""
        self._validate_params()
        X = np.asarray(X, dtype=float)
        detected = X != NOT_DETECTED
        bad = detected & (X < self.min_rss)
        if np.any(bad):
            slot = tuple(int(i) for i in np.argwhere(bad)[0])
            raise ValueError(
                f"detected RSS {X[slot]} below min_rss={self.min_rss} at slot {slot}"
            )
        shifted = np.where(detected, X - self.min_rss, 0.0)
        if self.kind == "positive":
            out = shifted
        elif self.kind == "exponential":
            out = np.exp(shifted / self.alpha) / math.exp(-self.min_rss / self.alpha)
            out = np.where(detected, out, 0.0)
        else:  # powed
            out = shifted**self.beta / (-self.min_rss) ** self.beta
        return out


def apply_representation(fingerprint: np.ndarray, params: RssRepresentation) -> np.ndarray:
    """Functional form of :meth:`RssRepresentation.transform` for one vector."""
    return params.transform(np.asarray(fingerprint, dtype=float))
