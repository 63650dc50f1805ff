"""Ideal kernel matrices and Gram-to-target dissimilarities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .kernel import GramMatrix

METRICS = ("l1", "l2", "alignment")


@dataclass(frozen=True)
class IdealGram:
    values: np.ndarray
    labels: np.ndarray
    a: float = 0.0
    c: float = 1.0


def ideal_gram(labels, a=0.0, c=1.0) -> IdealGram:
    """Target Gram: ``c`` for same-label pairs, ``a`` otherwise."""
    labels = np.asarray(labels).ravel()
    if labels.size < 1:
        raise InvalidArgument("need at least one label")
    if not c > a:
        raise InvalidArgument(f"ideal Gram requires c > a (got a={a}, c={c})")
    same = labels[:, None] == labels[None, :]
    return IdealGram(np.where(same, float(c), float(a)), labels, float(a), float(c))


def _values(M):
    if isinstance(M, (GramMatrix, IdealGram)):
        return M.values
    return np.asarray(M, dtype=float)


def dissimilarity(G, T, metric="l1") -> float:
    """Distance between a Gram matrix and its target.

    ``l1`` and ``l2`` are means over all N^2 ordered pairs (diagonal
    included); ``alignment`` is one minus the empirical alignment, so every
    metric is zero at the target.
    """
    G, T = _values(G), _values(T)
    if G.shape != T.shape or G.ndim != 2:
        raise InvalidArgument(f"size mismatch: {G.shape} vs {T.shape}")
    R = G - T
    if metric == "l1":
        return float(np.abs(R).mean())
    if metric == "l2":
        return float((R * R).mean())
    if metric == "alignment":
        denom = np.sqrt(np.sum(G * G) * np.sum(T * T))
        if denom == 0.0:
            return 1.0
        return max(0.0, 1.0 - float(np.sum(G * T) / denom))
    raise InvalidArgument(f"unknown metric {metric!r}")


def dissimilarity_grad(G, T, metric="l1") -> np.ndarray:
    """Derivative of :func:`dissimilarity` with respect to every entry of G.

    Zero residuals under ``l1`` get subgradient 0.
    """
    G, T = _values(G), _values(T)
    if metric == "l1":
        return np.sign(G - T) / G.size
    if metric == "l2":
        return 2.0 * (G - T) / G.size
    if metric == "alignment":
        gn, tn = np.linalg.norm(G), np.linalg.norm(T)
        if gn == 0.0 or tn == 0.0:
            return np.zeros_like(G)
        inner = float(np.sum(G * T))
        return -(T / (gn * tn) - inner * G / (gn ** 3 * tn))
    raise InvalidArgument(f"unknown metric {metric!r}")


def class_balance(labels, positive=1) -> float:
    """Fraction of examples carrying the positive label."""
    labels = np.asarray(labels).ravel()
    return float(np.mean(labels == positive))


def between_class_fraction(labels) -> float:
    """Fraction of ordered pairs (m, n) whose labels differ."""
    labels = np.asarray(labels).ravel()
    return float(np.mean(labels[:, None] != labels[None, :]))
