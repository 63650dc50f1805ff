"""Read-only diagnostics: capacity and generalization bounds, representation quality."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .kernel import gram_values
from .network import KernelNetwork, network_forward, rkhs_norms
from .targets import METRICS, between_class_fraction, class_balance, dissimilarity, ideal_gram


@dataclass
class LayerDiagnostics:
    """Quality of representation ``index`` as seen by the kernel of layer ``index + 1``.

    ``max_rkhs_norm``, ``complexity_bound`` and ``lipschitz`` describe the
    consuming layer.
    """

    index: int
    dissimilarity_to_ideal: dict
    within_class_kernel_mean: float
    within_class_kernel_min: float
    between_class_kernel_mean: float
    between_class_kernel_max: float
    max_rkhs_norm: float
    complexity_bound: float
    lipschitz: float

    def as_dict(self):
        return asdict(self)


def complexity_bound_layer(A, c, N) -> float:
    """Gaussian-complexity bound 2 A sqrt(c / N) for a single kernel layer."""
    if c < 0:
        raise InvalidArgument("c must be nonnegative")
    return 2.0 * A * math.sqrt(c / N)


def complexity_bound_network(A: Sequence[float], L: Sequence[float], d: Sequence[int],
                             base=1.0) -> float:
    """d_1 * prod_{i>=2} (A_i L_i d_i) * base.

    All lists are indexed by layer, first layer first; ``A[0]`` and ``L[0]``
    are ignored.  ``base`` stands in for the complexity of the first-layer
    class, so the result is a relative figure.
    """
    if not len(A) == len(L) == len(d):
        raise InvalidArgument("A, L and d need one entry per layer")
    bound = float(d[0])
    for a_i, l_i, d_i in zip(A[1:], L[1:], d[1:]):
        bound *= a_i * l_i * d_i
    return bound * base


def generalization_bound(empirical_hinge, A, c, N, delta) -> float:
    if not 0 < delta < 1:
        raise InvalidArgument("delta must lie in (0, 1)")
    tail = 9.0 * math.sqrt(math.log(4.0 / delta) / (2.0 * N))
    return empirical_hinge + 2.0 * complexity_bound_layer(A, c, N) + tail


def propagation_bound(eps_i, eps_prev, L_i, norms) -> float:
    """Error of a layer fed by an imperfect upstream representation."""
    sq = float(np.sum(np.square(norms)))
    return eps_i + math.sqrt(eps_prev) * math.sqrt(2.0 * L_i * sq)


def tau_bound_lemma2(labels, c=1.0, a=0.0, positive=1) -> float:
    kappa = class_balance(labels, positive)
    return math.sqrt(2.0 * (c - a)) * min(kappa, 1.0 - kappa)


def tau_bound_lemma3(labels, c, a, d, iota) -> float:
    """Regularization range for the output layer; ``iota`` is supplied by the caller."""
    psi = between_class_fraction(labels)
    return math.sqrt(2.0 * d * (c - a)) * psi * iota


def coefficient_l1(layer) -> float:
    """max_j ||alpha_j||_1, the coefficient bound entering the network bound."""
    return float(np.max(np.abs(layer.alpha).sum(axis=0)))


def network_complexity(net: KernelNetwork, base=1.0) -> float:
    A = [coefficient_l1(layer) for layer in net.layers]
    L = [layer.kernel.lipschitz or 0.0 for layer in net.layers]
    return complexity_bound_network(A, L, net.widths, base)


def kernel_statistics(G, labels):
    """Mean/min of same-class entries and mean/max of cross-class entries, off-diagonal."""
    labels = np.asarray(labels).ravel()
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(labels.size, dtype=bool)
    within = G[same & off]
    between = G[~same]
    if within.size == 0:
        within = np.diag(G)
    nan = float("nan")
    return (float(within.mean()), float(within.min()),
            float(between.mean()) if between.size else nan,
            float(between.max()) if between.size else nan)


def representation_report(net: KernelNetwork, X, labels, index: int) -> LayerDiagnostics:
    """Diagnostics for F^(index)(X) under the kernel of layer ``index + 1``.

    ``index`` runs from 0 (raw input) to depth - 1 (input of the output layer).
    """
    if not 0 <= index < net.depth:
        raise InvalidArgument(f"representation index {index} outside [0, {net.depth - 1}]")
    labels = np.asarray(labels).ravel()
    layer = net.layers[index]
    Z = network_forward(net, X, index)
    G = gram_values(layer.kernel, Z)
    T = ideal_gram(labels, layer.kernel.a, layer.kernel.c)
    A = float(np.max(rkhs_norms(layer)))
    return LayerDiagnostics(
        index,
        {m: dissimilarity(G, T, m) for m in METRICS},
        *kernel_statistics(G, labels),
        max_rkhs_norm=A,
        complexity_bound=complexity_bound_layer(A, layer.kernel.c, labels.size),
        lipschitz=float(layer.kernel.lipschitz or 0.0),
    )
