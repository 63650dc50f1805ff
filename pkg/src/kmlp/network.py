"""Kernel layers, their composition into a kMLP, and layer construction."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from .errors import InvalidArgument, NumericalError
from .kernel import KernelSpec, gram_values


@dataclass
class KernelLayer:
    """One layer of kernel machines sharing a kernel and a set of centers.

    Output j on input x is ``sum_m alpha[m, j] k(x, centers[m]) + bias[j]``.
    ``objective`` records the metric or loss the layer was trained with.
    """

    centers: np.ndarray
    alpha: np.ndarray
    bias: np.ndarray
    kernel: KernelSpec
    objective: str = ""

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.ndim == 1:
            self.alpha = self.alpha[:, None]
        self.bias = np.asarray(self.bias, dtype=float).ravel()
        M = self.centers.shape[0]
        if M < 1:
            raise InvalidArgument("a layer needs at least one center")
        if self.alpha.shape[0] != M:
            raise InvalidArgument(f"alpha has {self.alpha.shape[0]} rows for {M} centers")
        if self.bias.shape[0] != self.alpha.shape[1]:
            raise InvalidArgument("bias length must equal the output width")

    @property
    def d_in(self) -> int:
        return self.centers.shape[1]

    @property
    def d_out(self) -> int:
        return self.alpha.shape[1]

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.bias)))

    def copy(self) -> "KernelLayer":
        return KernelLayer(self.centers.copy(), self.alpha.copy(), self.bias.copy(),
                           self.kernel, self.objective)


@dataclass
class KernelNetwork:
    layers: List[KernelLayer] = field(default_factory=list)
    frozen_upto: int = 0

    def __post_init__(self):
        for i in range(1, len(self.layers)):
            if self.layers[i - 1].d_out != self.layers[i].d_in:
                raise InvalidArgument(
                    f"layer {i} outputs width {self.layers[i - 1].d_out} "
                    f"but layer {i + 1} expects {self.layers[i].d_in}")
        if not 0 <= self.frozen_upto <= len(self.layers):
            raise InvalidArgument(f"frozen_upto={self.frozen_upto} out of range")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> List[int]:
        return [layer.d_out for layer in self.layers]


def layer_forward(layer: KernelLayer, X, K=None) -> np.ndarray:
    """Evaluate the layer on rows of X.  ``K`` may carry a precomputed gram(X, centers)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != layer.d_in:
        raise InvalidArgument(f"input width {X.shape[1]} != layer input width {layer.d_in}")
    if K is None:
        K = gram_values(layer.kernel, X, layer.centers)
    return K @ layer.alpha + layer.bias


def network_forward(net: KernelNetwork, X, upto: Optional[int] = None) -> np.ndarray:
    """Representation after ``upto`` layers; ``upto=0`` returns X unchanged."""
    if upto is None:
        upto = net.depth
    if not 0 <= upto <= net.depth:
        raise InvalidArgument(f"upto={upto} outside [0, {net.depth}]")
    Z = np.asarray(X, dtype=float)
    for layer in net.layers[:upto]:
        Z = layer_forward(layer, Z)
    return Z


def rkhs_norms(layer: KernelLayer, Gcc=None) -> np.ndarray:
    """Per-output RKHS norms sqrt(alpha_j' G alpha_j) over the center Gram."""
    if Gcc is None:
        Gcc = gram_values(layer.kernel, layer.centers)
    quad = np.einsum("mj,mj->j", layer.alpha, Gcc @ layer.alpha)
    return np.sqrt(np.maximum(quad, 0.0))


def init_alpha(n_centers, d_out, rng) -> np.ndarray:
    bound = 1.0 / math.sqrt(n_centers)
    return rng.uniform(-bound, bound, size=(n_centers, d_out))


def init_layer(kernel: KernelSpec, centers, d_out: int, seed=None) -> KernelLayer:
    """Untrained layer with small uniform coefficients and zero bias."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    rng = np.random.default_rng(seed)
    return KernelLayer(centers.copy(), init_alpha(centers.shape[0], d_out, rng),
                       np.zeros(d_out), kernel)


def identity_init(kernel: KernelSpec, X, ridge=None):
    """Layer reproducing its input on the training rows.

    Solves ``(G + ridge I) alpha = X`` with G the Gram over X, centers = X and
    zero bias.  ``ridge=None`` uses a jitter of 1e-8 * trace(G) / N.  Returns
    ``(layer, residual)`` where residual is the max-abs reconstruction error.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N = X.shape[0]
    G = gram_values(kernel, X)
    if ridge is None:
        ridge = 1e-8 * np.trace(G) / N
    if ridge < 0:
        raise InvalidArgument("ridge must be nonnegative")
    duplicates = np.unique(X, axis=0).shape[0] < N
    if duplicates:
        warnings.warn("identity_init: input has duplicate rows, Gram matrix is singular",
                      RuntimeWarning, stacklevel=2)
        if ridge == 0:
            raise NumericalError("singular Gram matrix (duplicate rows) at ridge 0",
                                 condition=math.inf)
    A = G + ridge * np.eye(N)
    try:
        factor = scipy.linalg.cho_factor(A, check_finite=False)
        alpha = scipy.linalg.cho_solve(factor, X, check_finite=False)
    except np.linalg.LinAlgError:
        raise NumericalError("Gram system is not positive definite; increase ridge",
                             condition=float(np.linalg.cond(A))) from None
    layer = KernelLayer(X.copy(), alpha, np.zeros(X.shape[1]), kernel)
    residual = float(np.max(np.abs(G @ alpha - X)))
    if not np.isfinite(residual):
        raise NumericalError("Gram system solve produced non-finite coefficients",
                             condition=float(np.linalg.cond(A)))
    return layer, residual


def draw_centers(labels, fraction, seed=None, max_draws=10000) -> np.ndarray:
    """Sorted indices of a uniform random subset covering every class.

    Draws ceil(fraction * N) rows without replacement, redrawing until every
    label appears.  After ``max_draws`` failures one row per class is forced
    in and the rest is filled uniformly.
    """
    labels = np.asarray(labels).ravel()
    N = labels.size
    if not 0 < fraction <= 1:
        raise InvalidArgument(f"fraction must lie in (0, 1], got {fraction}")
    classes = np.unique(labels)
    size = min(N, math.ceil(fraction * N - 1e-9))
    if size < classes.size:
        raise InvalidArgument(
            f"keeping {size} of {N} centers cannot cover {classes.size} classes")
    if size == N:
        return np.arange(N)
    rng = np.random.default_rng(seed)
    for _ in range(max_draws):
        idx = rng.choice(N, size=size, replace=False)
        if np.unique(labels[idx]).size == classes.size:
            return np.sort(idx)
    forced = np.array([rng.choice(np.flatnonzero(labels == k)) for k in classes])
    rest = np.setdiff1d(np.arange(N), forced)
    extra = rng.choice(rest, size=size - forced.size, replace=False)
    return np.sort(np.concatenate([forced, extra]))


def subsample_centers(template: KernelLayer, X, labels, fraction, seed=None) -> KernelLayer:
    """Fresh untrained layer like ``template`` whose centers are a random subset of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    idx = draw_centers(labels, fraction, seed)
    layer = init_layer(template.kernel, X[idx], template.d_out, seed)
    layer.objective = template.objective
    return layer
