"""Gaussian kernel, Gram matrices and Lipschitz constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgument

KINDS = ("gaussian",)

# rows per block when assembling Gram matrices
_BLOCK = 2048


@dataclass(frozen=True)
class KernelSpec:
    """A bounded kernel together with its constants.

    ``c`` is the constant diagonal k(x, x), ``a`` the value used for
    between-class entries of the ideal Gram matrix.  For the Gaussian
    ``k(x, y) = exp(-|x - y|^2 / sigma^2)`` we have c = 1 and the analytic
    infimum 0 is never attained, so ``a`` is a target convention only.
    """

    sigma: float
    kind: str = "gaussian"
    a: float = 0.0
    c: float = 1.0
    lipschitz: Optional[float] = None
    # distance at which the infimum is attained; never attained for the Gaussian
    eta: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown kernel kind {self.kind!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")
        if self.kind == "gaussian":
            if self.c != 1.0:
                raise InvalidArgument("gaussian kernel has c = 1")
            if not 0.0 <= self.a < 1.0:
                raise InvalidArgument(f"gaussian target infimum a must lie in [0, 1), got {self.a}")
        if not self.c > self.a:
            raise InvalidArgument("kernel constants require c > a")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise InvalidArgument("lipschitz constant must be nonnegative")


def gaussian(sigma, a=0.0):
    """Gaussian KernelSpec with its Lipschitz constant filled in."""
    spec = KernelSpec(sigma=float(sigma), a=float(a))
    return replace(spec, lipschitz=lipschitz_estimate(spec))


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    symmetric: bool = False

    @property
    def shape(self):
        return self.values.shape


def eval_kernel(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InvalidArgument(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    diff = x - y
    return math.exp(-float(diff @ diff) / spec.sigma ** 2)


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidArgument(f"expected a 2-d array, got shape {X.shape}")
    return X


def sq_distances(X, Z):
    """Pairwise squared Euclidean distances via the expanded form, clipped at 0."""
    xx = np.einsum("ij,ij->i", X, X)
    zz = np.einsum("ij,ij->i", Z, Z)
    out = np.empty((X.shape[0], Z.shape[0]))
    for start in range(0, X.shape[0], _BLOCK):
        stop = start + _BLOCK
        block = X[start:stop] @ Z.T
        block *= -2.0
        block += xx[start:stop, None]
        block += zz[None, :]
        out[start:stop] = block
    np.maximum(out, 0.0, out=out)
    return out


def gram_values(spec: KernelSpec, X, Z=None) -> np.ndarray:
    """Raw kernel matrix; ``Z=None`` means Z = X and enforces exact symmetry."""
    X = _as_matrix(X)
    same = Z is None or Z is X
    Z = X if same else _as_matrix(Z)
    if X.shape[1] != Z.shape[1]:
        raise InvalidArgument(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    G = sq_distances(X, Z)
    G *= -1.0 / spec.sigma ** 2
    np.exp(G, out=G)
    np.clip(G, 0.0, 1.0, out=G)
    if same:
        G = 0.5 * (G + G.T)
        np.fill_diagonal(G, 1.0)
    return G


def gram(spec: KernelSpec, X, Z=None) -> GramMatrix:
    """Kernel matrix with entry (m, n) = k(X_m, Z_n)."""
    X = _as_matrix(X)
    if Z is not None and Z is not X:
        Zm = _as_matrix(Z)
        if Zm.shape == X.shape and np.array_equal(Zm, X):
            Z = None
    symmetric = Z is None or Z is X
    return GramMatrix(gram_values(spec, X, None if symmetric else Z), symmetric)


def lipschitz_estimate(spec: KernelSpec) -> float:
    """Bound on the slope of y -> k(x, y).

    For the Gaussian the gradient norm is 2 t exp(-t^2 / sigma^2) / sigma^2
    at distance t, maximized at t = sigma / sqrt(2).
    """
    if spec.kind != "gaussian":
        raise InvalidArgument(f"no Lipschitz estimate for kernel kind {spec.kind!r}")
    return math.sqrt(2.0) * math.exp(-0.5) / spec.sigma
