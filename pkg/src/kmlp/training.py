"""Layer-wise greedy training of kernel networks.

Hidden layer i is fit so that the Gram matrix of its outputs under the
*next* layer's kernel approaches the ideal Gram of the labels; the output
layer is fit as a classifier.  Each trained layer is frozen before the next
one starts, so gradients never cross layer boundaries.
"""
from __future__ import annotations

import json
import logging
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import expit

from .errors import DivergenceError, InvalidArgument, InvalidState
from .kernel import KernelSpec, gaussian, gram_values
from .network import (KernelLayer, KernelNetwork, draw_centers, identity_init,
                      init_layer, layer_forward, network_forward)
from .seeding import derive_seed
from .targets import METRICS, dissimilarity, dissimilarity_grad, ideal_gram

log = logging.getLogger(__name__)

OUTPUT_LOSSES = ("hinge", "cross_entropy")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 100
    batch_size: int = 64
    tau_prime: float = 0.0
    metric: str = "l1"
    output_loss: str = "cross_entropy"
    # epochs without validation improvement before stopping; 0 disables
    patience: int = 10
    seed: int = 0
    # fraction of training rows kept as centers, per layer
    retention: Optional[List[float]] = None
    # "random" or "identity" (identity only where input and output widths agree)
    init: str = "random"
    # set on which the early-stopping metric is measured: "validation" or "train"
    selection: str = "validation"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidArgument("learning_rate must be positive")
        if self.epochs < 0:
            raise InvalidArgument("epochs must be nonnegative")
        if self.batch_size < 2:
            raise InvalidArgument("batch_size must be at least 2 for pair losses")
        if self.tau_prime < 0:
            raise InvalidArgument("tau_prime must be nonnegative")
        if self.metric not in METRICS:
            raise InvalidArgument(f"metric must be one of {METRICS}")
        if self.output_loss not in OUTPUT_LOSSES:
            raise InvalidArgument(f"output_loss must be one of {OUTPUT_LOSSES}")
        if self.patience < 0:
            raise InvalidArgument("patience must be nonnegative")
        if self.init not in ("random", "identity"):
            raise InvalidArgument("init must be 'random' or 'identity'")
        if self.selection not in ("validation", "train"):
            raise InvalidArgument("selection must be 'validation' or 'train'")
        if self.retention is not None:
            self.retention = [float(r) for r in self.retention]
            if any(not 0 < r <= 1 for r in self.retention):
                raise InvalidArgument("retention fractions must lie in (0, 1]")
            if self.retention and self.retention[0] != 1.0:
                raise InvalidArgument("the input layer keeps all centers (retention[0] = 1)")


@dataclass
class NetSpec:
    """Architecture: output width and Gaussian width of every layer."""

    widths: List[int]
    sigmas: List[float]
    a: float = 0.0

    def __post_init__(self):
        self.widths = [int(w) for w in self.widths]
        self.sigmas = [float(s) for s in self.sigmas]
        if not self.widths:
            raise InvalidArgument("need at least one layer")
        if len(self.widths) != len(self.sigmas):
            raise InvalidArgument("widths and sigmas must have one entry per layer")
        if any(w < 1 for w in self.widths):
            raise InvalidArgument("layer widths must be positive")

    @property
    def depth(self):
        return len(self.widths)

    def kernel(self, i) -> KernelSpec:
        return gaussian(self.sigmas[i], self.a)


@dataclass
class TrainReport:
    layer: int = 0
    kind: str = "hidden"
    epochs: List[int] = field(default_factory=list)
    train_objective: List[Optional[float]] = field(default_factory=list)
    validation_metric: List[float] = field(default_factory=list)
    chosen_epoch: Optional[int] = None
    final_dissimilarity: dict = field(default_factory=dict)
    final_norms: List[float] = field(default_factory=list)
    seconds: float = field(default=0.0, compare=False)
    timestamps: List[float] = field(default_factory=list, compare=False)

    def records(self):
        for i, epoch in enumerate(self.epochs):
            yield {"epoch": epoch, "train_objective": self.train_objective[i],
                   "validation_metric": self.validation_metric[i],
                   "timestamp": self.timestamps[i] if i < len(self.timestamps) else None}

    def write(self, path):
        """One JSON record per epoch followed by a summary record."""
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec) + "\n")
            summary = {k: v for k, v in asdict(self).items()
                       if k not in ("epochs", "train_objective", "validation_metric", "timestamps")}
            summary["summary"] = True
            fh.write(json.dumps(summary) + "\n")


# ---------------------------------------------------------------- risks

def hinge_risk(scores, labels) -> float:
    """Mean of max(0, 1 - y s) with labels in {+1, -1}."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    if scores.shape != labels.shape:
        raise InvalidArgument("scores and labels differ in length")
    return float(np.mean(np.maximum(0.0, 1.0 - labels * scores)))


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy_risk(logits, labels) -> float:
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    labels = np.asarray(labels).ravel().astype(int)
    if logits.shape[1] < 2:
        raise InvalidArgument("cross entropy needs at least two classes")
    return float(-np.mean(_log_softmax(logits)[np.arange(labels.size), labels]))


def signed_labels(labels) -> np.ndarray:
    """Class 1 maps to +1 and class 0 to -1."""
    return np.where(np.asarray(labels).ravel() == 1, 1.0, -1.0)


def _binary_logits(scores):
    s = scores.ravel()
    return np.column_stack([np.zeros_like(s), s])


# ------------------------------------------------- objectives and gradients

def _norm_term(alpha, Gcc, tau):
    """tau * max_j ||w_j|| and its gradient; ties go to the lowest index."""
    if tau == 0.0:
        return 0.0, np.zeros_like(alpha)
    GA = Gcc @ alpha
    norms = np.sqrt(np.maximum(np.einsum("mj,mj->j", alpha, GA), 0.0))
    j = int(np.argmax(norms))
    grad = np.zeros_like(alpha)
    if norms[j] > 0:
        grad[:, j] = tau * GA[:, j] / norms[j]
    return tau * float(norms[j]), grad


def _hidden_terms(alpha, bias, K, T, next_kernel, metric):
    """Dissimilarity of the output Gram to T, with gradients in (alpha, bias)."""
    Z = K @ alpha + bias
    G = gram_values(next_kernel, Z)
    value = dissimilarity(G, T, metric)
    R = dissimilarity_grad(G, T, metric)
    W = (R + R.T) * G
    dZ = (-2.0 / next_kernel.sigma ** 2) * (W.sum(axis=1)[:, None] * Z - W @ Z)
    return value, K.T @ dZ, dZ.sum(axis=0)


def _output_terms(alpha, bias, K, labels, loss):
    S = K @ alpha + bias
    N = S.shape[0]
    labels = np.asarray(labels).ravel().astype(int)
    if S.shape[1] == 1:
        if np.any((labels < 0) | (labels > 1)):
            raise InvalidArgument("a single-output layer needs labels in {0, 1}")
        if loss == "hinge":
            y = signed_labels(labels)
            margin = 1.0 - y * S[:, 0]
            value = float(np.mean(np.maximum(0.0, margin)))
            dS = np.where(margin > 0, -y, 0.0)[:, None] / N
        else:
            value = cross_entropy_risk(_binary_logits(S), labels)
            p = expit(S[:, 0])
            dS = (p - labels)[:, None] / N
    else:
        if loss == "hinge":
            raise InvalidArgument("hinge loss needs a single-output layer")
        if np.any((labels < 0) | (labels >= S.shape[1])):
            raise InvalidArgument(f"labels must lie in 0..{S.shape[1] - 1}")
        logp = _log_softmax(S)
        value = float(-np.mean(logp[np.arange(N), labels]))
        dS = np.exp(logp)
        dS[np.arange(N), labels] -= 1.0
        dS /= N
    return value, K.T @ dS, dS.sum(axis=0)


def _objective(kind, alpha, bias, K, Gcc, labels, config, next_kernel=None, T=None):
    if kind == "hidden":
        if T is None:
            T = ideal_gram(labels, next_kernel.a, next_kernel.c).values
        value, ga, gb = _hidden_terms(alpha, bias, K, T, next_kernel, config.metric)
    elif kind == "output":
        value, ga, gb = _output_terms(alpha, bias, K, labels, config.output_loss)
    else:
        raise InvalidArgument(f"unknown objective kind {kind!r}")
    reg, greg = _norm_term(alpha, Gcc, config.tau_prime)
    return value + reg, ga + greg, gb


def hidden_objective(layer: KernelLayer, X, labels, config: TrainConfig,
                     next_kernel: KernelSpec) -> float:
    """Dissimilarity of the next-kernel Gram of the outputs to the ideal Gram plus tau' max_j ||w_j||."""
    K = gram_values(layer.kernel, X, layer.centers)
    Gcc = gram_values(layer.kernel, layer.centers)
    return _objective("hidden", layer.alpha, layer.bias, K, Gcc, labels, config, next_kernel)[0]


def output_objective(layer: KernelLayer, X, labels, config: TrainConfig) -> float:
    """Classification risk plus tau' max_j ||w_j||."""
    K = gram_values(layer.kernel, X, layer.centers)
    Gcc = gram_values(layer.kernel, layer.centers)
    return _objective("output", layer.alpha, layer.bias, K, Gcc, labels, config)[0]


def gradients(kind, layer: KernelLayer, X, labels, config: TrainConfig, next_kernel=None):
    """Analytic ``(d_alpha, d_bias)`` of the hidden or output objective."""
    K = gram_values(layer.kernel, X, layer.centers)
    Gcc = gram_values(layer.kernel, layer.centers)
    _, ga, gb = _objective(kind, layer.alpha, layer.bias, K, Gcc, labels, config, next_kernel)
    return ga, gb


# -------------------------------------------------------------- optimizer

class Adam:
    def __init__(self, shapes, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        """Update ``params`` in place."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ---------------------------------------------------------------- training

def classification_error(scores, labels) -> float:
    return float(np.mean(readout(scores) != np.asarray(labels).ravel()))


def readout(scores) -> np.ndarray:
    """Class indices: sign for one output (0 counts as class 1), else argmax."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    if scores.shape[1] == 1:
        return (scores[:, 0] >= 0).astype(int)
    return np.argmax(scores, axis=1)


def train_layer(layer: KernelLayer, X, labels, config: TrainConfig, validation=None,
                next_kernel: Optional[KernelSpec] = None, index: int = 0):
    """Fit one layer with minibatch Adam and keep the best epoch.

    With ``next_kernel`` the layer is trained as a hidden layer, otherwise as
    the output classifier.  ``validation`` is an ``(X, labels)`` pair; epoch 0
    (the initialization) takes part in best-epoch selection.
    """
    kind = "hidden" if next_kernel is not None else "output"
    report = TrainReport(layer=index, kind=kind)
    layer = layer.copy()
    layer.objective = config.metric if kind == "hidden" else config.output_loss
    if config.epochs == 0:
        return layer, report

    start = time.perf_counter()
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels).ravel()
    if not np.all(np.isfinite(X)):
        raise InvalidArgument("training inputs contain non-finite values")
    K = gram_values(layer.kernel, X, layer.centers)
    Gcc = gram_values(layer.kernel, layer.centers)
    if config.selection == "train" or validation is None:
        Kv, yv = K, labels
    else:
        Xv, yv = validation
        yv = np.asarray(yv).ravel()
        Kv = gram_values(layer.kernel, Xv, layer.centers)
    if kind == "hidden":
        Tv = ideal_gram(yv, next_kernel.a, next_kernel.c).values

    def selection_metric(alpha, bias):
        out = Kv @ alpha + bias
        if kind == "hidden":
            return dissimilarity(gram_values(next_kernel, out), Tv, config.metric)
        return classification_error(out, yv)

    alpha, bias = layer.alpha, layer.bias
    best = (selection_metric(alpha, bias), 0, alpha.copy(), bias.copy())
    report.epochs.append(0)
    report.train_objective.append(None)
    report.validation_metric.append(best[0])
    report.timestamps.append(time.time())

    rng = np.random.default_rng(derive_seed(config.seed, "batching", index))
    opt = Adam([alpha.shape, bias.shape], config.learning_rate,
               config.adam_beta1, config.adam_beta2, config.adam_eps)
    N = X.shape[0]
    B = min(config.batch_size, N)
    min_batch = 2 if kind == "hidden" else 1
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(N)
        total, count = 0.0, 0
        for s in range(0, N, B):
            idx = order[s:s + B]
            if idx.size < min_batch:
                continue
            with np.errstate(over="ignore", invalid="ignore"):
                value, ga, gb = _objective(kind, alpha, bias, K[idx], Gcc, labels[idx], config,
                                           next_kernel)
                opt.step([alpha, bias], [ga, gb])
            if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(bias))):
                raise DivergenceError(f"non-finite parameters in layer {index + 1} "
                                      f"at epoch {epoch}", epoch=epoch, layer=index)
            total += value * idx.size
            count += idx.size
        metric = selection_metric(alpha, bias)
        report.epochs.append(epoch)
        report.train_objective.append(total / max(count, 1))
        report.validation_metric.append(metric)
        report.timestamps.append(time.time())
        if metric < best[0]:
            best = (metric, epoch, alpha.copy(), bias.copy())
        elif config.patience and epoch - best[1] >= config.patience:
            log.debug("layer %d: early stop at epoch %d", index + 1, epoch)
            break

    _, report.chosen_epoch, layer.alpha, layer.bias = best
    if kind == "hidden":
        G = gram_values(next_kernel, K @ layer.alpha + layer.bias)
        T = ideal_gram(labels, next_kernel.a, next_kernel.c)
        report.final_dissimilarity = {m: dissimilarity(G, T, m) for m in METRICS}
    GA = Gcc @ layer.alpha
    report.final_norms = np.sqrt(np.maximum(np.einsum("mj,mj->j", layer.alpha, GA), 0)).tolist()
    report.seconds = time.perf_counter() - start
    return layer, report


def _build_layer(i, spec: NetSpec, config: TrainConfig, Z, labels, hidden):
    kernel = spec.kernel(i)
    retention = config.retention[i] if config.retention else 1.0
    idx = draw_centers(labels, retention, derive_seed(config.seed, "centers", i))
    centers = Z[idx]
    if config.init == "identity" and hidden and spec.widths[i] == Z.shape[1]:
        layer, residual = identity_init(kernel, centers)
        log.debug("layer %d identity init residual %.3g", i + 1, residual)
        return layer
    return init_layer(kernel, centers, spec.widths[i], derive_seed(config.seed, "init", i))


def train_network(spec: NetSpec, dataset, config: TrainConfig):
    """Train layers one at a time, freezing each before moving up.

    ``dataset`` is a :class:`kmlp.data.LabeledDataset` carrying split tags.
    Returns the network and one report per layer.  A divergence aborts the
    run; the partial reports travel on the exception as ``reports``.
    """
    from .analysis import tau_bound_lemma2

    if config.retention is not None and len(config.retention) != spec.depth:
        raise InvalidArgument("retention needs one fraction per layer")
    X, y = dataset.subset("train")
    Xv, yv = dataset.subset("validation")
    if Xv.shape[0] == 0:
        Xv, yv = X, y
    if spec.widths[-1] == 1 and dataset.n_classes > 2:
        raise InvalidArgument("a single-output network handles two classes only")
    if spec.widths[-1] > 1 and spec.widths[-1] != dataset.n_classes:
        raise InvalidArgument(f"output width {spec.widths[-1]} != {dataset.n_classes} classes")
    if dataset.n_classes == 2 and config.tau_prime > 0:
        bound = tau_bound_lemma2(y, 1.0, spec.a)
        if config.tau_prime >= bound:
            warnings.warn(f"tau_prime={config.tau_prime} exceeds the optimality range "
                          f"bound {bound:.4g}", RuntimeWarning, stacklevel=2)

    net = KernelNetwork()
    reports: List[TrainReport] = []
    Z, Zv = X, Xv
    for i in range(spec.depth):
        hidden = i < spec.depth - 1
        layer = _build_layer(i, spec, config, Z, y, hidden)
        try:
            layer, report = train_layer(layer, Z, y, config, (Zv, yv),
                                        spec.kernel(i + 1) if hidden else None, index=i)
        except DivergenceError as exc:
            exc.reports = reports
            raise
        reports.append(report)
        net.layers.append(layer)
        net.frozen_upto = i + 1
        Z = layer_forward(layer, Z)
        Zv = layer_forward(layer, Zv)
        log.info("layer %d trained: chosen epoch %s", i + 1, report.chosen_epoch)
    return net, reports


def predict(net: KernelNetwork, X) -> np.ndarray:
    if net.depth == 0 or net.frozen_upto < net.depth:
        raise InvalidState("network has untrained layers")
    return readout(network_forward(net, X))


def evaluate(net: KernelNetwork, dataset, split="test") -> float:
    """Mean 0/1 loss on one split of ``dataset``."""
    X, y = dataset.subset(split)
    if X.shape[0] == 0:
        raise InvalidArgument(f"split {split!r} is empty")
    return float(np.mean(predict(net, X) != y))
