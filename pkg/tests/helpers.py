"""Shared oracles for the test suite."""
import numpy as np

from kmlp.kernel import gaussian
from kmlp.network import KernelLayer, layer_forward, rkhs_norms
from kmlp.training import TrainConfig, gradients, hidden_objective, output_objective

OBJECTIVES = [
    ("hidden", "l1", None),
    ("hidden", "l2", None),
    ("hidden", "alignment", None),
    ("output", None, "hinge"),
    ("output", None, "cross_entropy"),
    ("output", None, "cross_entropy_multiclass"),
]


def objective_value(kind, layer, X, labels, config, next_kernel):
    if kind == "hidden":
        return hidden_objective(layer, X, labels, config, next_kernel)
    return output_objective(layer, X, labels, config)


def finite_difference(kind, layer, X, labels, config, next_kernel=None, h=1e-5):
    """Central differences of the objective in every alpha and bias entry."""
    def f(alpha, bias):
        probe = KernelLayer(layer.centers, alpha, bias, layer.kernel)
        return objective_value(kind, probe, X, labels, config, next_kernel)

    d_alpha = np.zeros_like(layer.alpha)
    for idx in np.ndindex(*layer.alpha.shape):
        up, down = layer.alpha.copy(), layer.alpha.copy()
        up[idx] += h
        down[idx] -= h
        d_alpha[idx] = (f(up, layer.bias) - f(down, layer.bias)) / (2 * h)
    d_bias = np.zeros_like(layer.bias)
    for j in range(layer.bias.size):
        up, down = layer.bias.copy(), layer.bias.copy()
        up[j] += h
        down[j] -= h
        d_bias[j] = (f(layer.alpha, up) - f(layer.alpha, down)) / (2 * h)
    return d_alpha, d_bias


def near_kink(kind, layer, X, labels, config, tol=1e-4):
    """True when a finite-difference step could straddle a nondifferentiable point."""
    norms = rkhs_norms(layer)
    if config.tau_prime > 0 and norms.size > 1:
        top = np.sort(norms)[-2:]
        if top[1] - top[0] < tol:
            return True
    if kind == "output" and config.output_loss == "hinge":
        y = np.where(np.asarray(labels) == 1, 1.0, -1.0)
        s = layer_forward(layer, X)[:, 0]
        if np.min(np.abs(1 - y * s)) < tol:
            return True
    return False


def random_instance(rng, kind, metric, loss):
    """Small random problem: N <= 8 examples, d <= 4 dims, M <= 5 centers."""
    N = int(rng.integers(3, 9))
    d = int(rng.integers(1, 5))
    M = int(rng.integers(1, 6))
    X = rng.uniform(0, 1, size=(N, d))
    centers = rng.uniform(0, 1, size=(M, d))
    kernel = gaussian(rng.uniform(0.4, 1.5))
    tau = float(rng.choice([0.0, rng.uniform(0.01, 0.5)]))
    next_kernel = None
    if kind == "hidden":
        d_out = int(rng.integers(1, 4))
        labels = rng.integers(0, int(rng.integers(2, 4)), size=N)
        config = TrainConfig(metric=metric, tau_prime=tau)
        next_kernel = gaussian(rng.uniform(0.3, 1.5))
    elif loss == "cross_entropy_multiclass":
        d_out = int(rng.integers(3, 5))
        labels = rng.integers(0, d_out, size=N)
        config = TrainConfig(output_loss="cross_entropy", tau_prime=tau)
    else:
        d_out = 1
        labels = rng.integers(0, 2, size=N)
        config = TrainConfig(output_loss=loss, tau_prime=tau)
    layer = KernelLayer(centers, rng.normal(size=(M, d_out)), rng.normal(size=d_out) * 0.5,
                        kernel)
    return layer, X, labels, config, next_kernel


def gradient_relative_error(kind, layer, X, labels, config, next_kernel):
    ga, gb = gradients(kind, layer, X, labels, config, next_kernel)
    fa, fb = finite_difference(kind, layer, X, labels, config, next_kernel)
    analytic = np.concatenate([ga.ravel(), gb])
    numeric = np.concatenate([fa.ravel(), fb])
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
    return float(np.linalg.norm(analytic - numeric) / scale)


def run_gradient_suite(rng, kind, metric, loss, instances=50):
    """Worst relative error over ``instances`` kink-free random problems."""
    worst, done = 0.0, 0
    while done < instances:
        layer, X, labels, config, next_kernel = random_instance(rng, kind, metric, loss)
        if near_kink(kind, layer, X, labels, config):
            continue
        worst = max(worst, gradient_relative_error(kind, layer, X, labels, config, next_kernel))
        done += 1
    return worst


