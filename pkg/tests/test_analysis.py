import math

import numpy as np
import pytest

from kmlp.analysis import (coefficient_l1, complexity_bound_layer, complexity_bound_network,
                           generalization_bound, network_complexity, propagation_bound,
                           representation_report, tau_bound_lemma2, tau_bound_lemma3)
from kmlp.errors import InvalidArgument
from kmlp.kernel import gaussian
from kmlp.network import KernelLayer, KernelNetwork, init_layer


class TestLayerBound:
    def test_reference(self):
        assert complexity_bound_layer(1, 1, 100) == 0.2

    def test_zero_norm(self):
        assert complexity_bound_layer(0, 1, 50) == 0

    def test_sqrt_scaling(self):
        assert complexity_bound_layer(1.7, 1, 400) == pytest.approx(complexity_bound_layer(1.7, 1, 100) / 2)

    @pytest.mark.parametrize("A", [0.0, 0.5, 2.0, 10.0])
    def test_monotone_in_A(self, A):
        assert complexity_bound_layer(A, 1, 30) <= complexity_bound_layer(A + 0.1, 1, 30)


class TestNetworkBound:
    def test_reference(self):
        assert complexity_bound_network([0, 2], [0, 0.5], [3, 1], 1.0) == 3.0

    def test_zero_coefficients(self):
        assert complexity_bound_network([1, 0, 4], [1, 1, 1], [3, 2, 1]) == 0

    def test_linear_in_first_width(self):
        args = ([0, 2, 3], [0, 0.5, 0.2])
        assert complexity_bound_network(*args, [6, 2, 1]) == 2 * complexity_bound_network(*args, [3, 2, 1])

    def test_two_layers_reduce(self):
        # A L d_1 base
        assert complexity_bound_network([9, 2.5], [9, 0.3], [4, 1], 0.7) == pytest.approx(2.5 * 0.3 * 4 * 0.7)

    def test_from_network(self, rng):
        l1 = init_layer(gaussian(1.0), rng.normal(size=(5, 2)), 3, seed=0)
        l2 = init_layer(gaussian(2.0), rng.normal(size=(4, 3)), 1, seed=1)
        net = KernelNetwork([l1, l2], 2)
        expected = 3 * coefficient_l1(l2) * gaussian(2.0).lipschitz * 1
        assert network_complexity(net) == pytest.approx(expected)
        assert coefficient_l1(l2) == pytest.approx(np.abs(l2.alpha).sum())


class TestGeneralizationBound:
    def test_reference(self):
        oracle = 0 + 2 * (2 * 1 * math.sqrt(1 / 10000)) + (8 / 1 + 1) * math.sqrt(math.log(4 / 0.05) / (2 * 10000))
        value = generalization_bound(0.0, 1.0, 1.0, 10000, 0.05)
        assert value == pytest.approx(oracle, abs=1e-12)
        assert value == pytest.approx(0.1732186, abs=1e-7)

    def test_large_sample_limit(self):
        assert generalization_bound(0.12, 1.0, 1.0, 10 ** 15, 0.05) == pytest.approx(0.12, abs=1e-5)

    def test_monotone_in_delta(self):
        values = [generalization_bound(0.1, 1, 1, 500, d) for d in (0.5, 0.1, 0.01, 0.001)]
        assert values == sorted(values)

    def test_never_below_empirical(self, rng):
        for _ in range(100):
            h = rng.uniform(0, 2)
            assert generalization_bound(h, rng.uniform(0, 5), 1, int(rng.integers(1, 10 ** 6)),
                                        rng.uniform(0.001, 0.999)) >= h

    def test_delta_range(self):
        with pytest.raises(InvalidArgument):
            generalization_bound(0, 1, 1, 10, 1.0)


class TestPropagationBound:
    def test_no_upstream_error(self):
        assert propagation_bound(0.3, 0.0, 0.8, [1.0, 2.0]) == 0.3

    def test_zero_norms(self):
        assert propagation_bound(0.3, 0.5, 0.8, [0.0, 0.0]) == 0.3

    def test_reference(self):
        value = propagation_bound(0.1, 0.04, 0.5, [1.0, 1.0])
        assert value == pytest.approx(0.1 + 0.2 * math.sqrt(2), abs=1e-12)
        assert value == pytest.approx(0.38284, abs=1e-5)


class TestTauBounds:
    def test_balanced(self):
        assert tau_bound_lemma2([1, 0, 1, 0], 1, 0) == pytest.approx(math.sqrt(2) / 2)

    def test_single_class(self):
        assert tau_bound_lemma2([1, 1, 1], 1, 0) == 0

    def test_output_range_reference(self):
        value = tau_bound_lemma3([1, 0], 1, 0, 4, 0.1)
        assert value == pytest.approx(math.sqrt(8) * 0.5 * 0.1)
        assert value == pytest.approx(0.14142, abs=1e-5)


def ideal_net(labels):
    """Two-layer net whose first layer sends every class to its own far-away point."""
    labels = np.asarray(labels)
    K = labels.max() + 1
    X = np.eye(K)[labels] * 100.0
    first = KernelLayer(np.eye(K) * 100.0, np.eye(K) * 10.0, np.zeros(K), gaussian(1.0))
    second = init_layer(gaussian(1.0), first.alpha, 1, seed=0)
    return KernelNetwork([first, second], 2), X


class TestRepresentationReport:
    labels = np.array([0, 1, 1, 0, 2, 2, 1])

    def test_ideal_representation(self):
        net, X = ideal_net(self.labels)
        diag = representation_report(net, X, self.labels, 1)
        for value in diag.dissimilarity_to_ideal.values():
            assert value < 1e-12
        assert diag.within_class_kernel_min == 1.0
        assert diag.within_class_kernel_mean == 1.0
        assert diag.between_class_kernel_max == pytest.approx(0.0, abs=1e-12)
        assert diag.within_class_kernel_mean >= diag.between_class_kernel_mean

    def test_untrained_layer(self, rng):
        X = rng.normal(size=(10, 2))
        labels = rng.integers(0, 2, 10)
        net = KernelNetwork([init_layer(gaussian(1.0), X, 3, seed=0),
                             init_layer(gaussian(1.0), rng.normal(size=(4, 3)), 1, seed=1)], 2)
        diag = representation_report(net, X, labels, 1)
        assert min(diag.dissimilarity_to_ideal.values()) > 1e-12
        assert diag.max_rkhs_norm > 0
        assert diag.complexity_bound == pytest.approx(2 * diag.max_rkhs_norm * math.sqrt(1 / 10))
        assert diag.lipschitz == pytest.approx(gaussian(1.0).lipschitz)

    def test_bad_index(self):
        net, X = ideal_net(self.labels)
        with pytest.raises(InvalidArgument):
            representation_report(net, X, self.labels, 2)
