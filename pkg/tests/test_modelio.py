import numpy as np
import pytest

from kmlp.errors import FormatError
from kmlp.kernel import gaussian
from kmlp.modelio import MAGIC, dumps, load_network, loads, save_network
from kmlp.network import KernelNetwork, init_layer, network_forward


@pytest.fixture
def net(rng):
    l1 = init_layer(gaussian(0.7, a=0.1), rng.normal(size=(6, 3)), 2, seed=0)
    l1.objective = "alignment"
    l2 = init_layer(gaussian(1.3, a=0.1), rng.normal(size=(4, 2)), 1, seed=1)
    l2.bias[:] = 0.25
    return KernelNetwork([l1, l2], 2)


def test_round_trip(net, tmp_path, rng):
    path = tmp_path / "m.kmlp"
    save_network(net, path)
    back = load_network(path)
    assert back.frozen_upto == 2 and back.depth == 2
    for a, b in zip(net.layers, back.layers):
        np.testing.assert_array_equal(a.centers, b.centers)
        np.testing.assert_array_equal(a.alpha, b.alpha)
        np.testing.assert_array_equal(a.bias, b.bias)
        assert a.kernel == b.kernel
        assert a.objective == b.objective
    X = rng.normal(size=(5, 3))
    np.testing.assert_array_equal(network_forward(net, X), network_forward(back, X))


def test_bytes_are_stable(net):
    assert dumps(net) == dumps(net)
    assert dumps(net).startswith(MAGIC)
    assert dumps(loads(dumps(net))) == dumps(net)


@pytest.mark.parametrize("mangle", [
    lambda raw: b"NOPE" + raw[4:],
    lambda raw: raw[:-3],
    lambda raw: raw + b"\x00",
    lambda raw: raw[:10],
    lambda raw: raw[:14] + b"[" + raw[15:],
])
def test_corrupt(net, mangle):
    with pytest.raises(FormatError):
        loads(mangle(dumps(net)))
