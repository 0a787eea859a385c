import numpy as np
import pytest
import torch

from ncagc.graph_io import make_toy_graph


@pytest.fixture(autouse=True)
def _fixed_torch_seed():
    torch.manual_seed(0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_graph():
    return make_toy_graph(num_nodes=18, num_clusters=3, num_features=6, seed=7)
