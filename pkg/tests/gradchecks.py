"""Central-difference gradient checks shared by the unit and acceptance tests.

Each check builds a small float64 computation, runs backward once and
returns the worst relative error over ``n_probes`` random probes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from acbench.models.common import GraphInputs, MolGraph
from acbench.models.gin import AtomEncoder, GINLayer, self_loop_adjacency
from acbench.chem import parse_smiles
from acbench.nn import tensor as T
from acbench.nn.layers import BatchNorm, FeedForward, parameter
from acbench.twin import twin_batch_loss
from tests.oracles import central_difference_check

N_PROBES = 200


def _weighted(out: T.Tensor, r: np.ndarray) -> T.Tensor:
    # random projection so that no gradient vanishes by symmetry
    return T.sum_all(T.mul(out, r))


def _run(loss_fn, params, seed: int, n_probes: int) -> float:
    for p in params:
        p.grad = None
    loss_fn().backward()
    return central_difference_check(lambda: loss_fn().item(), params, n_probes, np.random.default_rng(seed + 1))


def mlp_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    rng = np.random.default_rng(seed)
    net = FeedForward(5, [7, 6], 1, 0.0, rng)
    x = parameter(rng.normal(size=(9, 5)))
    y = rng.normal(size=(9, 1))
    return _run(lambda: T.mse_loss(net(x), y), net.parameters() + [x], seed, n_probes)


def batchnorm_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    rng = np.random.default_rng(seed)
    bn = BatchNorm(4)
    bn.gamma.data = rng.normal(size=4)
    bn.beta.data = rng.normal(size=4)
    x = parameter(rng.normal(size=(6, 4)))
    r = rng.normal(size=(6, 4))
    return _run(lambda: _weighted(bn(x), r), [x, bn.gamma, bn.beta], seed, n_probes)


def batchnorm_eval_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    rng = np.random.default_rng(seed)
    bn = BatchNorm(3)
    bn.running_mean, bn.running_var = rng.normal(size=3), rng.uniform(0.5, 2, size=3)
    bn.eval()
    x = parameter(rng.normal(size=(5, 3)))
    r = rng.normal(size=(5, 3))
    return _run(lambda: _weighted(bn(x), r), [x, bn.gamma, bn.beta], seed, n_probes)


def dropout_off_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    """Dropout with p = 0 and in eval mode is the identity, gradients included."""
    rng = np.random.default_rng(seed)
    net = FeedForward(4, [6], 1, 0.5, rng).eval()
    x = parameter(rng.normal(size=(5, 4)))
    y = rng.normal(size=(5, 1))

    def loss():
        h = T.dropout(T.dropout(x, 0.0, True, rng), 0.3, False, rng)
        return T.mse_loss(net(h, rng), y)

    return _run(loss, net.parameters() + [x], seed, n_probes)


def dropout_mask_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    """Training-mode dropout with the mask pinned by reseeding: backward reuses the forward mask."""
    rng = np.random.default_rng(seed)
    x = parameter(rng.normal(size=(8, 5)))
    r = rng.normal(size=(8, 5))
    return _run(lambda: _weighted(T.dropout(x, 0.4, True, np.random.default_rng(99)), r), [x], seed, n_probes)


def segment_max_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    rng = np.random.default_rng(seed)
    x = parameter(rng.normal(size=(7, 4)))
    seg = np.array([0, 0, 0, 1, 1, 2, 2])
    r = rng.normal(size=(3, 4))
    return _run(lambda: _weighted(T.segment_max(x, seg, 3), r), [x], seed, n_probes)


def bn_segment_max_graph_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    """Batchnorm then segment_max on a 3-node path graph."""
    rng = np.random.default_rng(seed)
    bn = BatchNorm(3)
    bn.gamma.data = rng.normal(size=3)
    x = parameter(rng.normal(size=(3, 3)))
    adj = sp.csr_matrix(np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=float))
    r = rng.normal(size=(1, 3))

    def loss():
        h = bn(T.sparse_matmul(adj, x))
        return _weighted(T.segment_max(h, np.zeros(3, dtype=int), 1), r)

    return _run(loss, [x, bn.gamma, bn.beta], seed, n_probes)


def gin_layer_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    rng = np.random.default_rng(seed)
    graphs = [MolGraph.from_molecule(parse_smiles(s)) for s in ("CCO", "c1ccncc1C", "NC(=O)C")]
    enc = AtomEncoder.from_graphs(graphs)
    inputs = GraphInputs([enc.encode(g) for g in graphs], [self_loop_adjacency(g) for g in graphs])
    batch = inputs.take(np.arange(3))
    layer = GINLayer(enc.width, 6, rng)
    x = parameter(batch.x + rng.normal(scale=0.1, size=batch.x.shape))
    r = rng.normal(size=(3, 6))

    def loss():
        return _weighted(T.segment_max(layer(x, batch.adjacency), batch.segment, 3), r)

    return _run(loss, layer.parameters() + [x], seed, n_probes)


def twin_loss_error(seed: int = 0, n_probes: int = N_PROBES) -> float:
    """Twin loss through a shared network on one stacked forward pass."""
    rng = np.random.default_rng(seed)
    net = FeedForward(4, [5], 1, 0.0, rng)
    p = 6
    x = rng.normal(size=(2 * p, 4))
    a = rng.normal(size=2 * p)
    w = rng.uniform(0.2, 2.0, size=p)

    def loss():
        pred = T.reshape(net(T.Tensor(x)), (2 * p,))
        f_s, f_t = T.take_rows(pred, np.arange(p)), T.take_rows(pred, np.arange(p, 2 * p))
        return twin_batch_loss(f_s, f_t, a[:p], a[p:], w, 0.7)

    return _run(loss, net.parameters(), seed, n_probes)


ALL_CHECKS = {
    "mlp": mlp_error,
    "batchnorm": batchnorm_error,
    "batchnorm_eval": batchnorm_eval_error,
    "dropout_off": dropout_off_error,
    "dropout_mask": dropout_mask_error,
    "segment_max": segment_max_error,
    "bn_segment_max_graph": bn_segment_max_graph_error,
    "gin_layer": gin_layer_error,
    "twin_loss": twin_loss_error,
}
