import numpy as np
import pytest

from acbench.chem import parse_smiles
from acbench.models.common import MolGraph, TrainSettings, TrainingDiverged, derive_seed, minibatches
from acbench.models.forest import ForestRegressor
from acbench.models.gin import GINRegressor
from acbench.models.grids import default_grid, grid_size, load_grid, sample_config, validate_grid
from acbench.models.knn import KNNRegressor, tanimoto_distance
from acbench.models.mlp import MLPRegressor
from acbench.models.registry import MODEL_NAMES, FrozenGINRegressor, QSARModel, featurize, model_space
from acbench.models.tune import holdout_split, tune

SMALL = {
    "rf": {"n_trees": [20], "max_depth": [None], "min_leaf": [1], "max_features": [1.0]},
    "knn": {"k": [3]},
    "mlp": {"hidden_width": [16], "depth": [1], "dropout": [0.0], "weight_decay": [0.0], "lr": [0.01],
            "lr_decay_factor": [1.0], "lr_decay_interval": [100], "batch_size": [32], "epochs": [4]},
    "gin": {"layers": [1], "width": [8], "head_width": [8], "head_depth": [1], "dropout": [0.0],
            "weight_decay": [0.0], "lr": [0.01], "lr_decay_factor": [1.0], "lr_decay_interval": [100],
            "batch_size": [32], "epochs": [3]},
}


def graphs(smiles):
    return [MolGraph.from_molecule(parse_smiles(s)) for s in smiles]


# -- kNN ------------------------------------------------------------------------------

def test_knn_examples():
    x = np.array([[0.0], [1.0], [4.0]])
    y = np.array([0.0, 1.0, 10.0])
    assert KNNRegressor(2).fit(x, y).predict(np.array([[0.6]]))[0] == pytest.approx(0.5)
    assert KNNRegressor(1).fit(x, y).predict(np.array([[4.0]]))[0] == 10.0
    assert KNNRegressor(3).fit(x, y).predict(np.array([[100.0]]))[0] == pytest.approx(y.mean())


def test_knn_tie_lowest_index():
    x = np.array([[1.0], [-1.0], [1.0]])
    y = np.array([5.0, 7.0, 9.0])
    assert KNNRegressor(1).fit(x, y).predict(np.array([[0.0]]))[0] == 5.0


def test_knn_errors():
    with pytest.raises(ValueError):
        KNNRegressor(1).fit(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        KNNRegressor(4).fit(np.zeros((3, 2)), np.zeros(3))
    with pytest.raises(RuntimeError):
        KNNRegressor(1).predict(np.zeros((1, 2)))


def test_tanimoto_distance_sanity():
    a = np.array([[1, 1, 0, 0]])
    assert tanimoto_distance(a, a)[0, 0] == 0.0
    assert tanimoto_distance(a, np.array([[0, 0, 1, 1]]))[0, 0] == 1.0
    assert tanimoto_distance(a, np.array([[1, 0, 1, 0]]))[0, 0] == pytest.approx(2 / 3)


def test_std_euclidean_ignores_column_scale():
    rng = np.random.default_rng(0)
    x, q = rng.normal(size=(20, 3)), rng.normal(size=(5, 3))
    y = rng.normal(size=20)
    s = np.array([1.0, 1000.0, 0.01])
    a = KNNRegressor(3, "std_euclidean").fit(x, y).predict(q)
    b = KNNRegressor(3, "std_euclidean").fit(x * s, y).predict(q * s)
    assert np.allclose(a, b)


# -- random forest -----------------------------------------------------------------------

def test_rf_constant_labels():
    rng = np.random.default_rng(0)
    f = ForestRegressor(n_trees=10, seed=1).fit(rng.normal(size=(30, 4)), np.full(30, 2.5))
    assert np.all(f.predict(rng.normal(size=(10, 4))) == 2.5)


def test_rf_single_tree_zero_training_error():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(40, 3)), rng.normal(size=40)
    f = ForestRegressor(n_trees=1, bootstrap=False, max_features=1.0, seed=0).fit(x, y)
    assert np.allclose(f.predict(x), y)


def test_rf_determinism():
    rng = np.random.default_rng(2)
    x, y, q = rng.normal(size=(50, 5)), rng.normal(size=50), rng.normal(size=(8, 5))
    a = ForestRegressor(n_trees=25, max_features="sqrt", seed=7).fit(x, y).predict(q)
    b = ForestRegressor(n_trees=25, max_features="sqrt", seed=7).fit(x, y).predict(q)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("factor", [2.0, 0.25, 8.0])
def test_rf_scaling_invariance(factor):
    rng = np.random.default_rng(3)
    x, y, q = rng.normal(size=(60, 4)), rng.normal(size=60), rng.normal(size=(15, 4))
    xs, qs = x.copy(), q.copy()
    xs[:, 1] *= factor
    qs[:, 1] *= factor
    a = ForestRegressor(n_trees=15, seed=4).fit(x, y).predict(q)
    b = ForestRegressor(n_trees=15, seed=4).fit(xs, y).predict(qs)
    assert np.array_equal(a, b)


# -- MLP -------------------------------------------------------------------------------------

def test_mlp_linear_model_fits_linear_data():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 4))
    y = x @ np.array([1.5, -2.0, 0.5, 0.0]) + 0.3
    m = MLPRegressor(depth=0, settings=TrainSettings(lr=0.05, batch_size=32, epochs=200), seed=1).fit(x, y)
    assert np.mean(np.abs(m.predict(x) - y)) < 1e-2


def test_mlp_learning_curve_decreases(toy_compounds):
    x = featurize("ECFP", toy_compounds)
    y = np.array([c.a for c in toy_compounds])
    m = MLPRegressor(hidden_width=32, depth=1, settings=TrainSettings(lr=1e-3, batch_size=32, epochs=50), seed=0)
    m.fit(x, y)
    assert len(m.curve.epoch_loss) == 50
    assert m.curve.epoch_loss[49] < m.curve.epoch_loss[0]


def test_mlp_determinism():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(40, 6)), rng.normal(size=40)
    cfg = dict(hidden_width=16, depth=2, dropout=0.25, settings=TrainSettings(epochs=10, batch_size=8))
    a = MLPRegressor(**cfg, seed=3).fit(x, y)
    b = MLPRegressor(**cfg, seed=3).fit(x, y)
    for (na, pa), (nb, pb) in zip(a.net.state_dict().items(), b.net.state_dict().items()):
        assert na == nb and np.array_equal(pa, pb)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_guard():
    x = np.random.default_rng(0).normal(size=(20, 3))
    y = np.full(20, 1e200)
    with pytest.raises(TrainingDiverged):
        MLPRegressor(depth=0, settings=TrainSettings(epochs=3, batch_size=4, lr=1.0)).fit(x, y)


def test_training_settings_validation():
    with pytest.raises(ValueError):
        MLPRegressor(settings=TrainSettings(epochs=0)).fit(np.ones((4, 2)), np.ones(4))
    with pytest.raises(ValueError):
        MLPRegressor(settings=TrainSettings(batch_size=1)).fit(np.ones((4, 2)), np.ones(4))


def test_minibatches_never_leave_singletons():
    for n in range(2, 40):
        batches = minibatches(n, 8, np.random.default_rng(n))
        assert min(len(b) for b in batches) >= 2
        assert sorted(np.concatenate(batches).tolist()) == list(range(n))


# -- GIN ------------------------------------------------------------------------------------------

SET = ["CCO", "c1ccccc1O", "CC(=O)N", "CCN(C)C", "c1ccncc1Cl", "OCCO"]


def test_gin_permutation_invariant_embedding():
    g = GINRegressor(layers=2, width=8, head="linear_head", settings=TrainSettings(epochs=5, batch_size=4))
    g.fit(graphs(SET), np.arange(len(SET), dtype=float))
    mol = parse_smiles("CC(=O)Nc1ccc(O)cc1")
    ref = g.embed([MolGraph.from_molecule(mol)])
    rng = np.random.default_rng(0)
    for _ in range(10):
        perm = mol.renumber(list(rng.permutation(len(mol.atoms))))
        assert np.allclose(g.embed([MolGraph.from_molecule(perm)]), ref, rtol=0, atol=1e-12)


def test_gin_overfits_two_graphs():
    # replicas keep batches large, so the unbiased running variance matches the batch statistics
    gs = graphs(["CCO", "c1ccccc1"]) * 32
    y = np.array([1.0, -1.0] * 32)
    g = GINRegressor(layers=2, width=16, head_width=16, settings=TrainSettings(lr=0.01, epochs=100, batch_size=64),
                     seed=0).fit(gs, y)
    assert np.mean(np.abs(g.predict(gs[:2]) - y[:2])) < 0.05


def test_one_layer_gin_distinguishes_cco_ccc():
    g = GINRegressor(layers=1, width=8, head="linear_head", settings=TrainSettings(epochs=1, batch_size=2))
    g.fit(graphs(["CCO", "CCC", "CCN"]), np.array([0.0, 1.0, 2.0]))
    e = g.embed(graphs(["CCO", "CCC"]))
    assert not np.allclose(e[0], e[1])


def test_gin_embed_contract():
    gin = GINRegressor(layers=2, width=12, head="linear_head", settings=TrainSettings(epochs=2, batch_size=4))
    with pytest.raises(RuntimeError):
        gin.embed(graphs(["CC"]))
    gin.fit(graphs(SET), np.arange(6, dtype=float))
    e1, e2 = gin.embed(graphs(["CCO"])), gin.embed(graphs(["CCO"]))
    assert e1.shape == (1, 12) and np.array_equal(e1, e2)
    mlp_head = GINRegressor(layers=1, width=4, settings=TrainSettings(epochs=1, batch_size=4)).fit(graphs(SET), np.zeros(6))
    with pytest.raises(ValueError):
        mlp_head.embed(graphs(["CCO"]))


def test_frozen_embeddings_unchanged_by_downstream_fit():
    gin = GINRegressor(layers=1, width=8, head="linear_head", settings=TrainSettings(epochs=3, batch_size=4))
    model = FrozenGINRegressor(gin, ForestRegressor(n_trees=5))
    gs, y = graphs(SET), np.arange(6, dtype=float)
    gin.fit(gs, y)
    before_w = gin.net.state_dict()
    before_e = gin.embed(gs)
    model.downstream.fit(before_e, y)
    assert np.array_equal(gin.embed(gs), before_e)
    assert all(np.array_equal(v, gin.net.state_dict()[k]) for k, v in before_w.items())


# -- grids and tuning -------------------------------------------------------------------------------

def test_default_grid_shape():
    grid = default_grid()
    assert set(grid) == {"rf", "knn", "mlp", "gin"}
    assert grid["knn"]["k"] == list(range(1, 26))
    assert grid["mlp"]["epochs"] == [500] and grid["gin"]["epochs"] == [500]
    assert min(grid["rf"]["n_trees"]) == 100 and max(grid["rf"]["n_trees"]) == 500


def test_grid_override_and_validation(tmp_path):
    p = tmp_path / "g.yaml"
    p.write_text("knn:\n  k: [2]\n")
    grid = load_grid(p)
    assert grid["knn"]["k"] == [2] and grid["rf"] == default_grid()["rf"]
    with pytest.raises(ValueError):
        validate_grid({"svm": {"c": [1]}})
    with pytest.raises(ValueError):
        validate_grid({"knn": {"k": []}})


def test_sample_config_uniform():
    rng = np.random.default_rng(0)
    counts = {}
    for _ in range(6000):
        v = sample_config({"a": [1, 2, 3]}, rng)["a"]
        counts[v] = counts.get(v, 0) + 1
    assert all(abs(c / 6000 - 1 / 3) < 0.03 for c in counts.values())
    assert grid_size(model_space("GIN_RF", default_grid())) == \
        grid_size({k: v for k, v in default_grid()["gin"].items() if k not in ("head_width", "head_depth")}) \
        * grid_size(default_grid()["rf"])


def test_holdout_split():
    tr, va = holdout_split(50, 1)
    assert len(va) == 10 and len(tr) == 40 and not set(tr) & set(va)
    assert np.array_equal(holdout_split(50, 1)[1], va)


def test_tune_budget_one_returns_sampled():
    space = {"k": [4, 5, 6]}
    x = np.random.default_rng(0).normal(size=(30, 2))
    res = tune("PDV_KNN", space, x, np.zeros(30), budget=1, seed=3)
    assert res.best_index == 0 and res.trials == []
    assert res.best_params == sample_config(space, np.random.default_rng(derive_seed(3, "sample")))


def test_tune_single_config_equals_direct_fit():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(40, 3)), rng.normal(size=40)
    space = {k: v for k, v in SMALL["rf"].items()}
    res = tune("PDV_RF", space, x, y, budget=4, seed=9)
    direct = QSARModel("PDV_RF", sample_config(space, rng), derive_seed(9, "model")).fit_features(x, y)
    assert np.array_equal(res.model.predict_features(x), direct.predict_features(x))


def test_tune_ties_go_to_first_sampled():
    x = np.random.default_rng(2).normal(size=(30, 2))
    res = tune("PDV_KNN", {"k": [1, 2, 3]}, x, np.ones(30), budget=6, seed=0)
    assert res.best_index == 0


def test_tune_finds_planted_optimum():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(150, 3))
    y = x @ np.array([1.0, -1.0, 2.0])
    space = {"hidden_width": [8], "depth": [0], "dropout": [0.0], "batch_size": [32],
             "lr": [1e-7, 0.05], "epochs": [1, 150]}
    res = tune("PDV_MLP", space, x, y, budget=20, seed=1)
    assert res.best_params["lr"] == 0.05 and res.best_params["epochs"] == 150
    assert res.trials[res.best_index].val_mae < 0.05


# -- the nine-model contract ------------------------------------------------------------------------------

@pytest.mark.parametrize("name", MODEL_NAMES)
def test_model_contract(name, toy_compounds):
    comps = toy_compounds[:60]
    y = np.array([c.a for c in comps])
    params = sample_config(model_space(name, SMALL), np.random.default_rng(0))
    a = QSARModel(name, params, seed=11).fit(comps[:45], y[:45])
    b = QSARModel(name, params, seed=11).fit(comps[:45], y[:45])
    p1, p2 = a.predict(comps[45:]), a.predict(comps[45:])
    assert p1.shape == (15,) and np.isfinite(p1).all()
    assert np.array_equal(p1, p2)
    assert np.array_equal(p1, b.predict(comps[45:]))


def test_unknown_model_name():
    with pytest.raises(ValueError):
        QSARModel("ECFP_SVM", {}).fit(["CC"], np.zeros(1))
