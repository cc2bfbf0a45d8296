import json

import numpy as np
import pytest

from lungpipe.learn import (
    KernelSpec,
    design_from_arrays,
    fit_forest,
    fit_kmeans,
    fit_knn,
    fit_lda,
    fit_logistic,
    fit_qda,
    fit_svm,
    fit_tree,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)


@pytest.fixture(scope="module")
def design():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 3)) * [1, 10, 100] + [0, 5, -50]
    y = (X[:, 0] + X[:, 1] / 10 + rng.normal(size=80) > 0.5).astype(int)
    return design_from_arrays(X, y, ("a", "b", "c")), X


FITTERS = {
    "logistic": fit_logistic,
    "lda": fit_lda,
    "qda": fit_qda,
    "knn": lambda d: fit_knn(d, 3),
    "tree": lambda d: fit_tree(d, 3),
    "forest": lambda d: fit_forest(d, 7, seed=1),
    "svm": lambda d: fit_svm(d, KernelSpec("radial", gamma=0.5), 2.0),
    "kmeans": lambda d: fit_kmeans(d, seed=3, restarts=2),
}


@pytest.mark.parametrize("kind", sorted(FITTERS))
def test_round_trip(kind, design, tmp_path):
    d, X = design
    model = FITTERS[kind](d)
    path = tmp_path / f"{kind}.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    assert doc["version"] == 1 and doc["kind"] == kind
    assert set(doc) == {"version", "kind", "params", "standardization"}
    back = load_model(path)
    Q = np.random.default_rng(9).normal(size=(50, 3)) * [1, 10, 100] + [0, 5, -50]
    assert np.array_equal(back.predict(Q), model.predict(Q))
    assert np.array_equal(back.predict(X), model.predict(X))


def test_rejects_unknown(design):
    d, _ = design
    doc = model_to_dict(fit_lda(d))
    with pytest.raises(ValueError):
        model_from_dict({**doc, "version": 99})
    with pytest.raises(ValueError):
        model_from_dict({**doc, "kind": "perceptron"})
