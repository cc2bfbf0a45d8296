"""Versioned JSON documents for fitted models."""
from __future__ import annotations

import json
import os
from pathlib import Path

from .design import Classifier, Standardization
from .discriminant import LDAModel, QDAModel
from .kmeans import KMeansModel
from .knn import KNNModel
from .logistic import LogisticModel
from .svm import SVMModel
from .tree import ForestModel, TreeModel

FORMAT_VERSION = 1

MODEL_TYPES = {
    cls.kind: cls
    for cls in (LogisticModel, LDAModel, QDAModel, KNNModel, TreeModel, ForestModel, SVMModel, KMeansModel)
}


def model_to_dict(model: Classifier) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "params": model.params(),
        "standardization": model.standardization.to_dict(),
    }


def model_from_dict(doc: dict) -> Classifier:
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model document version {doc.get('version')!r}")
    try:
        cls = MODEL_TYPES[doc["kind"]]
    except KeyError:
        raise ValueError(f"unknown model kind {doc.get('kind')!r}") from None
    return cls.from_params(doc["params"], Standardization.from_dict(doc["standardization"]))


def save_model(model: Classifier, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")


def load_model(path: str | os.PathLike) -> Classifier:
    return model_from_dict(json.loads(Path(path).read_text()))
