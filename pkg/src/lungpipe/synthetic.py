"""Phantom-derived datasets with a planted class signal.

An image's latent class decides whether its larger lung carries a nodule.
The recorded label equals the latent class except for a ``label_noise``
fraction of flips, so the best achievable accuracy is about 1 - label_noise.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .features import FeatureTable
from .imgio import DatasetManifest, ManifestEntry, generate_phantom, save_image, save_manifest, standard_phantom
from .pipeline import ImagePipeline


def _plan(n_train: int, n_test: int, seed: int, positive_rate: float, label_noise: float):
    """Per-image (id, latent class, observed label, split, phantom seed)."""
    rng = np.random.default_rng(seed)
    plan = []
    for split, count in (("train", n_train), ("test", n_test)):
        n_pos = int(round(positive_rate * count))
        latent = np.array([1] * n_pos + [0] * (count - n_pos))
        latent = latent[rng.permutation(count)]
        flips = rng.random(count) < label_noise
        for i in range(count):
            phantom_seed = int(rng.integers(2**31))
            label = int(latent[i] ^ flips[i])
            plan.append((f"{split}_{i:04d}", int(latent[i]), label, split, phantom_seed))
    return plan


def synthetic_dataset(
    n_train: int = 800,
    n_test: int = 200,
    seed: int = 0,
    size: int = 64,
    positive_rate: float = 0.5,
    label_noise: float = 0.02,
    pipeline: ImagePipeline | None = None,
) -> tuple[FeatureTable, FeatureTable]:
    """Run the full image pipeline over freshly rendered phantoms.

    Returns (train, test) feature tables.
    """
    pipeline = pipeline or ImagePipeline()
    out = {"train": [], "test": []}
    for id_, latent, label, split, ps in _plan(n_train, n_test, seed, positive_rate, label_noise):
        img, _ = generate_phantom(standard_phantom(ps, size=size, nodule=bool(latent)))
        rec, _ = pipeline.features_for(img, id_, label)
        out[split].append(rec)
    return FeatureTable(out["train"]), FeatureTable(out["test"])


def write_phantom_dataset(
    out_dir: str | os.PathLike,
    n_train: int = 80,
    n_test: int = 20,
    seed: int = 0,
    size: int = 64,
    positive_rate: float = 0.5,
    label_noise: float = 0.02,
) -> Path:
    """Render phantoms as PGM files plus ``manifest.csv``; returns the manifest path."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    entries = []
    for id_, latent, label, split, ps in _plan(n_train, n_test, seed, positive_rate, label_noise):
        img, _ = generate_phantom(standard_phantom(ps, size=size, nodule=bool(latent)))
        rel = f"images/{id_}.pgm"
        save_image(img, out / rel)
        entries.append(ManifestEntry(rel, label, split))
    manifest_path = out / "manifest.csv"
    save_manifest(DatasetManifest(entries, out), manifest_path)
    return manifest_path
