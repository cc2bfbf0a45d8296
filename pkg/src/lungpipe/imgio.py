"""Image ingestion and emission (PGM), dataset manifests and synthetic phantoms.

PGM P2 (ASCII) and P5 (binary) files are read; only P5 with maxval 65535 is
written. Phantom slices stand in for real CT data: a bright body ellipse on a
dark field, dark lung ellipses inside it and optional bright nodules inside
the lungs.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ManifestError, PGMFormatError, TruncatedImageError

MAXVAL = 65535

LABEL_NAMES = {0: "no-cancer", 1: "cancer"}
SPLITS = ("train", "test")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """2-D unsigned 16-bit intensity raster.

    ``pixels`` is stored as a read-only ``(height, width)`` uint16 array, so
    row-major flattening gives the on-disk sample order.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D raster, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if arr.size and (np.issubdtype(arr.dtype, np.floating) or arr.dtype.kind in "iu"):
            lo, hi = arr.min(), arr.max()
            if lo < 0 or hi > MAXVAL:
                raise ValueError(f"pixel values out of [0, {MAXVAL}]: [{lo}, {hi}]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
                raise ValueError("pixel values must be integral")
        arr = np.array(arr, dtype=np.uint16, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, values: Sequence[int]) -> "GrayImage":
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"{values.size} values for a {width}x{height} image")
        return cls(values.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def flat(self) -> list[int]:
        return self.pixels.ravel().tolist()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"GrayImage(width={self.width}, height={self.height})"


# --------------------------------------------------------------------------
# PGM


def _read_header(data: bytes) -> tuple[bytes, list[int], int]:
    """Return (magic, [width, height, maxval], payload offset)."""
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PGMFormatError("header ends prematurely")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from a binary raster
    if pos >= n and tokens[0] == b"P5":
        raise TruncatedImageError("no payload after header")
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PGMFormatError(f"unsupported magic number {magic!r}")
    try:
        dims = [int(t) for t in tokens[1:]]
    except ValueError as exc:
        raise PGMFormatError(f"non-integer header field: {exc}") from None
    w, h, maxval = dims
    if w < 1 or h < 1:
        raise PGMFormatError(f"bad dimensions {w}x{h}")
    if not 1 <= maxval <= MAXVAL:
        raise PGMFormatError(f"maxval {maxval} outside [1, {MAXVAL}]")
    return magic, dims, pos + 1


def load_image(path: str | os.PathLike) -> GrayImage:
    """Read a P2 or P5 PGM. Sample values are returned exactly as stored."""
    data = Path(path).read_bytes()
    magic, (w, h, maxval), offset = _read_header(data)
    count = w * h
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        payload = data[offset : offset + need]
        if len(payload) < need:
            raise TruncatedImageError(f"{path}: expected {need} payload bytes, got {len(payload)}")
        values = np.frombuffer(payload, dtype=dtype).astype(np.uint16)
    else:
        text = data[offset - 1 :]
        fields = []
        for line in text.splitlines():
            line = line.split(b"#", 1)[0]
            fields.extend(line.split())
        if len(fields) < count:
            raise TruncatedImageError(f"{path}: expected {count} samples, got {len(fields)}")
        try:
            values = np.array([int(f) for f in fields[:count]], dtype=np.int64)
        except ValueError:
            raise PGMFormatError(f"{path}: non-integer sample") from None
    if values.max(initial=0) > maxval:
        raise PGMFormatError(f"{path}: sample exceeds maxval {maxval}")
    return GrayImage(values.reshape(h, w))


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n{MAXVAL}\n".encode("ascii")
    return header + img.pixels.astype(">u2").tobytes()


def save_image(img: GrayImage, path: str | os.PathLike) -> None:
    """Write ``img`` as binary PGM (P5), maxval 65535, big-endian samples."""
    Path(path).write_bytes(encode_pgm(img))


def mask_to_image(mask: np.ndarray) -> GrayImage:
    return GrayImage(np.where(np.asarray(mask, dtype=bool), MAXVAL, 0))


def image_to_mask(img: GrayImage) -> np.ndarray:
    return img.pixels > 0


# --------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    split: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.path in seen:
                raise ManifestError(f"duplicate path {e.path!r}")
            seen.add(e.path)
            if e.split not in SPLITS:
                raise ManifestError(f"unknown split {e.split!r} for {e.path!r}")
            if e.label not in LABEL_NAMES:
                raise ManifestError(f"label must be 0 or 1, got {e.label!r}")

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def split_counts(self) -> dict[str, int]:
        return {s: sum(e.split == s for e in self.entries) for s in SPLITS}

    def split_of(self) -> dict[str, str]:
        return {e.path: e.split for e in self.entries}


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    path = Path(path)
    entries = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["path", "label", "split"]:
            raise ManifestError(f"{path}: header must be 'path,label,split', got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                label = int(row["label"])
            except (TypeError, ValueError):
                raise ManifestError(f"{path}:{lineno}: bad label {row['label']!r}") from None
            entries.append(ManifestEntry(row["path"].strip(), label, row["split"].strip()))
    return DatasetManifest(entries, root=path.parent)


def save_manifest(manifest: DatasetManifest, path: str | os.PathLike) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label", "split"])
        for e in manifest.entries:
            writer.writerow([e.path, e.label, e.split])


# --------------------------------------------------------------------------
# phantoms


@dataclass(frozen=True)
class Ellipse:
    cy: float
    cx: float
    ry: float
    rx: float
    intensity: int


@dataclass(frozen=True)
class Nodule:
    cy: float
    cx: float
    radius: float
    intensity: int


@dataclass(frozen=True)
class PhantomSpec:
    """Parameters of a synthetic chest slice.

    ``body`` is the bright torso ellipse; ``lungs`` are dark ellipses drawn on
    top of it; ``nodules`` are bright disks drawn last. ``gaussian_sigma`` adds
    clipped white noise before salt-and-pepper corruption with fraction
    ``noise_fraction``.
    """

    height: int = 128
    width: int = 128
    background: int = 2000
    body: Ellipse | None = None
    lungs: tuple[Ellipse, ...] = ()
    nodules: tuple[Nodule, ...] = ()
    noise_fraction: float = 0.0
    gaussian_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("phantom size must be positive")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ValueError(f"noise fraction {self.noise_fraction} outside [0, 1]")
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be non-negative")
        for nod in self.nodules:
            if (
                nod.radius < 0
                or nod.cy - nod.radius < 0
                or nod.cx - nod.radius < 0
                or nod.cy + nod.radius > self.height - 1
                or nod.cx + nod.radius > self.width - 1
            ):
                raise ValueError(f"nodule {nod} does not lie inside the image")
        for v in [self.background] + [e.intensity for e in (self.body, *self.lungs) if e] + [
            n.intensity for n in self.nodules
        ]:
            if not 0 <= v <= MAXVAL:
                raise ValueError(f"intensity {v} outside [0, {MAXVAL}]")


def _grid(h, w):
    return np.mgrid[0:h, 0:w]


def rasterize_disk(shape: tuple[int, int], cy: float, cx: float, radius: float) -> np.ndarray:
    """Center-inclusion rule: pixel in disk iff its center is within ``radius``."""
    rr, cc = _grid(*shape)
    return (rr - cy) ** 2 + (cc - cx) ** 2 <= radius**2


def rasterize_ellipse(shape: tuple[int, int], e: Ellipse) -> np.ndarray:
    rr, cc = _grid(*shape)
    return ((rr - e.cy) / e.ry) ** 2 + ((cc - e.cx) / e.rx) ** 2 <= 1.0


def phantom_lung_mask(spec: PhantomSpec) -> np.ndarray:
    """Ground-truth lung fields (nodules inside lungs are part of the field)."""
    shape = (spec.height, spec.width)
    mask = np.zeros(shape, dtype=bool)
    for lung in spec.lungs:
        mask |= rasterize_ellipse(shape, lung)
    return mask


def generate_phantom(spec: PhantomSpec) -> tuple[GrayImage, np.ndarray]:
    """Render ``spec``; returns the image and the boolean nodule mask."""
    shape = (spec.height, spec.width)
    img = np.full(shape, float(spec.background))
    if spec.body is not None:
        img[rasterize_ellipse(shape, spec.body)] = spec.body.intensity
    for lung in spec.lungs:
        img[rasterize_ellipse(shape, lung)] = lung.intensity
    nodules = np.zeros(shape, dtype=bool)
    for nod in spec.nodules:
        disk = rasterize_disk(shape, nod.cy, nod.cx, nod.radius)
        img[disk] = nod.intensity
        nodules |= disk

    rng = np.random.default_rng(spec.seed)
    if spec.gaussian_sigma > 0:
        img = img + rng.normal(0.0, spec.gaussian_sigma, size=shape)
    img = np.clip(np.rint(img), 0, MAXVAL)
    if spec.noise_fraction > 0:
        hit = rng.random(shape) < spec.noise_fraction
        salt = rng.random(shape) < 0.5
        img[hit & salt] = MAXVAL
        img[hit & ~salt] = 0
    return GrayImage(img.astype(np.uint16)), nodules


def standard_phantom(
    seed: int,
    size: int = 96,
    nodule: bool = False,
    noise_fraction: float = 0.02,
    gaussian_sigma: float = 400.0,
    rng: np.random.Generator | None = None,
) -> PhantomSpec:
    """Two-lung chest phantom with randomized geometry drawn from ``seed``.

    The left lung is always the larger one; a nodule, when requested, is placed
    well inside it so it never touches the lung wall.
    """
    rng = rng if rng is not None else np.random.default_rng(seed)
    s = size / 96.0
    c = (size - 1) / 2.0
    body = Ellipse(c + rng.uniform(-1, 1) * s, c, 40 * s, 44 * s, int(rng.integers(30000, 36000)))
    lung_val = int(rng.integers(6000, 10000))
    gap = rng.uniform(19, 22) * s
    left = Ellipse(
        c + rng.uniform(-2, 2) * s, c - gap, rng.uniform(25, 28) * s, rng.uniform(14, 16) * s, lung_val
    )
    right = Ellipse(
        c + rng.uniform(-2, 2) * s, c + gap, rng.uniform(21, 23) * s, rng.uniform(11, 13) * s, lung_val
    )
    nodules: tuple[Nodule, ...] = ()
    if nodule:
        r = rng.uniform(3.0, 6.0) * s
        # keep the disk within ~45% of the lung semi-axes
        cy = left.cy + rng.uniform(-0.45, 0.45) * (left.ry - r)
        cx = left.cx + rng.uniform(-0.3, 0.3) * (left.rx - r)
        nodules = (Nodule(cy, cx, r, int(rng.integers(28000, 34000))),)
    return PhantomSpec(
        height=size,
        width=size,
        background=int(rng.integers(500, 1500)),
        body=body,
        lungs=(left, right),
        nodules=nodules,
        noise_fraction=noise_fraction,
        gaussian_sigma=gaussian_sigma,
        seed=seed,
    )
