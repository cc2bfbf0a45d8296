import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lungpipe.errors import DegenerateDistributionError, NoRegionError
from lungpipe.features import (
    CSV_COLUMNS,
    FeatureRecord,
    FeatureTable,
    Region,
    area,
    eccentricity,
    entropy,
    extract_features,
    intensity_stats,
    label_components,
    perimeter,
    read_feature_csv,
    write_feature_csv,
)
from lungpipe.imgio import GrayImage, Nodule, PhantomSpec, generate_phantom, rasterize_disk
from oracles import edge_scan_perimeter, shannon_bits, two_pass_moments, union_find_components

masks = arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12)))


def region_of(values):
    v = np.asarray(values)
    return Region(np.column_stack([np.zeros(v.size, int), np.arange(v.size)]), v)


def test_empty_mask():
    assert label_components(np.zeros((4, 4), bool)) == []


def test_diagonal_pixels_one_region():
    m = np.array([[1, 0], [0, 1]], bool)
    regs = label_components(m)
    assert len(regs) == 1 and area(regs[0]) == 2


@given(masks)
def test_components_match_union_find(m):
    regs = label_components(m)
    got = {frozenset(map(tuple, r.coords.tolist())) for r in regs}
    assert got == union_find_components(m)
    assert sum(area(r) for r in regs) == m.sum()
    firsts = [tuple(r.coords[0]) for r in regs]
    assert firsts == sorted(firsts)


def test_plus_area():
    m = np.zeros((5, 5), bool)
    m[2, 1:4] = m[1:4, 2] = True
    assert area(label_components(m)[0]) == 5


def test_disk_area_shared_rasterizer():
    spec = PhantomSpec(height=20, width=20, background=0, nodules=(Nodule(10, 10, 3, 50000),))
    img, truth = generate_phantom(spec)
    rec = extract_features(img, truth, "d")
    assert rec.area == rasterize_disk((20, 20), 10, 10, 3).sum()
    assert rec.perimeter == edge_scan_perimeter(np.argwhere(truth))


def test_perimeter_small():
    assert perimeter(Region([[0, 0]])) == 4
    assert perimeter(Region([[0, 0], [0, 1], [1, 0], [1, 1]])) == 8
    ring = np.ones((3, 3), bool)
    ring[1, 1] = False
    assert perimeter(label_components(ring)[0]) == 16


@given(masks)
def test_perimeter_matches_edge_scan(m):
    for r in label_components(m):
        p = perimeter(r)
        assert p == edge_scan_perimeter(r.coords.tolist())
        r0, c0, r1, c1 = r.bbox
        assert p >= 4
        assert p >= 2 * max(r1 - r0 + 1, c1 - c0 + 1) + 2


@given(masks, st.integers(0, 5), st.integers(0, 5))
def test_translation_invariant(m, dr, dc):
    if not m.any():
        return
    rng = np.random.default_rng(0)
    img = rng.integers(0, 65536, size=m.shape)
    big_m = np.zeros((m.shape[0] + dr, m.shape[1] + dc), bool)
    big_i = np.zeros(big_m.shape, np.int64)
    big_m[dr:, dc:] = m
    big_i[dr:, dc:] = img
    a = extract_features(GrayImage(img), m, "x")
    b = extract_features(GrayImage(big_i), big_m, "x")
    assert a == b


def test_two_point_moments():
    s, sk, ku = intensity_stats(region_of([0, 255] * 5))
    assert s == 127.5 and sk == 0.0 and ku == pytest.approx(1.0)


@given(st.lists(st.integers(0, 30000), min_size=1, max_size=20))
def test_symmetric_skew_zero(half):
    vals = [30000 + v for v in half] + [30000 - v for v in half]
    if len(set(vals)) == 1:
        return
    _, sk, _ = intensity_stats(region_of(vals))
    assert abs(sk) <= 1e-12


@given(st.lists(st.integers(0, 65535), min_size=2, max_size=200))
def test_moments_match_two_pass(vals):
    if len(set(vals)) == 1:
        with pytest.raises(DegenerateDistributionError) as ei:
            intensity_stats(region_of(vals))
        assert ei.value.stddev == 0.0
        return
    got = intensity_stats(region_of(vals))
    want = two_pass_moments(vals)
    for g, w in zip(got, want):
        assert g == pytest.approx(w, rel=1e-9, abs=1e-12)


def test_entropy_examples():
    assert entropy(region_of([5] * 10), 256) == 0.0
    step = 65536 // 4
    uniform = [b * step + 7 for b in range(4)] * 3
    assert entropy(region_of(uniform), 4) == pytest.approx(2.0)
    crafted = [0] * 4 + [step] * 2 + [2 * step] + [3 * step]
    assert entropy(region_of(crafted), 4) == pytest.approx(1.75, abs=1e-12)
    with pytest.raises(ValueError):
        entropy(region_of([1, 2]), 1)


@given(st.lists(st.integers(0, 65535), min_size=1, max_size=100), st.integers(2, 512))
def test_entropy_bounds(vals, bins):
    h = entropy(region_of(vals), bins)
    assert 0.0 <= h <= math.log2(min(bins, len(set(vals)))) + 1e-12
    counts = np.bincount(np.array(vals) * bins // 65536, minlength=bins)
    assert h == pytest.approx(shannon_bits(counts.tolist()), abs=1e-12)


def test_constant_region_record():
    m = np.zeros((6, 6), bool)
    m[1:4, 1:4] = True
    rec = extract_features(GrayImage(np.full((6, 6), 900)), m, "c", 1)
    assert rec.stddev == 0.0 and rec.entropy == 0.0
    assert rec.skewness is None and rec.kurtosis is None


def test_only_largest_region_used():
    rng = np.random.default_rng(4)
    img = GrayImage(rng.integers(0, 65536, (12, 12)))
    m = np.zeros((12, 12), bool)
    m[0:5, 0:5] = True
    base = extract_features(img, m, "a")
    m2 = m.copy()
    m2[8:10, 8:11] = True
    assert extract_features(img, m2, "a") == base


def test_empty_mask_raises():
    with pytest.raises(NoRegionError):
        extract_features(GrayImage(np.zeros((3, 3))), np.zeros((3, 3), bool), "e")


def test_eccentricity():
    assert eccentricity(label_components(np.ones((5, 5), bool))[0]) == pytest.approx(0.0)
    line = np.zeros((3, 9), bool)
    line[1, :] = True
    assert eccentricity(label_components(line)[0]) == pytest.approx(1.0)


def test_csv_round_trip(tmp_path):
    recs = [
        FeatureRecord("a", 10, 14, 1 / 3, -0.1234567890123456, 2.5, 3.25, 1),
        FeatureRecord("b,q", 1, 4, 0.0, None, None, 0.0, 0),
    ]
    t = FeatureTable(recs)
    write_feature_csv(t, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    back = read_feature_csv(tmp_path / "f.csv")
    assert back.records == recs


def test_csv_without_labels(tmp_path):
    t = FeatureTable([FeatureRecord("a", 3, 8, 2.0, 0.5, 1.5, 1.0)])
    write_feature_csv(t, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == ",".join(CSV_COLUMNS[:-1])
    assert not read_feature_csv(tmp_path / "f.csv").has_labels


def test_table_label_presence():
    with pytest.raises(ValueError):
        FeatureTable([FeatureRecord("a", 1, 4, 0, None, None, 0, 1), FeatureRecord("b", 1, 4, 0, None, None, 0)])
