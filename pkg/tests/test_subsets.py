import numpy as np
import pytest

from lungpipe.errors import RankError, SubsetSizeError
from lungpipe.learn import best_subsets, design_from_arrays, write_subset_csv
from oracles import exhaustive_subsets


def test_planted_single_predictor(rng):
    x1 = rng.integers(0, 2, 60)
    X = np.column_stack([x1, rng.normal(size=60), rng.normal(size=60)])
    rep = best_subsets(design_from_arrays(X, x1, ("a", "b", "c")))
    assert rep.best(1).variables == ("a",)
    assert rep.best(1).rss == pytest.approx(0.0, abs=1e-18)


def test_k0_rss_is_tss(rng):
    y = rng.integers(0, 2, 40)
    rep = best_subsets(design_from_arrays(rng.normal(size=(40, 3)), y))
    assert rep.best(0).rss == pytest.approx(rep.tss, rel=1e-12)
    assert rep.best(0).variables == ()


@pytest.mark.parametrize("seed", range(8))
def test_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    n, p = 50, int(rng.integers(2, 7))
    X = rng.normal(size=(n, p))
    y = (X[:, 0] - 0.7 * X[:, 1] + rng.normal(size=n) > 0).astype(int)
    d = design_from_arrays(X, y)
    rep = best_subsets(d)
    oracle = exhaustive_subsets(d.X, d.y.astype(float))
    for k, (rss, cols) in enumerate(oracle):
        row = rep.best(k)
        assert row.variables == tuple(d.columns[j] for j in cols)
        assert row.rss == pytest.approx(rss, rel=1e-9, abs=1e-12)
    rss = [r.rss for r in rep.rows]
    assert all(a >= b - 1e-12 for a, b in zip(rss, rss[1:]))


def test_criteria_formulas(rng):
    n = 45
    X = rng.normal(size=(n, 3))
    y = (X[:, 2] + rng.normal(size=n) > 0).astype(int)
    rep = best_subsets(design_from_arrays(X, y))
    s2 = rep.best(3).rss / (n - 4)
    assert rep.sigma2 == pytest.approx(s2)
    for r in rep.rows:
        assert r.cp == pytest.approx((r.rss + 2 * r.k * s2) / n)
        assert r.bic == pytest.approx((r.rss + np.log(n) * r.k * s2) / n)
        assert r.adj_r2 == pytest.approx(1 - (r.rss / (n - r.k - 1)) / (rep.tss / (n - 1)))
    sel = rep.selected
    assert rep.rows[sel["cp"]].cp == min(r.cp for r in rep.rows)
    assert rep.rows[sel["adj_r2"]].adj_r2 == max(r.adj_r2 for r in rep.rows)


def test_size_and_rank_errors(rng):
    with pytest.raises(SubsetSizeError):
        best_subsets(design_from_arrays(rng.normal(size=(40, 21)), rng.integers(0, 2, 40)))
    with pytest.raises(RankError):
        best_subsets(design_from_arrays(rng.normal(size=(4, 3)), [0, 1, 0, 1]))


def test_csv(tmp_path, rng):
    rep = best_subsets(design_from_arrays(rng.normal(size=(20, 2)), rng.integers(0, 2, 20), ("u", "v")))
    write_subset_csv(rep, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "k,variables,rss,cp,bic,adj_r2"
    assert len(lines) == 4
    assert lines[3].startswith("2,u+v,") or lines[3].startswith("2,v+u,")
