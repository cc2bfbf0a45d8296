#!/usr/bin/env python3
"""Render phantom slices, extract features and compare all classifiers.

    python scripts/synthetic_benchmark.py --n-train 800 --n-test 200 --out-dir bench
"""
import argparse
import time
from pathlib import Path

from lungpipe.evaluation import PipelineConfig, emit_chart, run_comparison
from lungpipe.features import write_feature_csv
from lungpipe.synthetic import synthetic_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-train", type=int, default=800)
    ap.add_argument("--n-test", type=int, default=200)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="benchmark_out")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    train, test = synthetic_dataset(args.n_train, args.n_test, seed=args.seed, size=args.size)
    write_feature_csv(train, out / "train_features.csv")
    write_feature_csv(test, out / "test_features.csv")
    t1 = time.perf_counter()
    report = run_comparison(PipelineConfig(seed=args.seed), (train, test))
    t2 = time.perf_counter()
    report.write(out / "report.json")
    emit_chart(report, out / "accuracy")

    print(f"features: {t1 - t0:.1f}s   comparison: {t2 - t1:.1f}s")
    print(f"{'model':9s} {'set':6s} {'train':>6s} {'test':>6s}")
    acc = {(r.model, r.predictor_set, r.split): r.accuracy for r in report.rows}
    for model, pset in dict.fromkeys((r.model, r.predictor_set) for r in report.rows):
        tr, te = acc.get((model, pset, "train")), acc.get((model, pset, "test"))
        fmt = lambda v: "  err " if v is None else f"{v:6.3f}"
        print(f"{model:9s} {pset:6s} {fmt(tr)} {fmt(te)}")


if __name__ == "__main__":
    main()
