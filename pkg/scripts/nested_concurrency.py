"""Measure how many leaf tasks overlap under a two-layer plan.

The controller maps over the outer layer; each outer task maps over the
inner layer.  Every leaf records its start and end time, and the peak
number of overlapping intervals is reported.

    python scripts/nested_concurrency.py --outer 2 --inner 3
"""
import argparse
from dataclasses import dataclass

from futurekit import Session, future_map
from futurekit.relay import RecordingSinks


@dataclass
class NestedConfig:
    outer: int = 2
    inner: int = 3
    leaf_ms: int = 800


def peak_overlap(intervals) -> int:
    edges = sorted([(a, 1) for a, _ in intervals] + [(b, -1) for _, b in intervals])
    peak = level = 0
    for _, step in edges:
        level += step
        peak = max(peak, level)
    return peak


def main(cfg: NestedConfig) -> None:
    plan = f"process_pool:{cfg.outer}/process_pool:{cfg.inner}"
    leaf = f"(lambda (j) (let ((start (now_ms))) (begin (sleep_ms {cfg.leaf_ms}) (list start (now_ms) (pid)))))"
    outer = f"(lambda (i) (future_map (seq 1 {cfg.inner}) {leaf}))"
    with Session(plan, sinks=RecordingSinks()) as s:
        groups = future_map(range(cfg.outer), outer, session=s)
    leaves = [leaf for group in groups for leaf in group]
    t0 = min(a for a, _, _ in leaves)
    for a, b, pid in sorted(leaves):
        print(f"pid {pid:>7}  {a - t0:>6} ms .. {b - t0:>6} ms")
    peak = peak_overlap([(a, b) for a, b, _ in leaves])
    print(f"plan {plan}: {len(leaves)} leaves, {len({p for *_, p in leaves})} processes, peak overlap {peak}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--outer", type=int, default=NestedConfig.outer)
    ap.add_argument("--inner", type=int, default=NestedConfig.inner)
    ap.add_argument("--leaf-ms", type=int, default=NestedConfig.leaf_ms)
    main(NestedConfig(**vars(ap.parse_args())))
