"""Time a batch of sleeping tasks under a plan against sequential evaluation.

    python scripts/bench.py --plan process_pool:2 --tasks 8 --task-ms 300
"""
import argparse
from dataclasses import dataclass

from futurekit.cli import bench


@dataclass
class BenchConfig:
    plan: str = "process_pool:2"
    tasks: int = 8
    task_ms: int = 300
    repeats: int = 3


def main(cfg: BenchConfig) -> None:
    ratios = []
    for r in range(cfg.repeats):
        t = bench(cfg.plan, cfg.tasks, cfg.task_ms)
        ratio = t["plan"] / t["sequential"]
        ratios.append(ratio)
        print(f"run {r}: sequential {t['sequential']:.3f} s, {cfg.plan} {t['plan']:.3f} s, ratio {ratio:.2f}")
    print(f"best ratio {min(ratios):.2f}, worst {max(ratios):.2f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--plan", default=BenchConfig.plan)
    ap.add_argument("--tasks", type=int, default=BenchConfig.tasks)
    ap.add_argument("--task-ms", type=int, default=BenchConfig.task_ms)
    ap.add_argument("--repeats", type=int, default=BenchConfig.repeats)
    main(BenchConfig(**vars(ap.parse_args())))
