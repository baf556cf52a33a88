"""Run the output-and-conditions example on a plan and show what is relayed.

Standard output is replayed first, then messages and warnings in the order
they were signalled, whatever backend evaluated the task.

    python scripts/relay_demo.py --plan process_pool:2
"""
import argparse
from dataclasses import dataclass

from futurekit import Session
from futurekit.conformance.corpus import RELAY_PROGRAM, RELAY_X


@dataclass
class RelayConfig:
    plan: str = "sequential"


def main(cfg: RelayConfig) -> None:
    print(f"-- evaluating on {cfg.plan}", flush=True)
    with Session(cfg.plan) as s:
        f = s.future(RELAY_PROGRAM, {"x": RELAY_X})
        print(f"-- resolved right after creation: {s.resolved(f)}; nothing is relayed before value()", flush=True)
        v = s.value(f)
    print(f"-- value: {v}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--plan", default=RelayConfig.plan)
    main(RelayConfig(**vars(ap.parse_args())))
