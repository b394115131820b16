#!/usr/bin/env python3
"""Run every bundled experiment preset at desk scale.

Writes one output directory per preset under --out (default ./runs), each
containing per-round CSVs, per-run summaries, and a reproducible manifest.
Desk-scale overrides (rounds, dataset size, seeds) keep the full sweep in the
minutes range; pass --full for the 50-round defaults.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from complyfed.cli import run_config
from complyfed.experiments import PRESETS


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs", help="output root directory")
    parser.add_argument("--seeds", default="0,1,2",
                        help="comma-separated seeds (default 0,1,2)")
    parser.add_argument("--rounds", type=int, default=30)
    parser.add_argument("--full", action="store_true",
                        help="use the 50-round preset defaults unchanged")
    args = parser.parse_args()

    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    out_root = Path(args.out)
    for name in PRESETS:
        doc = {"preset": name, "seeds": seeds}
        if not args.full:
            doc["rounds"] = args.rounds
        t0 = time.perf_counter()
        paths = run_config(doc, out_root / name)
        print(f"{name}: {len(paths)} runs in {time.perf_counter() - t0:.1f}s "
              f"-> {out_root / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
