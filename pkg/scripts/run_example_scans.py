#!/usr/bin/env python3
"""Run every bundled example config and collect the CSVs under out/.

Each config exercises one pipeline: the comb correlation, the dithered
delay scan with its half-round-trip dip revivals, phase fringes at full and
half round trips, single-peak excision, and the two Monte Carlo detector
regimes.
"""

import sys
from pathlib import Path

from twophoton.cli import main

ROOT = Path(__file__).resolve().parent.parent

JOBS = [
    ("correlation", "comb_correlation.cfg"),
    ("homscan", "hom_delay_scan.cfg"),
    ("fringe", "fringe_full_trip.cfg"),
    ("fringe", "fringe_half_trip.cfg"),
    ("engineer", "excise_peak.cfg"),
    ("mc", "mc_fast_detector.cfg"),
    ("mc", "mc_slow_detector.cfg"),
]


def run(out_root: Path) -> int:
    for command, config in JOBS:
        out_dir = out_root / config.removesuffix(".cfg")
        print(f"== {command} <- configs/{config}")
        code = main(
            [command, "--config", str(ROOT / "configs" / config), "--out", str(out_dir)]
        )
        if code != 0:
            print(f"failed with exit code {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "out"
    raise SystemExit(run(target))
