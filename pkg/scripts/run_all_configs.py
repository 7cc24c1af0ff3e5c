"""Run every shipped config through the CLI and summarize exit codes."""

import argparse
import sys
import time
from pathlib import Path

from mbwave.cli import main

ROOT = Path(__file__).resolve().parent.parent
RUNS = [
    ("optimal-times", "optimal_times.json"),
    ("region", "region.json"),
    ("identity-check", "identity_check.json"),
    ("carleman-check", "carleman_check.json"),
    ("simulate", "simulate.json"),
    ("observability-scan", "observability_scan.json"),
    ("hum", "hum_static.json"),
    ("hum", "hum_moving.json"),
    ("simulate", "malformed_speed.json"),
]


def run(out_root: Path, skip_slow: bool) -> int:
    failures = 0
    for sub, name in RUNS:
        if skip_slow and sub in ("hum", "observability-scan"):
            continue
        out = out_root / Path(name).stem
        t0 = time.perf_counter()
        code = main([sub, "--config", str(ROOT / "configs" / name), "--out", str(out)])
        expected = 2 if name.startswith("malformed") else 0
        status = "ok" if code == expected else "UNEXPECTED"
        failures += code != expected
        print(f"{sub:20s} {name:26s} exit {code} ({status}, {time.perf_counter() - t0:.1f} s)")
    return failures


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out", help="artifact root")
    ap.add_argument("--skip-slow", action="store_true", help="skip the HUM and scan runs")
    args = ap.parse_args()
    sys.exit(1 if run(Path(args.out), args.skip_slow) else 0)
