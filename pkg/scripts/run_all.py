"""Run every experiment config in ``configs/`` and collect the summaries.

    python scripts/run_all.py [--only NAME ...] [--threads N] [--out-root DIR]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from mattila_lab import cli

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--only", nargs="*", help="experiment names to run (default: all)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-root", default=str(ROOT / "out"))
    args = p.parse_args(argv)
    status = {}
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        name = cfg.stem
        if args.only and name not in args.only:
            continue
        t0 = time.perf_counter()
        code = cli.main([name, "--config", str(cfg), "--out", str(Path(args.out_root) / name),
                         "--threads", str(args.threads)])
        status[name] = {"exit": code, "seconds": round(time.perf_counter() - t0, 1)}
        print(f"{name}: exit {code} in {status[name]['seconds']}s", file=sys.stderr)
    Path(args.out_root).mkdir(parents=True, exist_ok=True)
    (Path(args.out_root) / "run_all.json").write_text(json.dumps(status, indent=2) + "\n")
    return max((s["exit"] for s in status.values()), default=0)


if __name__ == "__main__":
    sys.exit(main())
