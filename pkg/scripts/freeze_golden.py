"""Regenerate tests/golden from the default synthetic fixture.

Run only after auditing a change that is meant to alter pipeline output:

    python scripts/freeze_golden.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

from surveydisagree.cli import main

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"
FILES = [
    "table1.csv",
    "indicators/AA_DB.csv",
    "indicators/AA_DC.csv",
    "ccf/AA_ccf.csv",
    "irf/AA_irf.csv",
    "irf/BB_irf.csv",
    "irf/AA_model_summary.csv",
]


def run():
    with tempfile.TemporaryDirectory() as tmp:
        fixture = Path(tmp) / "fixture"
        if main(["simulate", "--out", str(fixture), "--seed", "0"]) != 0:
            sys.exit("simulate failed")
        code = main(["pipeline", "--config", str(fixture / "config.ini"), "--out", str(Path(tmp) / "out")])
        if code != 0:
            sys.exit(f"pipeline exited with {code}")
        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        for rel in FILES:
            dest = GOLDEN / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(Path(tmp) / "out" / rel, dest)
    print(f"wrote {len(FILES)} golden files to {GOLDEN}")


if __name__ == "__main__":
    run()
