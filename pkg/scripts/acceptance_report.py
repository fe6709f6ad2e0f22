#!/usr/bin/env python3
"""Run the acceptance suite and print only the per-criterion summary lines."""
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parent.parent
proc = subprocess.run([sys.executable, "-m", "pytest", "-q", str(root / "tests" / "test_acceptance.py")],
                      capture_output=True, text=True, cwd=root)
lines = [l for l in proc.stdout.splitlines() if " criterion " in l and l.split()[0] in ("PASS", "FAIL")]
print("\n".join(lines) if lines else proc.stdout)
sys.exit(proc.returncode)
