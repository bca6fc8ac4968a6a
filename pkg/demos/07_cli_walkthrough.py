"""Driving the command-line interface.

Each subcommand reads a TOML scenario and writes JSON (and CSV or text)
artifacts.  Exit status 0 means success, 2 a failed verdict, 3 a
configuration error and 4 a solver fault.
"""

from __future__ import annotations

import subprocess
import sys
import tempfile
from pathlib import Path

from nonlocal_logistic.config import shipped_scenarios

scenarios = shipped_scenarios()
out = Path(tempfile.mkdtemp(prefix="nonlocal-logistic-"))


def cli(*args):
    cmd = [sys.executable, "-m", "nonlocal_logistic", *map(str, args)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print(f"$ nonlocal-logistic {' '.join(map(str, args[:3]))} ...  -> exit {proc.returncode}")
    print((proc.stdout + proc.stderr).rstrip())
    return proc.returncode


cli("eig", "--config", scenarios["advected-1d"], "--out", out)
cli("verify", "--config", scenarios["symmetric-1d"], "--out", out)
cli("branch", "--config", scenarios["symmetric-1d"], "--out", out, "--mesh-scale", 2)
cli("hypotheses", "--config", scenarios["identity-2d"], "--out", out)

bad = out / "bad.toml"
bad.write_text(scenarios["symmetric-1d"].read_text().replace("b = 1\n", "b = 0\n", 1))
cli("eig", "--config", bad, "--out", out)

print("artifacts:", sorted(p.name for p in out.iterdir()))
