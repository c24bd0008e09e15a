"""The dupdiv command line: each subcommand once, with its exit status."""
import subprocess
import sys

CMDS = [
    ["classify", "--p", "0.4", "--q", "0.55"],
    ["phase-diagram", "--grid", "3"],
    ["simulate-graph", "--p", "0.5", "--q", "0.1", "--target-m", "20", "--seed", "1",
     "--workers", "1"],
    ["simulate-tagged", "--p", "0.4", "--q", "0.55", "--t-max", "3", "--checkpoints", "0,1,2,3"],
    ["expected", "--p", "0.5", "--q", "0.1", "--m", "30"],
    ["quasi-check", "--p", "0.3", "--q", "0", "--trunc", "200"],
    ["couple", "--quantile", "100,0,0.5", "--samples", "3"],
]
for c in CMDS:
    r = subprocess.run([sys.executable, "-m", "dupdiv.cli", *c], capture_output=True, text=True)
    lines = r.stdout.splitlines()
    print("$ dupdiv", " ".join(c), f"  [exit {r.returncode}]")
    for l in lines[:6]:
        print("   ", l)
    if len(lines) > 6:
        print(f"    ... ({len(lines) - 6} more lines)")
