"""Run agent D on the bundled toy problem, replay the journal, then score it.

    python demos/toy_walkthrough.py [workdir]
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from nexus.cli import main
from nexus.toyproblem import write_bundle


def walkthrough(workdir: Path) -> None:
    manifest = write_bundle(workdir / "bundle", "D")
    out = workdir / "run"
    print(f"# manifest: {manifest}\n{manifest.read_text()}")

    print("# nexus run")
    code = main(["run", "--manifest", str(manifest), "--output-dir", str(out), "--deterministic-schedule"])
    print(f"exit={code}\n")
    print("# solution.txt")
    print((out / "solution.txt").read_text())

    print("# nexus replay")
    print(f"exit={main(['replay', '--journal', str(out / 'journal.jsonl')])}\n")

    prices = workdir / "prices.toml"
    prices.write_text("[prover]\np_input = 3e-6\np_cache = 3e-7\np_output = 1.5e-5\n\n"
                      "[rater]\np_input = 1e-6\np_cache = 1e-7\np_output = 5e-6\n")
    print("# nexus eval")
    code = main(["eval", "--journal", str(out / "journal.jsonl"), "--prices", str(prices), "--no-plot"])
    print(f"exit={code}")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        walkthrough(Path(sys.argv[1]))
    else:
        with tempfile.TemporaryDirectory() as tmp:
            walkthrough(Path(tmp))
