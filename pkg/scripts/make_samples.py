"""Regenerate the bundled 200-row samples from the full UCI files in data/uci/."""

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
UCI = ROOT / "data" / "uci"
OUT = ROOT / "src" / "fairsel" / "resources"
N_ROWS = 200
SEED = 2022


def sample(src: Path, dst: Path, keep_line) -> None:
    lines = [l.rstrip("\n") for l in src.read_text().splitlines() if l.strip() and keep_line(l)]
    rng = np.random.default_rng(SEED)
    idx = np.sort(rng.choice(len(lines), size=N_ROWS, replace=False))
    dst.write_text("\n".join(lines[i] for i in idx) + "\n")


def main() -> int:
    sample(UCI / "adult.data", OUT / "adult_sample.data", lambda l: "?" not in l)
    sample(UCI / "german.data", OUT / "german_sample.data", lambda l: True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
