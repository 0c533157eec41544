"""Bundled dataset manifests, 200-row samples and example experiment specs."""

from pathlib import Path

ROOT = Path(__file__).resolve().parent


def path(name: str) -> Path:
    """Absolute path of a bundled file; ``german_sample`` resolves to ``german_sample.yaml``."""
    p = ROOT / name
    if not p.suffix:
        p = p.with_suffix(".yaml")
    if not p.exists():
        raise FileNotFoundError(f"no bundled resource {name!r}")
    return p
