"""Human-readable summary tables over a directory of run outputs."""

from __future__ import annotations

from pathlib import Path

import yaml

from fairsel.errors import ConfigError
from fairsel.experiment import front_hypervolume, read_front_csv


def _run_dirs(root: Path) -> list[Path]:
    return sorted(p.parent for p in root.rglob("config.resolved"))


def _pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = lambda cells: "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(header), sep, *map(line, rows)])


def summarize(results_dir: str | Path) -> str:
    root = Path(results_dir)
    if not root.is_dir():
        raise ConfigError(f"{root} is not a directory")
    runs = _run_dirs(root)
    if not runs:
        raise ConfigError(f"no run outputs (config.resolved) under {root}")

    single, multi = [], []
    for run in runs:
        cfg = yaml.safe_load((run / "config.resolved").read_text())
        dataset = Path(cfg["dataset"]).stem
        model = cfg["model"]["kind"]
        (base,) = read_front_csv(run / "baseline.csv")
        total = str(len(base.mask))
        if cfg["mode"] in ("soga", "baseline"):
            single.append([dataset, model, "Naive (all features)", _pct(base.accuracy),
                           f"{base.f1:.3f}", f"{base.spd_abs:.3f}", total, "-"])
        if cfg["mode"] == "soga":
            (best,) = read_front_csv(run / "best.csv")
            single.append([dataset, model, "Genetic algorithm", _pct(best.accuracy),
                           f"{best.f1:.3f}", f"{best.spd_abs:.3f}", total, str(best.n_selected)])
        elif cfg["mode"] == "nsga2":
            front = read_front_csv(run / "front.csv")
            if not front:
                continue
            perf = max(front, key=lambda r: (r.f1, -r.spd_abs))
            fair = min(front, key=lambda r: (r.spd_abs, -r.f1))
            hv = f"{front_hypervolume(front):.3f}"
            for label, r in (("Max performance", perf), ("Max fairness", fair)):
                multi.append([dataset, model, label, f"{r.f1:.3f}", f"{r.spd_abs:.3f}",
                              total, str(r.n_selected), str(len(front)), hv])

    parts = []
    if single:
        parts.append("Single-objective (minimize absolute SPD)\n\n" + _table(
            ["Dataset", "Model", "Method", "Accuracy", "F1", "SPD (abs)", "Total", "Selected"], single))
    if multi:
        parts.append("Bi-objective NSGA-II (first front extremes)\n\n" + _table(
            ["Dataset", "Model", "Objective", "F1", "SPD (abs)", "Total", "Selected", "Front", "HV"], multi))
    return "\n\n".join(parts) + "\n"


def write_summary(results_dir: str | Path) -> str:
    text = summarize(results_dir)
    (Path(results_dir) / "summary.md").write_text(text)
    return text
