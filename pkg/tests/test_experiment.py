import numpy as np
import pytest
import yaml

from conftest import ROOT, UCI
from fairsel import cli, experiment
from fairsel.data import mask_view, split
from fairsel.errors import ConfigError
from fairsel.evolve import str_to_bits
from fairsel.experiment import (
    EvalCache,
    Evaluator,
    FrontReport,
    execute,
    export_front_csv,
    front_report,
    is_staircase,
    load_spec,
    read_front_csv,
    run_all,
    run_baseline,
    run_experiment,
    spec_from_dict,
    with_overrides,
)
from fairsel.metrics import EvaluationRecord, statistical_parity_difference
from fairsel.models import TrainConfig, predict, train


def sample_spec(tmp_path, mode="nsga2", **extra):
    doc = {
        "dataset": "fairsel:german_sample",
        "mode": mode,
        "evolve": {"population_size": 12, "generations": 5, "seed": 3},
        "output": str(tmp_path / mode),
    }
    doc.update(extra)
    return spec_from_dict(doc, name=f"t_{mode}")


def test_evaluator_memoizes(german_split):
    ev = Evaluator(german_split, TrainConfig(), EvalCache())
    mask = np.ones(20, bool)
    a = ev(mask)
    b = ev(mask)
    assert a == b and ev.cache.hits == 1 and ev.trainings == 1


def test_full_mask_record_matches_metrics(german_split):
    ev = Evaluator(german_split, TrainConfig(), EvalCache())
    rec = ev(np.ones(20, bool))
    model = train(TrainConfig(), german_split.train)
    preds = predict(model, german_split.holdout)
    assert rec.spd_signed == statistical_parity_difference(preds, german_split.holdout.protected_values)
    assert rec.n_selected == 20 and rec.mask == "1" * 20


def test_trainings_bounded_by_distinct_masks(german_sample, rng):
    ev = Evaluator(split(german_sample, 0, 0.7), TrainConfig(), EvalCache())
    masks = [rng.random(20) < 0.5 for _ in range(6)] * 4
    for m in masks:
        m[0] = True
        ev(m)
    assert ev.trainings == len({m.tobytes() for m in masks})


def test_cache_soundness(german_sample, rng):
    pair = split(german_sample, 0, 0.7)
    cached, plain = Evaluator(pair, TrainConfig(), EvalCache()), Evaluator(pair, TrainConfig(), None)
    for _ in range(10):
        m = rng.random(20) < 0.5
        m[3] = True
        a, b = cached(m), plain(m)
        assert (a.accuracy, a.f1, a.spd_signed) == (b.accuracy, b.f1, b.spd_signed)


def test_training_failure_yields_flagged_sentinel(german_split, monkeypatch):
    def boom(*a, **k):
        raise experiment.TrainingError("degenerate")

    monkeypatch.setattr(experiment, "train", boom)
    rec = Evaluator(german_split, TrainConfig(), EvalCache())(np.ones(20, bool))
    assert rec.failed and rec.f1 == 0.0 and rec.spd_abs == 1.0
    assert front_report([rec]).records == []


def test_baseline_counts(german_split):
    spec = spec_from_dict({"dataset": str(UCI / "german.yaml"), "mode": "baseline"})
    rec = run_baseline(spec)
    assert rec.n_selected == 20
    assert rec == Evaluator(german_split, TrainConfig(), None)(np.ones(20, bool))
    spec = spec_from_dict({"dataset": "fairsel:adult_sample", "mode": "baseline"})
    assert run_baseline(spec).n_selected == 14


def rec(spd, f1, mask="1"):
    return EvaluationRecord(accuracy=0.5, f1=f1, spd_signed=-spd, spd_abs=spd, mask=mask, n_selected=mask.count("1"))


def test_export_single_member(tmp_path):
    path = export_front_csv(FrontReport([rec(0.1, 0.5, "101")]), tmp_path / "f.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "mask,n_selected,f1,spd_abs,spd_signed,accuracy"
    assert len(lines) == 2


def test_export_round_trip(tmp_path):
    report = front_report([rec(0.3, 2 / 3, "110"), rec(1 / 7, 0.1 + 0.2, "011"), rec(0.0, 1e-17, "001")])
    path = export_front_csv(report, tmp_path / "front.csv")
    back = read_front_csv(path)
    assert back == report.records
    assert [r.spd_abs for r in back] == sorted(r.spd_abs for r in back)
    assert [r.f1 for r in back] == sorted(r.f1 for r in back)
    with pytest.raises(ValueError):
        export_front_csv(FrontReport([]), tmp_path / "empty.csv")


def test_is_staircase():
    assert is_staircase([rec(0.0, 0.2), rec(0.1, 0.5), rec(0.1, 0.5)])
    assert not is_staircase([rec(0.0, 0.5), rec(0.1, 0.2)])


def test_soga_outputs(tmp_path):
    spec = sample_spec(tmp_path, "soga")
    assert spec.evolve.force_protected
    run_experiment(spec)
    out = tmp_path / "soga"
    history = (out / "history.csv").read_text().splitlines()
    assert len(history) == 1 + spec.evolve.generations
    best = read_front_csv(out / "best.csv")
    assert len(best) == 1 and best[0].mask[8] == "1"
    resolved = yaml.safe_load((out / "config.resolved").read_text())
    assert resolved["evolve"]["mutation_rate"] == 0.05
    assert resolved["model"]["epochs"] == 200


def test_nsga2_outputs_and_determinism(tmp_path):
    a = sample_spec(tmp_path / "a")
    b = sample_spec(tmp_path / "b")
    run_experiment(a)
    run_experiment(b)
    front = read_front_csv(tmp_path / "a" / "nsga2" / "front.csv")
    assert 0 < len(front) <= 12
    assert is_staircase(front)
    for name in ("front.csv", "history.csv", "baseline.csv"):
        assert (tmp_path / "a" / "nsga2" / name).read_bytes() == (tmp_path / "b" / "nsga2" / name).read_bytes()


def test_front_numbers_recomputable(tmp_path):
    spec = sample_spec(tmp_path)
    run_experiment(spec)
    _, pair = experiment.prepare_data(spec)
    fresh = Evaluator(pair, spec.model, None)
    for r in read_front_csv(tmp_path / "nsga2" / "front.csv"):
        again = fresh(str_to_bits(r.mask))
        assert (again.f1, again.spd_abs, again.spd_signed, again.accuracy) == (r.f1, r.spd_abs, r.spd_signed, r.accuracy)


def test_spec_errors(tmp_path):
    with pytest.raises(ConfigError):
        spec_from_dict({"mode": "soga"})
    with pytest.raises(ConfigError):
        spec_from_dict({"dataset": "fairsel:german_sample", "mode": "grid"})
    with pytest.raises(ConfigError):
        spec_from_dict({"dataset": "fairsel:german_sample", "evolve": {"popsize": 4}})
    with pytest.raises(ConfigError):
        spec_from_dict({"dataset": "fairsel:german_sample", "bogus": 1})
    with pytest.raises(ConfigError):
        spec_from_dict({"dataset": str(tmp_path / "missing.yaml")})
    with pytest.raises(ConfigError):
        load_spec(tmp_path / "nope.yaml")


def test_overrides(tmp_path):
    spec = with_overrides(sample_spec(tmp_path), seed=9, generations=2, pop_size=6, out=tmp_path / "o")
    assert (spec.evolve.seed, spec.model.seed, spec.evolve.generations, spec.evolve.population_size) == (9, 9, 2, 6)
    assert spec.split_seed == 0 and spec.output == (tmp_path / "o").resolve()
    with pytest.raises(ConfigError):
        with_overrides(spec, pop_size=7)


def write_spec(tmp_path, name, doc):
    p = tmp_path / f"{name}.yaml"
    p.write_text(yaml.safe_dump(doc))
    return p


def test_cli_run_and_report(tmp_path, capsys):
    spec = write_spec(tmp_path, "quick", {
        "dataset": "fairsel:german_sample", "mode": "soga",
        "evolve": {"population_size": 6, "generations": 2},
    })
    assert cli.main(["run", str(spec), "--out", str(tmp_path / "res" / "quick"), "--seed", "4"]) == 0
    assert cli.main(["baseline", str(spec), "--out", str(tmp_path / "res" / "base")]) == 0
    assert cli.main(["report", str(tmp_path / "res")]) == 0
    out = capsys.readouterr().out
    assert "Genetic algorithm" in out and "Naive" in out
    assert (tmp_path / "res" / "summary.md").exists()
    assert yaml.safe_load((tmp_path / "res" / "quick" / "config.resolved").read_text())["evolve"]["seed"] == 4


def test_cli_run_all(tmp_path):
    d = tmp_path / "specs"
    d.mkdir()
    for mode in ("soga", "nsga2"):
        write_spec(d, mode, {"dataset": "fairsel:adult_sample", "mode": mode,
                             "evolve": {"population_size": 6, "generations": 2}})
    assert cli.main(["run-all", str(d), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "nsga2" / "front.csv").exists()
    assert (tmp_path / "out" / "soga" / "best.csv").exists()


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 1
    bad_data = tmp_path / "bad.data"
    bad_data.write_text("a b c\nd e\n")
    manifest = tmp_path / "bad_manifest.yaml"
    manifest.write_text(yaml.safe_dump({
        "file": "bad.data", "delimiter": "whitespace", "columns": ["a", "b", "c"],
        "label": "c", "positive_label": "c", "protected": "a", "reference_group": "a",
    }))
    spec = write_spec(tmp_path, "bad", {"dataset": str(manifest), "mode": "baseline"})
    assert cli.main(["run", str(spec)]) == 2
    err = capsys.readouterr().err
    assert "load-data" in err and ":2:" in err

    good = write_spec(tmp_path, "good", {"dataset": "fairsel:german_sample", "mode": "baseline",
                                         "output": str(tmp_path / "g")})
    monkeypatch.setattr(experiment, "run_baseline", lambda *a, **k: 1 / 0)
    assert cli.main(["run", str(good)]) == 3
    assert "baseline" in capsys.readouterr().err
    assert cli.main(["report", str(tmp_path / "nothing")]) == 1


def test_bundled_specs_parse():
    for d in ("grid", "sample"):
        for path in sorted((ROOT / "experiments" / d).glob("*.yaml")):
            spec = load_spec(path)
            assert spec.dataset.is_file()
    assert len(list((ROOT / "experiments" / "grid").glob("*.yaml"))) == 12
