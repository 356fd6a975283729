import json
import random

import pytest

import elr


def make_dataset(tmp_path, mentions=12, seed=3):
    rng = random.Random(seed)
    names = ["Titanic", "Avatar", "Aliens", "Terminator", "Abyss", "Piranha"]
    rows = []
    for i in range(mentions):
        gold = rng.choice(names)
        cands = [{"id": gold + "_(film)", "name": gold, "indegree": 50}]
        for j in range(3):
            other = rng.choice([n for n in names if n != gold])
            cands.append({"id": f"{other}_{j}", "name": other + " Street", "indegree": 5})
        order = list(range(len(cands)))
        rng.shuffle(order)
        rows.append({
            "mention": {"id": f"m{i}", "surface": gold, "text_id": f"t{i}"},
            "candidates": [cands[k] for k in order],
            "labels": [1 if k == 0 else 0 for k in order],
        })
    path = tmp_path / "d.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return str(path)


def test_similarities():
    assert elr.char_jaccard("Cameron", "James_Cameron") == pytest.approx(0.7)
    assert elr.levenshtein("kitten", "sitting") == 3
    assert elr.jaro_winkler("abc", "abc") == 1.0
    assert elr.minmax_rescale([1.0, 3.0, 2.0]) == [0.0, 1.0, 0.5]


def test_logic_gates():
    assert elr.lnn_and([1.0, 1.0]) == pytest.approx(1.0)
    assert elr.lnn_and([0.0, 1.0]) == pytest.approx(0.0)
    assert elr.lnn_or([0.0, 0.0]) == pytest.approx(0.0)
    assert elr.lnn_or([0.3, 0.0]) == pytest.approx(0.3)
    assert elr.tnorm_and([0.5, 0.4]) == pytest.approx(0.2)


def test_rules_round_trip():
    text = elr.format_rules("rule A = jacc? & prom;")
    assert elr.format_rules(text) == text
    assert "LNN-EL" in elr.template_names()
    with pytest.raises(elr.ValidationError):
        elr.format_rules("rule A = jacc? &;")


def test_pipeline(tmp_path):
    ds, summary = elr.load_dataset(make_dataset(tmp_path))
    assert len(ds) == 12
    table = elr.featurize(ds, template="Name")
    assert table.feature_names == ["jacc", "lev", "jw", "spacy", "prom"]
    assert len(table) == 48

    model = elr.train(ds, table, template="Name", epochs=5, seed=7)
    assert len(model.loss_log) == 5
    again = elr.train(ds, table, template="Name", epochs=5, seed=7)
    assert model.to_json() == again.to_json()

    report = elr.evaluate(model, ds, table, ks=[1, 4])
    assert report["recall_at"][4] == pytest.approx(1.0)
    assert 0.0 <= report["f1"] <= 1.0

    ranked = elr.link(model, ds, table)
    assert [m for m, _ in ranked] == ds.mention_ids()
    assert all(len(r) == 4 for _, r in ranked)

    restored = elr.model_from_json(model.to_json())
    assert elr.evaluate(restored, ds, table, ks=[1, 4]) == report
    weights, dot = elr.export_weights(model)
    assert json.loads(weights)
    assert dot.startswith("digraph")


def test_invalid_config(tmp_path):
    ds, _ = elr.load_dataset(make_dataset(tmp_path))
    table = elr.featurize(ds, template="Name")
    with pytest.raises(elr.ValidationError):
        elr.train(ds, table, template="Name", mu=0.1)


def test_cli(tmp_path):
    data = make_dataset(tmp_path)
    out = str(tmp_path / "f.csv")
    code, _, _ = elr.run_cli(["featurize", "--data", data, "--template", "Name", "--out", out])
    assert code == 0
    assert elr.load_feature_table(out).feature_names[0] == "jacc"
    assert elr.run_cli(["train", "--bogus"])[0] == 1
