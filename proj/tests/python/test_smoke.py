import math

import pytest

import gqpp


def test_version():
    assert gqpp.__version__.count(".") == 2


def test_kendall_and_pearson():
    assert gqpp.kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3, abs=1e-12)
    assert gqpp.pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-12)


def test_degenerate_correlation_raises():
    with pytest.raises(gqpp.NumericalError):
        gqpp.pearson([1, 1, 1], [1, 2, 3])


def test_t_test():
    t, p, df = gqpp.paired_t_test([1, 2, 3], [0, 0, 0])
    assert t == pytest.approx(3.4641016, abs=1e-6)
    assert p == pytest.approx(0.0742, abs=1e-3)
    assert df == 2


def test_baselines():
    assert gqpp.baseline("sigma_k", [3, 2, 1], k=3) == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert gqpp.baseline("nqc", [3, 2, 1], collection_score=2, k=3) == pytest.approx(math.sqrt(2 / 3) / 2)
    with pytest.raises(gqpp.DataError):
        gqpp.baseline("clarity", [1.0])


def test_aggregate():
    preds = [0.2, 0.8, 0.5]
    assert gqpp.aggregate(preds, "max") == 0.8
    assert gqpp.aggregate(preds, "mean") == pytest.approx(0.5, abs=1e-15)
    assert gqpp.aggregate(preds, "first") == 0.2


def test_splits_are_balanced():
    qids = [f"q{i}" for i in range(11)]
    splits = gqpp.make_splits(qids, 5, 3)
    assert len(splits) == 5
    for fold1, fold2 in splits:
        assert len(fold1) == 6 and len(fold2) == 5
        assert sorted(fold1 + fold2) == sorted(qids)


def test_embeddings_round_trip(tmp_path):
    records = [("q1", "d1", 1, [0.5, -1.0]), ("q1", "d2", 2, [0.25, 2.0])]
    for name in ("e.qppe", "e.jsonl"):
        path = str(tmp_path / name)
        gqpp.save_embeddings(path, 2, "unit", records)
        dim, encoder, loaded = gqpp.load_embeddings(path)
        assert dim == 2 and encoder == "unit"
        assert [(q, d, r, list(v)) for q, d, r, v in loaded] == records


def test_experiment_on_synthetic(tmp_path):
    d = str(tmp_path / "syn")
    gqpp.write_synthetic(d, num_queries=16, docs=8, dim=8, seed=1)
    cfg = {
        "run": f"{d}/run.txt",
        "qrels": f"{d}/qrels.txt",
        "embeddings": f"{d}/embeddings.qppe",
        "methods": ["nsigma", "model"],
        "n_splits": 2,
        "epochs": 1,
        "lr_grid": [1e-3],
        "aggregations": ["mean"],
        "n_layers": 1,
        "d_model": 8,
        "threads": 1,
    }
    report = gqpp.run_experiment(cfg)
    assert len(report["splits"]) == 2
    assert set(report["summary"]) == {"nsigma", "model"}
    assert report == gqpp.run_experiment(cfg)
