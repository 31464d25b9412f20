# tests/python/test_smoke.py

import itertools
import json
import math

import numpy as np
import pytest

import cogseg


def brute_force_best_alignment(x, y, probs, lost, phones, alpha):
    """Enumerate valid alignments of x to y and return the best log score."""
    col = {c: i for i, c in enumerate(lost)}
    row = {p: i for i, p in enumerate(phones)}
    eps = len(lost)
    best = -math.inf

    def rec(tau, i, acc):
        nonlocal best
        if tau == len(y):
            if i == len(x):
                best = max(best, acc)
            return
        r = row[y[tau]]
        rec(tau + 1, i, acc + math.log(probs[r][eps]))  # delete
        if i < len(x):
            rec(tau + 1, i + 1, acc + math.log(probs[r][col[x[i]]]))
        if i + 1 < len(x) and alpha > 0:
            rec(tau + 1, i + 2,
                acc + math.log(probs[r][col[x[i]]]) + math.log(alpha) +
                math.log(probs[r][col[x[i + 1]]]))

    rec(0, 0, 0.0)
    return best


@pytest.fixture(scope="module")
def toy():
    rng = np.random.default_rng(7)
    lost = ["a", "b", "c"]
    phones = ["P", "Q", "R"]
    probs = rng.dirichlet(np.ones(4), size=3)
    return lost, phones, probs


def test_align_viterbi_matches_numpy_enumeration(toy):
    lost, phones, probs = toy
    for xl in range(1, 4):
        for yl in range(1, 3):
            for x in itertools.product(lost, repeat=xl):
                for y in itertools.product(phones, repeat=yl):
                    lp, ops = cogseg.align_viterbi(
                        list(x), list(y), lost, phones, probs, 0.7)
                    want = brute_force_best_alignment(
                        x, y, probs, lost, phones, 0.7)
                    if math.isinf(want):
                        assert math.isinf(lp)
                    else:
                        assert lp == pytest.approx(want, abs=1e-10)
                        assert len(ops) == yl


def test_boundary_dps_are_consistent(toy):
    lost, phones, probs = toy
    chars = ["a", "c", "b", "a"]
    stems = [["P", "Q"], ["R", "P", "Q"]]
    log_px = cogseg.marginal_log_likelihood(
        chars, stems, lost, phones, probs, alpha=0.5, min_len=1, max_len=3)
    assert log_px < 0.0
    q = cogseg.expected_quality(
        chars, stems, lost, phones, probs, alpha=0.5, min_len=1, max_len=3)
    cov = cogseg.expected_coverage(
        chars, stems, lost, phones, probs, alpha=0.5, min_len=1, max_len=3)
    assert 0.0 <= q <= len(chars)
    assert 0.0 <= cov <= len(chars)


def test_whitespace_ratio_limits():
    assert cogseg.apply_whitespace_ratio("ab cd", 1.0, 3) == "ab cd"
    assert cogseg.apply_whitespace_ratio("ab cd", 0.0, 3) == "abcd"


def test_pipeline_roundtrip(tmp_path):
    spec = {
        "known_alphabet_size": 6, "lost_alphabet_size": 6,
        "sub_rate": 0.02, "del_rate": 0.02, "ins_rate": 0.02,
        "vocab_size": 10, "stem_len_min": 3, "stem_len_max": 5,
        "num_inscriptions": 25, "tokens_per_inscription": 3,
        "filler_rate": 0.1, "whitespace_ratio": 0.6, "seed": 11,
    }
    bundle = tmp_path / "bundle"
    info = cogseg.generate_synthetic(json.dumps(spec), str(bundle))
    assert info["num_gold_spans"] > 0

    config = {
        "corpus": str(bundle / "corpus.txt"),
        "vocab": str(bundle / "vocab.tsv"),
        "features": str(bundle / "features.csv"),
        "gold": str(bundle / "gold.tsv"),
        "out_dir": str(tmp_path / "run"),
        "seed": 1, "restarts": 1, "steps": 60,
        "learning_rate": 0.05, "grad_clip": 5.0, "dropout": 0.0, "dim": 6,
        "schedules": [{"s_begin": 0.0, "s_end": 3.5, "steps": 40}],
        "objective": {
            "r_cov": 0.3, "lambda_cov": 10.0, "lambda_loss": 100.0,
            "temperature": 0.25, "length_min": 2, "length_max": 7,
        },
    }
    report = cogseg.train(json.dumps(config))
    assert report["best"] == 0
    snapshot = report["best_snapshot"]

    mapping = cogseg.mapping_from_snapshot(snapshot)
    probs = np.asarray(mapping["probs"])
    assert probs.shape == (6, 7)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    preds = tmp_path / "preds.tsv"
    n = cogseg.predict(snapshot, str(bundle / "corpus.txt"),
                       str(bundle / "vocab.tsv"), str(bundle / "features.csv"),
                       str(preds), k=10)
    assert n > 0
    p10 = cogseg.precision_at_k(str(preds), str(bundle / "gold.tsv"), 10)
    assert 0.0 <= p10 <= 1.0
    auc = cogseg.closeness_auc_from_files(str(preds), str(bundle / "corpus.txt"))
    assert 0.0 <= auc <= 1.0


def test_determinism(tmp_path):
    spec = {
        "known_alphabet_size": 5, "lost_alphabet_size": 5,
        "vocab_size": 8, "stem_len_min": 3, "stem_len_max": 4,
        "num_inscriptions": 10, "tokens_per_inscription": 2,
        "whitespace_ratio": 0.5, "seed": 3,
    }
    a = tmp_path / "a"
    b = tmp_path / "b"
    cogseg.generate_synthetic(json.dumps(spec), str(a))
    cogseg.generate_synthetic(json.dumps(spec), str(b))
    assert (a / "corpus.txt").read_bytes() == (b / "corpus.txt").read_bytes()
    assert (a / "gold.tsv").read_bytes() == (b / "gold.tsv").read_bytes()


def test_config_errors():
    with pytest.raises(cogseg.ConfigError):
        cogseg.train(json.dumps({"unknown_key": 1}))
