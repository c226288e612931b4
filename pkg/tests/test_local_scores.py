"""Per-pattern scores, their averaging identity, and the threshold sweep."""

import numpy as np
import pytest

from locodecomp import (
    DataError,
    EvalScheme,
    LocoEvaluator,
    RawTable,
    SurrogateConfig,
    decompose_all,
    decompose_feature,
    local_loco,
    local_loco_values,
    local_score_matrices,
    local_score_vectors,
    local_scores,
    standardize,
    tertile_classes,
    u_threshold_analysis,
)
from locodecomp.local_scores import class_conditional_means
from tests_util import toy_dataset


def test_local_loco_mean_equals_global():
    ds = toy_dataset(seed=21, n=500)
    ev = LocoEvaluator(ds)
    for subset in [(), (1,), (1, 2)]:
        vec = local_loco_values(ds, 0, subset, evaluator=ev)
        assert vec.shape == (ds.n_patterns,)
        assert np.mean(vec) == pytest.approx(ev.loco(0, subset), abs=1e-12)


def test_local_loco_single_pattern():
    ds = toy_dataset(seed=22)
    ev = LocoEvaluator(ds)
    vec = local_loco_values(ds, 0, (1,), evaluator=ev)
    assert local_loco(ds, 0, (1,), 5, evaluator=ev) == vec[5]
    with pytest.raises(IndexError):
        local_loco(ds, 0, (1,), ds.n_patterns, evaluator=ev)


def test_some_patterns_misinformative(suppressor_case):
    ds, _, ev = suppressor_case
    vec = local_loco_values(ds, 1, (), evaluator=ev)
    # globally strong driver, yet single rows can go the other way
    assert np.mean(vec) > 0.4
    assert np.min(vec) < 0.0


def test_local_vectors_identity(corr6_case):
    ds, _, ev = corr6_case
    config = SurrogateConfig(seed=5)
    dec = decompose_feature(ds, 2, config, evaluator=ev)
    vecs = local_score_vectors(ds, dec, evaluator=ev)
    total = vecs["unique"] + vecs["redundant"] + vecs["synergy"]
    assert np.max(np.abs(total - vecs["loco"])) < 1e-10
    assert np.mean(vecs["unique"]) == pytest.approx(dec.unique, abs=1e-9)
    assert np.mean(vecs["redundant"]) == pytest.approx(dec.redundant, abs=1e-9)
    assert np.mean(vecs["synergy"]) == pytest.approx(dec.synergy, abs=1e-9)


def test_local_scores_single_pattern(corr6_case):
    ds, _, ev = corr6_case
    dec = decompose_feature(ds, 0, SurrogateConfig(seed=5), evaluator=ev)
    vecs = local_score_vectors(ds, dec, evaluator=ev)
    u, r, s = local_scores(ds, dec, 7, evaluator=ev)
    assert (u, r, s) == (vecs["unique"][7], vecs["redundant"][7], vecs["synergy"][7])


def test_matrices_cover_all_drivers(corr6_case):
    ds, _, ev = corr6_case
    decs = decompose_all(ds, SurrogateConfig(seed=5), evaluator=ev)
    mats = local_score_matrices(ds, decs, evaluator=ev)
    assert set(mats) == {"loco", "unique", "redundant", "synergy"}
    for mat in mats.values():
        assert mat.values.shape == (ds.n_patterns, ds.n_features)
    for dec in decs:
        col = mats["unique"].column(dec.driver)
        assert np.mean(col) == pytest.approx(dec.unique, abs=1e-9)


def test_single_feature_dataset_has_no_context():
    rng = np.random.default_rng(31)
    x = rng.standard_normal((300, 1))
    y = 0.6 * x[:, 0] + 0.8 * rng.standard_normal(300)
    ds, _ = standardize(RawTable(("x",), x, "y", y))
    dec = decompose_feature(ds, 0, SurrogateConfig(seed=0))
    vecs = local_score_vectors(ds, dec)
    assert np.all(vecs["redundant"] == 0.0)
    assert np.all(vecs["synergy"] == 0.0)
    assert np.array_equal(vecs["unique"], vecs["loco"])


def test_crossfit_consistency_only_approximate():
    ds = toy_dataset(seed=33, n=400)
    ev = LocoEvaluator(ds, EvalScheme.kfold(5, seed=2))
    vec = local_loco_values(ds, 0, (1,), evaluator=ev)
    # means still track the global value, just not to float precision
    assert np.mean(vec) == pytest.approx(ev.loco(0, (1,)), abs=1e-12)


def test_tertile_classes_balanced():
    values = np.arange(10)[::-1].astype(float)
    labels = tertile_classes(values)
    low = values[labels == "Low"]
    high = values[labels == "High"]
    assert low.max() < high.min()
    counts = [np.sum(labels == name) for name in ("Low", "Medium", "High")]
    assert max(counts) - min(counts) <= 1


def test_tertile_classes_stable_under_ties():
    values = np.zeros(9)
    labels = tertile_classes(values)
    assert np.sum(labels == "Low") == 3
    # identical values split by row order
    assert list(labels[:3]) == ["Low", "Low", "Low"]


def test_class_conditional_means():
    values = np.array([1.0, 2.0, 3.0, 4.0])
    labels = np.array(["a", "a", "b", "b"], dtype=object)
    means = class_conditional_means(values, labels)
    assert means == {"a": 1.5, "b": 3.5}
    means_r = class_conditional_means(values, labels, retained=[0, 3])
    assert means_r == {"a": 1.0, "b": 4.0}


def _sweep_case(seed=41, n=600):
    ds = toy_dataset(seed=seed, n=n)
    ev = LocoEvaluator(ds)
    dec = decompose_feature(ds, 0, SurrogateConfig(seed=3), evaluator=ev)
    vecs = local_score_vectors(ds, dec, evaluator=ev)
    return ds, vecs["unique"]


def test_threshold_sweep_shapes():
    ds, u = _sweep_case()
    analysis = u_threshold_analysis(ds, 0, u)
    assert [pt.discard_percent for pt in analysis.points] == list(range(0, 85, 5))
    n = ds.n_patterns
    assert analysis.points[0].retained_n == n
    retained = [pt.retained_n for pt in analysis.points]
    assert retained == sorted(retained, reverse=True)
    assert analysis.class_names == ("Low", "Medium", "High")
    for pt in analysis.points:
        assert sum(int(c.sum()) for c in pt.class_counts.values()) == pt.retained_n
        assert np.isfinite(pt.pearson_r)


def test_threshold_keeps_highest_u():
    ds, u = _sweep_case()
    analysis = u_threshold_analysis(ds, 0, u, discard_percents=[50])
    pt = analysis.points[0]
    kept = set(pt.retained.tolist())
    inside = u[pt.retained]
    outside = np.array([u[i] for i in range(ds.n_patterns) if i not in kept])
    assert inside.min() >= outside.max()
    assert pt.u_threshold == pytest.approx(inside.min())


def test_threshold_keep_fraction_equivalent():
    ds, u = _sweep_case()
    by_discard = u_threshold_analysis(ds, 0, u, discard_percents=[0, 50])
    by_keep = u_threshold_analysis(ds, 0, u, keep_fractions=[1.0, 0.5])
    for a, b in zip(by_discard.points, by_keep.points):
        assert a.retained_n == b.retained_n
        assert a.pearson_r == b.pearson_r
    with pytest.raises(ValueError, match="not both"):
        u_threshold_analysis(ds, 0, u, discard_percents=[0], keep_fractions=[1.0])


def test_threshold_empty_retained_set_rejected():
    ds, u = _sweep_case()
    with pytest.raises(DataError, match="at least 2"):
        u_threshold_analysis(ds, 0, u, discard_percents=[99.9])


def test_threshold_custom_classes():
    ds, u = _sweep_case()
    labels = np.array(
        ["odd" if i % 2 else "even" for i in range(ds.n_patterns)], dtype=object
    )
    analysis = u_threshold_analysis(ds, 0, u, class_labels=labels, discard_percents=[0])
    assert analysis.class_names == ("even", "odd")
    pt = analysis.points[0]
    assert int(pt.class_counts["even"].sum()) == ds.n_patterns // 2 + ds.n_patterns % 2


def test_threshold_bin_edges_shared():
    ds, u = _sweep_case()
    analysis = u_threshold_analysis(ds, 0, u, discard_percents=[0, 40, 80], bins=20)
    assert analysis.bin_edges.shape == (21,)
    first = analysis.points[0].class_counts
    last = analysis.points[-1].class_counts
    for name in analysis.class_names:
        assert first[name].shape == last[name].shape == (20,)
