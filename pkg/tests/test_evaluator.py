import json
import math
import os
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import FIXTURES
from opinionsim.cognition.beliefs import ACTION_TYPES
from opinionsim.evaluation.emergence import (arousal_metrics, emotion_outcomes, ols_slope, pi_series,
                                             polarization_from_distribution, polarization_index)
from opinionsim.evaluation.logs import EMOTION_CATEGORIES, Act, SchemaError, load_actions
from opinionsim.evaluation.metrics import (action_distribution, hotness_corr_rmse, hotness_series,
                                           irrationality_similarity, jsd, sentiment_delta, total_variation,
                                           ttr_delta, type_token_ratio)
from opinionsim.evaluation.powerlaw import fit_power_law, mle_alpha, sample_discrete_power_law
from opinionsim.evaluation.report import ReportConfig, build_report, layer_average, write_report
from opinionsim.evaluation.topology import (cascade_similarity, cascade_sizes, exponent_similarity,
                                            interaction_graph, topology_similarity)
from opinionsim.text import load_lexicon, tokenize

SIM = os.path.join(FIXTURES, "golden_sim.jsonl")
REAL = os.path.join(FIXTURES, "golden_real.jsonl")

dists = st.lists(st.floats(0, 10), min_size=2, max_size=7).filter(lambda v: sum(v) > 0)


def norm(v):
    s = sum(v)
    return [x / s for x in v]


# ------------------------------------------------------------ JSD

def test_jsd_examples():
    p = [0.5, 0.5, 0, 0, 0, 0, 0]
    assert jsd(p, p) == 0.0
    assert jsd([1, 0], [0, 1]) == pytest.approx(math.log(2), abs=1e-15)
    q = [0.25, 0.75, 0, 0, 0, 0, 0]
    assert abs(jsd(p, q) - oracles.jsd(p, q)) < 1e-12


def test_jsd_support_mismatch():
    with pytest.raises(ValueError, match="support"):
        jsd([1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        jsd([0.7, 0.7], [0.5, 0.5])


@settings(max_examples=200, deadline=None)
@given(dists, st.data())
def test_jsd_symmetric_bounded(a, data):
    b = data.draw(st.lists(st.floats(0, 10), min_size=len(a), max_size=len(a)).filter(lambda v: sum(v) > 0))
    p, q = norm(a), norm(b)
    d = jsd(p, q)
    assert d == pytest.approx(jsd(q, p), abs=1e-15)
    assert 0.0 <= d <= math.log(2)
    assert d == pytest.approx(oracles.jsd(p, q), abs=1e-12)


# ------------------------------------------------------------ hotness

def test_hotness_examples():
    a = [1.0, 4.0, 2.0, 0.0, 3.0]
    assert hotness_corr_rmse(a, a) == (pytest.approx(1.0), 0.0)
    rho, rmse = hotness_corr_rmse(a, [2 * x for x in a])
    assert rho == pytest.approx(1.0) and rmse == pytest.approx(0.0)
    rho, _ = hotness_corr_rmse([1, 2, 3], [3, 2, 1])
    assert rho == pytest.approx(-1.0)


def test_hotness_degenerate():
    rho, rmse = hotness_corr_rmse([1, 1, 1], [1, 2, 3])
    assert rho is None and rmse >= 0
    with pytest.raises(ValueError):
        hotness_corr_rmse([1, 2], [1, 2])
    with pytest.raises(ValueError):
        hotness_corr_rmse([1, 2, 3], [1, 2, 3, 4])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), min_size=3, max_size=30))
def test_hotness_matches_oracle(pairs):
    a, b = [x for x, _ in pairs], [y for _, y in pairs]
    rho, rmse = hotness_corr_rmse(a, b)
    na, nb = oracles.max_norm(a), oracles.max_norm(b)
    assert rmse == pytest.approx(oracles.rmse(na, nb), abs=1e-12)
    want = oracles.pearson(na, nb)
    if want is None:
        assert rho is None
    else:
        assert rho == pytest.approx(want, abs=1e-9)


def test_hotness_binning():
    h = hotness_series([0, 59.9, 60, 150], 60.0)
    assert h.counts.tolist() == [2, 1, 1]


# ------------------------------------------------------------ content

LEX = {"irrational": ["outrage", "shame"], "rational": ["evidence", "data"]}


def test_rationality_tv_example():
    assert total_variation([0.5, 0.3, 0.2], [0.4, 0.4, 0.2]) == pytest.approx(0.1)
    sim = ["outrage"] * 5 + ["evidence"] * 3 + ["hello"] * 2
    real = ["shame"] * 4 + ["data"] * 4 + ["hi"] * 2
    assert irrationality_similarity(sim, real, LEX) == pytest.approx(0.9)
    assert irrationality_similarity(sim, sim, LEX) == 1.0
    assert irrationality_similarity(["outrage"], ["evidence"], LEX) == 0.0
    assert irrationality_similarity([], ["x"], LEX) is None


def test_ttr_and_sentiment():
    assert type_token_ratio(["a b a b"]) == 0.5
    assert ttr_delta(["a b"], ["a b"]) == 0.0
    assert ttr_delta([], ["x"]) is None

    class Fixed:
        def __init__(self, table):
            self.table = table

        def score(self, t):
            return self.table[t]

    an = Fixed({"up": 1.0, "down": 0.0, "mid": 0.5})
    assert sentiment_delta(["mid"], ["mid"], an) == 0.0
    assert sentiment_delta(["up", "up"], ["down"], an) == 2.0
    assert sentiment_delta([], ["up"], an) is None


# ------------------------------------------------------------ emergence

def test_pi_examples():
    assert polarization_index(list(EMOTION_CATEGORIES)) == pytest.approx(0.0, abs=1e-12)
    assert polarization_index(["anger"] * 7) == 1.0
    assert polarization_index(["anger", "fear"]) == pytest.approx(1 - math.log(2) / math.log(6))
    assert polarization_index(["anger", "fear"]) == pytest.approx(0.6131, abs=1e-4)
    assert polarization_index([]) is None


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(EMOTION_CATEGORIES), min_size=1, max_size=60), st.permutations(EMOTION_CATEGORIES))
def test_pi_relabel_invariant(labels, perm):
    mapping = dict(zip(EMOTION_CATEGORIES, perm))
    pi = polarization_index(labels)
    assert 0.0 <= pi <= 1.0
    assert pi == pytest.approx(polarization_index([mapping[x] for x in labels]), abs=1e-12)
    assert pi == pytest.approx(oracles.polarization(labels), abs=1e-12)
    counts = Counter(labels)
    p = [counts[c] / len(labels) for c in EMOTION_CATEGORIES]
    assert polarization_from_distribution(p) == pytest.approx(pi, abs=1e-12)


def test_pi_series_absent_windows_and_band():
    acts = [Act(t, "u", "short_post", f"p{t}", None, f"p{t}", None, "x", e, 0.5)
            for t, e in [(1, "anger"), (2, "fear"), (3, "anger"), (130, "happiness")]]
    pts = pi_series(acts, 60.0, n_boot=50, n_windows=4)
    assert [p.n for p in pts] == [3, 0, 1, 0]
    assert pts[1].pi is None and pts[2].pi == 1.0
    assert pts[0].lo <= pts[0].pi <= pts[0].hi


def test_trend_slope():
    assert ols_slope([0.2, 0.4, 0.6]) == pytest.approx(0.2)
    assert ols_slope([0.3] * 5) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = rng.random(int(rng.integers(3, 20))).tolist()
        assert ols_slope(y) == pytest.approx(oracles.ls_slope(y), abs=1e-12)


def _act(t, agent, kind, pid, parent, emo, inten=0.5):
    return Act(float(t), agent, kind, pid, parent, pid if parent is None else parent, None, "x", emo, inten)


def test_arousal_metrics():
    acts = [_act(0, "a", "short_post", "p1", None, "happiness", 0.3),
            _act(1, "b", "short_comment", "c1", "p1", "anger", 0.9),
            _act(2, "a", "short_post", "p2", None, "anger", 0.7),
            _act(3, "b", "short_comment", "c2", "p2", "disgust", 0.5)]
    m = arousal_metrics(acts, 60.0)
    assert m["trend_beta"] is None
    assert m["high_arousal_ratio"] == 0.5
    assert m["intensity_ratio"] == pytest.approx(0.8 / 0.4)
    assert m["chain_consistency"] == 0.5
    assert m["escalation_ratio"] == 1.0
    same = [_act(0, "a", "short_post", "p1", None, "anger"), _act(1, "b", "long_comment", "c1", "p1", "fear")]
    assert arousal_metrics(same, 60.0)["chain_consistency"] == 1.0


def test_arousal_trend_and_constant():
    def window(w, hi, n=5):
        return [_act(w * 60 + i, "a", "short_post", f"{w}-{i}", None, "anger" if i < hi else "sadness")
                for i in range(n)]

    acts = window(0, 1) + window(1, 2) + window(2, 3)
    assert arousal_metrics(acts, 60.0)["trend_beta"] == pytest.approx(0.2)
    flat = window(0, 2) + window(1, 2) + window(2, 2)
    assert arousal_metrics(flat, 60.0)["trend_beta"] == pytest.approx(0.0)


def test_emotion_outcomes():
    rows = [{"step": 0, "strategy": {"emotion_type": "angry", "emotion_intensity": "high"}},
            {"step": 1, "strategy": {"emotion_type": "happy", "emotion_intensity": "low"}},
            {"step": 2, "strategy": None}]
    out = emotion_outcomes(rows)
    assert out["anger_ratio"] == 0.5 and out["negative_emotion_ratio"] == 0.5 and out["n"] == 2
    assert out["emotion_intensity"] == pytest.approx(0.5)
    assert emotion_outcomes(rows, since_step=1)["anger_ratio"] == 0.0


# ------------------------------------------------------------ topology

def test_topology_similarities():
    assert exponent_similarity(3.0, 4.0) == pytest.approx(0.75)
    assert exponent_similarity(None, 4.0) is None
    sizes = [1, 1, 2, 5, 9, 30]
    assert cascade_similarity(sizes, list(reversed(sizes))) == 1.0
    assert cascade_similarity([], sizes) is None
    acts = [_act(0, "a", "short_post", "p", None, None), _act(1, "b", "repost", "r", "p", None)]
    acts = [Act(a.t, a.agent, a.kind, a.post_id, a.parent_id, "p", "a" if a.parent_id else None, "", None, None)
            for a in acts]
    g = interaction_graph(acts)
    assert list(g.edges()) == [("b", "a")]
    assert topology_similarity(g, g.copy()) == 1.0
    assert cascade_sizes(acts) == [2]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 500), min_size=1, max_size=40), st.lists(st.integers(1, 500), min_size=1, max_size=40))
def test_similarities_in_unit_interval(a, b):
    c = cascade_similarity(a, b)
    assert 0.0 <= c <= 1.0
    e = exponent_similarity(1 + a[0] / 100, 1 + b[0] / 100)
    assert 0.0 <= e <= 1.0


# ------------------------------------------------------------ power law

def test_power_law_recovery():
    x = sample_discrete_power_law(2.5, 1, 10_000, np.random.default_rng(11))
    fit = fit_power_law(x, x_min=1)
    assert abs(fit.alpha - 2.5) < 0.15
    ks = fit_power_law(x)
    assert ks.ok and abs(ks.alpha - 2.5) < 0.15 and ks.ccdf[0] == (1, 1.0)


def test_power_law_mle_matches_oracle():
    x = sample_discrete_power_law(2.2, 3, 400, np.random.default_rng(5))
    assert mle_alpha(x.astype(float), 3) == pytest.approx(oracles.power_law_mle(x.tolist(), 3), abs=1e-6)


def test_power_law_rejections():
    fit = fit_power_law([4] * 100)
    assert not fit.ok and "degenerate" in fit.diagnostic
    small = fit_power_law([1, 2, 3])
    assert not small.ok and "need 30" in small.diagnostic


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [1.5, 2.0, 2.5, 3.0, 3.5])
def test_power_law_consistency(alpha):
    rng = np.random.default_rng(int(alpha * 100))
    errs = [abs(fit_power_law(sample_discrete_power_law(alpha, 1, 10_000, rng), x_min=1).alpha - alpha)
            for _ in range(100)]
    assert np.mean(errs) < 0.1


# ------------------------------------------------------------ report

def _flat(report):
    d = report.to_dict()
    return {f"{layer}.{k}": v for layer in ("behavior", "content", "topology") for k, v in d[layer].items()}


def test_report_reflexive():
    rep = build_report(SIM, SIM, ReportConfig(n_boot=20))
    f = _flat(rep)
    assert f["behavior.btype_jsd"] == 0.0 and f["behavior.act_rmse"] == 0.0
    assert f["behavior.act_rho"] == pytest.approx(1.0)
    assert f["content.irrat_sim"] == 1.0 and f["content.ttr_delta"] == 0.0 and f["content.sent_delta"] == 0.0
    assert f["topology.net_sim"] == 1.0 and f["topology.casc_sim"] == 1.0
    for layer in ("behavior", "content", "topology"):
        assert f[f"{layer}.avg"] == pytest.approx(1.0)


def test_report_order_independent(tmp_path):
    lines = open(SIM).read().splitlines()
    random.Random(4).shuffle(lines)
    p = tmp_path / "shuffled.jsonl"
    p.write_text("\n".join(lines) + "\n")
    a = build_report(SIM, REAL, ReportConfig(n_boot=30)).to_dict()
    b = build_report(str(p), REAL, ReportConfig(n_boot=30)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_report_golden_against_oracles():
    sim = [json.loads(x) for x in open(SIM)]
    real = [json.loads(x) for x in open(REAL)]
    rep = build_report(SIM, REAL, ReportConfig(n_boot=10)).to_dict()
    want = oracles.golden_values(sim, real, tokenize, load_lexicon("irrationality_lexicon"), ACTION_TYPES)
    for layer, key in [("behavior", "btype_jsd"), ("behavior", "act_rho"), ("behavior", "act_rmse"),
                       ("content", "ttr_delta"), ("content", "irrat_sim")]:
        assert abs(rep[layer][key] - want[key]) < 1e-9, key
    assert abs(rep["emergence"]["pi_series"][0]["pi"] - want["pi_sim"]) < 1e-9
    assert abs(rep["emergence"]["pi_series_reference"][0]["pi"] - want["pi_real"]) < 1e-9

    # cascades: s1 <- s2, s4 ; s5 <- s7 ; s8   vs   r1 <- r2, r3 ; r6 <- r7
    hist_s, hist_r = [1 / 3, 2 / 3], [0.0, 1.0]
    assert abs(rep["topology"]["casc_sim"] - (1 - oracles.jsd(hist_s, hist_r) / math.log(2))) < 1e-9
    assert rep["topology"]["casc_pl"] is None

    b = rep["behavior"]
    assert b["avg"] == pytest.approx(np.mean([b["act_rho"], 1 - b["btype_jsd"], 1 - b["act_rmse"]]), abs=1e-12)
    assert rep["header"]["jsd_log_base"] == "e"


def test_report_writes_tables(tmp_path):
    paths = write_report(build_report(SIM, REAL, ReportConfig(n_boot=10)), str(tmp_path))
    assert {"report", "hotness", "action_distribution", "pi_series", "ccdf_cascade", "ccdf_degree"} <= set(paths)
    assert open(paths["hotness"]).readline().startswith("bin,")


def test_schema_mismatch_diagnostic(tmp_path):
    bad = tmp_path / "bad.jsonl"
    rec = json.loads(open(SIM).readline())
    del rec["agent_id"]
    bad.write_text(json.dumps(rec) + "\n")
    with pytest.raises(SchemaError, match="agent_id"):
        load_actions(str(bad))
    rec = json.loads(open(REAL).readline())
    rec["timestamp"] = 5
    bad.write_text(json.dumps(rec) + "\n")
    with pytest.raises(SchemaError, match="timestamp"):
        build_report(SIM, str(bad))
    bad.write_text('{"foo": 1}\n')
    with pytest.raises(SchemaError, match="unrecognized"):
        load_actions(str(bad))


def test_layer_average_rule():
    assert layer_average([0.8], [0.2, None]) == pytest.approx(0.8)
    assert layer_average([], []) is None
    assert action_distribution([]) is None
