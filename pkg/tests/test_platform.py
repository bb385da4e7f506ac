import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import unit
from opinionsim.cognition.beliefs import ActionDraft
from opinionsim.platform.content import ContentPool, Post, PublishError, SocialGraphs, near_duplicate, publish
from opinionsim.platform.recommend import (ExposureHistory, RecommendationConfig, TrendingTracker, combine, rank,
                                           recommend, score_candidate, score_components)
from opinionsim.text import HashingEmbedder

EMB = HashingEmbedder(16, 0)


def post(pid, author="u1", t=0.0, emb=None, likes=0, reposts=0, comments=0, tags=()):
    return Post(pid, author, t, "short_post", pid, unit(emb if emb is not None else [1] + [0] * 15),
                list(tags), root_id=pid, likes=likes, reposts=reposts, comments=comments)


def world():
    return ContentPool(), SocialGraphs()


# ------------------------------------------------------------ publish and provenance

def test_original_post_is_own_root():
    pool, g = world()
    rec = publish(ActionDraft("short_post", text="hello"), "A", 0.0, pool, g, EMB.embed)
    p = pool.get(rec.post_id)
    assert p.root_id == p.id and g.repost.number_of_edges() == 0 and g.comment.number_of_edges() == 0


def test_repost_comment_updates_parent():
    pool, g = world()
    root = publish(ActionDraft("short_post", text="original"), "A", 0.0, pool, g, EMB.embed)
    rec = publish(ActionDraft("repost_comment", root.post_id, text="look"), "B", 1.0, pool, g, EMB.embed)
    assert list(g.repost.edges()) == [("B", "A")]
    assert pool.get(root.post_id).reposts == 1
    assert pool.get(rec.post_id).root_id == root.post_id


def test_chain_root():
    pool, g = world()
    a = publish(ActionDraft("short_post", text="a"), "A", 0.0, pool, g, EMB.embed)
    b = publish(ActionDraft("repost", a.post_id), "B", 1.0, pool, g, EMB.embed)
    c = publish(ActionDraft("repost", b.post_id), "C", 2.0, pool, g, EMB.embed)
    assert pool.get(c.post_id).root_id == a.post_id
    assert pool.chain(c.post_id) == [c.post_id, b.post_id, a.post_id]


def test_like_and_comment_counters():
    pool, g = world()
    a = publish(ActionDraft("short_post", text="a"), "A", 0.0, pool, g, EMB.embed)
    publish(ActionDraft("like", a.post_id), "B", 1.0, pool, g, EMB.embed)
    publish(ActionDraft("short_comment", a.post_id, text="nice"), "C", 1.0, pool, g, EMB.embed)
    p = pool.get(a.post_id)
    assert (p.likes, p.reposts, p.comments) == (1, 0, 1)
    assert p.engagement == 1 + 2 * 1


def test_dangling_parent_rejected():
    pool, g = world()
    with pytest.raises(PublishError):
        publish(ActionDraft("repost", "missing"), "A", 0.0, pool, g, EMB.embed)


def test_duplicates_flagged_not_trended():
    pool, g = world()
    trend = TrendingTracker()
    publish(ActionDraft("short_post", text="same words", hashtags=["#x#"]), "A", 0.0, pool, g, EMB.embed,
            trending=trend)
    rec = publish(ActionDraft("short_post", text="same words", hashtags=["#x#"]), "B", 1.0, pool, g, EMB.embed,
                  trending=trend)
    assert rec.duplicate_of is not None and rec.post_id in pool
    assert trend.counts()["#x#"] == 1


def test_near_duplicate_examples():
    pool = ContentPool()
    e = unit([1, 0, 0])
    pool.add(post("p1", emb=np.concatenate([e, np.zeros(13)])))
    same = np.concatenate([e, np.zeros(13)])
    ortho = np.concatenate([[0, 1, 0], np.zeros(13)])
    c = 0.951
    close = np.concatenate([[c, math.sqrt(1 - c * c), 0], np.zeros(13)])
    assert near_duplicate(same, pool, 0.95) == "p1"
    assert near_duplicate(ortho, pool, 0.95) is None
    assert float(close @ same) == pytest.approx(0.951)
    assert near_duplicate(close, pool, 0.95) == "p1"
    assert near_duplicate(close, pool, 0.96) is None


def test_random_trace_invariants():
    rng = np.random.default_rng(2)
    pool, g = world()
    kinds = ["short_post", "long_post", "repost", "repost_comment", "short_comment", "long_comment", "like"]
    for i in range(400):
        kind = kinds[int(rng.integers(0, 7))] if len(pool) else "short_post"
        target = None
        if kind not in ("short_post", "long_post"):
            target = list(pool.posts)[int(rng.integers(0, len(pool)))]
        publish(ActionDraft(kind, target, text=f"text {i}"), f"u{int(rng.integers(0, 30))}", float(i), pool, g,
                EMB.embed)
    assert sum(p.reposts for p in pool.posts.values()) == g.repost.number_of_edges()
    assert sum(p.comments for p in pool.posts.values()) == g.comment.number_of_edges()
    for pid, p in pool.posts.items():
        chain = pool.chain(pid)
        top = pool.get(chain[-1])
        assert top.root_id == top.id and p.root_id == top.id


def test_follow_graph_frozen():
    sg = SocialGraphs(nx.DiGraph([("a", "b")]))
    with pytest.raises(nx.NetworkXError):
        sg.follow.add_edge("b", "a")


# ------------------------------------------------------------ scoring

def test_score_examples():
    cfg = RecommendationConfig()
    assert combine(1, 1, 1, cfg) == pytest.approx(1.0)
    assert combine(1, 0, 0, cfg) == pytest.approx(0.3)
    assert combine(0.5, 0.2, 0.8, cfg) == pytest.approx(0.53)


def test_score_candidate_components():
    cfg = RecommendationConfig()
    p = post("p", t=0.0, likes=2, reposts=1)
    u = p.embedding
    h, v, f = score_components(u, p, 0.0, 8.0, cfg)
    assert (h, v, f) == (pytest.approx(1.0), pytest.approx(0.5), pytest.approx(1.0))
    assert score_candidate(u, p, 0.0, cfg, 8.0) == pytest.approx(0.3 + 0.15 + 0.4)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.integers(0, 2))
def test_score_monotone(a, b, c, d, which):
    cfg = RecommendationConfig()
    lo, hi = sorted((a, b))
    args_lo, args_hi = [c, d, c], [c, d, c]
    args_lo[which], args_hi[which] = lo, hi
    assert combine(*args_lo, cfg) <= combine(*args_hi, cfg) + 1e-15


def test_weights_validated():
    with pytest.raises(ValueError):
        RecommendationConfig(w_h=0.5)
    with pytest.raises(ValueError):
        RecommendationConfig(r_explore=1.0)
    with pytest.raises(ValueError):
        RecommendationConfig(K=0)


@pytest.mark.parametrize("r,k,want", [(0.2, 10, 2), (0.2, 7, 2), (0.0, 10, 0), (0.5, 3, 2), (0.3, 10, 3)])
def test_exploration_slot_count(r, k, want):
    cfg = RecommendationConfig(r_explore=r, K=k)
    assert cfg.explore_slots == want == math.ceil(round(r * k, 9))


# ------------------------------------------------------------ recommendation

def random_pool(rng, n, now=500.0, dim=16):
    pool = ContentPool()
    rows = []
    for i in range(n):
        emb = unit(rng.normal(size=dim))
        t = float(rng.integers(0, int(now)))
        likes, reposts, comments = (int(x) for x in rng.integers(0, 6, 3))
        p = Post(f"p{i:04d}", f"u{int(rng.integers(1, 20))}", t, "short_post", "", emb, root_id=f"p{i:04d}",
                 likes=likes, reposts=reposts, comments=comments)
        pool.add(p)
        rows.append({"id": p.id, "embedding": emb.tolist(), "t_pub": t, "likes": likes, "reposts": reposts,
                     "comments": comments})
    return pool, rows


def test_rank_matches_brute_force_on_fixtures():
    rng = np.random.default_rng(8)
    for trial in range(1000):
        n = int(rng.integers(1, 60))
        pool, rows = random_pool(rng, n)
        user = unit(rng.normal(size=16))
        got = [(s, p.id) for s, p in rank(user, list(pool.posts.values()), 500.0, pool.max_engagement,
                                          RecommendationConfig())]
        want = oracles.feed_scores(user, rows, 500.0)
        assert [pid for _, pid in got] == [pid for _, pid in want], trial
        assert [s for s, _ in got] == pytest.approx([s for s, _ in want], abs=1e-12)


def test_feed_ranked_slots_equal_oracle_and_two_explore():
    rng = np.random.default_rng(3)
    pool, rows = random_pool(rng, 50)
    user = unit(rng.normal(size=16))
    cfg = RecommendationConfig()
    feed = recommend("u0", user, 500.0, pool, SocialGraphs(), ExposureHistory(100), cfg, np.random.default_rng(1))
    ranked = [f.post.id for f in feed if f.channel == "ranked"]
    assert len(feed) == 10 and len(ranked) == 8
    assert sum(f.channel == "explore" for f in feed) == 2
    want = [pid for _, pid in oracles.feed_scores(user, [r for r in rows], 500.0)][:8]
    assert ranked == want


def test_history_excludes_everything():
    rng = np.random.default_rng(3)
    pool, _ = random_pool(rng, 5)
    h = ExposureHistory(100)
    h.extend(list(pool.posts))
    assert recommend("u0", unit(rng.normal(size=16)), 500.0, pool, SocialGraphs(), h, RecommendationConfig(),
                     np.random.default_rng(0)) == []


def test_empty_pool():
    assert recommend("u0", unit([1] + [0] * 15), 0.0, ContentPool(), SocialGraphs(), ExposureHistory(10),
                     RecommendationConfig(), np.random.default_rng(0)) == []


def test_no_repeats_within_window_over_trace():
    rng = np.random.default_rng(4)
    pool, _ = random_pool(rng, 200)
    cfg = RecommendationConfig(history_window=60)
    h = ExposureHistory(60)
    shown = []
    user = unit(rng.normal(size=16))
    for step in range(40):
        feed = recommend("u0", user, 500.0, pool, SocialGraphs(), h, cfg, np.random.default_rng(step))
        shown += [f.post.id for f in feed]
    for i, pid in enumerate(shown):
        window = shown[max(0, i - 60):i]
        assert pid not in window


def test_feed_deterministic():
    rng = np.random.default_rng(6)
    pool, _ = random_pool(rng, 40)
    user = unit(rng.normal(size=16))
    a = recommend("u0", user, 500.0, pool, SocialGraphs(), ExposureHistory(10), RecommendationConfig(),
                  np.random.default_rng(5))
    b = recommend("u0", user, 500.0, pool, SocialGraphs(), ExposureHistory(10), RecommendationConfig(),
                  np.random.default_rng(5))
    assert [f.post.id for f in a] == [f.post.id for f in b]


def test_relationship_channel_and_own_posts():
    pool = ContentPool()
    for i in range(3):
        pool.add(post(f"f{i}", author="friend", t=10.0))
    pool.add(post("mine", author="me", t=10.0))
    g = SocialGraphs(nx.DiGraph([("me", "friend")]))
    cfg = RecommendationConfig(public_pool_size=0)
    feed = recommend("me", unit([1] + [0] * 15), 20.0, pool, g, ExposureHistory(10), cfg, np.random.default_rng(0))
    assert sorted(f.post.id for f in feed) == ["f0", "f1", "f2"]


def test_trending_injection_prefers_hashtag():
    pool = ContentPool()
    for i in range(30):
        pool.add(post(f"p{i:02d}", t=float(i), likes=30 - i, tags=["#hot#"] if i == 29 else []))
    cfg = RecommendationConfig(K=5, r_explore=0.2)
    feed = recommend("x", unit([1] + [0] * 15), 30.0, pool, SocialGraphs(), ExposureHistory(10), cfg,
                     np.random.default_rng(0), trending=["#hot#"])
    assert [f.post.id for f in feed if f.channel == "trending"] == ["p29"]


def test_comments_attached_up_to_nc():
    pool, g = world()
    root = publish(ActionDraft("short_post", text="root"), "A", 0.0, pool, g, EMB.embed)
    for i in range(8):
        publish(ActionDraft("short_comment", root.post_id, text=f"c{i}"), f"B{i}", 1.0, pool, g, EMB.embed)
    feed = recommend("Z", unit(np.ones(16)), 2.0, pool, g, ExposureHistory(10), RecommendationConfig(),
                     np.random.default_rng(0))
    (item,) = [f for f in feed if f.post.id == root.post_id]
    assert len(item.comments) == 5


def test_policy_halving_w_p_changes_score():
    p = post("p", likes=4)
    u = p.embedding
    base = RecommendationConfig()
    halved = RecommendationConfig(w_h=0.3, w_p=0.15, w_r=0.55)
    h, v, f = score_components(u, p, 100.0, 4.0, base)
    assert score_candidate(u, p, 100.0, halved, 4.0) == pytest.approx(0.3 * h + 0.15 * v + 0.55 * f)


def test_exposure_history_window():
    h = ExposureHistory(3)
    h.extend(["a", "b", "c", "d"])
    assert "a" not in h and h.to_list() == ["b", "c", "d"]
    h.extend(["b"])
    assert "b" in h and h.to_list() == ["c", "d", "b"]


def test_trending_tracker_rolls():
    t = TrendingTracker(window=2)
    t.record(["#a#", "#a#", "#b#"])
    t.roll()
    t.record(["#b#"])
    assert t.counts()["#a#"] == 2 and t.top(1) == ["#a#"]
    t.roll()
    assert t.counts()["#a#"] == 0 and t.top(1) == ["#b#"]
