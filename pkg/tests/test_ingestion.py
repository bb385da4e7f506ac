import json
import os
import random

import pytest

from conftest import FIXTURES, read_bytes
from opinionsim.cognition.beliefs import AgentKind
from opinionsim.cognition.emotion import EMOTIONS
from opinionsim.ingestion.initialize import (FLAG_DEFAULT_IDENTITY, FLAG_DEFAULT_PSYCHOLOGY, FLAG_EMPTY_HISTORY,
                                             InitConfig, assign_kind, derive_follow_edges, init_agent,
                                             initial_emotion, initialize_agents)
from opinionsim.ingestion.preprocess import Dataset, FilterConfig, preprocess
from opinionsim.ingestion.schema import (HistoricalPost, ScenarioSpec, UserRecord, parse_records, read_records,
                                         write_records)
from opinionsim.ingestion.synthetic import SyntheticConfig, generate, scenario_events, synthetic_roster
from opinionsim.llm.mock import PersonaScript, ScriptedSequence, mock_pool
from opinionsim.cognition.prompts import default_templates
from opinionsim.simulator.engine import Roster

POSTS = os.path.join(FIXTURES, "raw_posts.jsonl")
USERS = os.path.join(FIXTURES, "raw_users.jsonl")
FILTERS = FilterConfig(keywords=["factory fire"], blacklist=["cheap followers", "free coupons"],
                       activity_threshold=1)


def load():
    users, bad_u = read_records(USERS, UserRecord)
    posts, bad_p = read_records(POSTS, HistoricalPost)
    return users, posts, bad_u + bad_p


def test_ten_line_fixture_survivors():
    users, posts, bad = load()
    assert bad == 1 and len(posts) == 10
    ds, s = preprocess(users, posts, FILTERS, bad)
    assert [p.post_id for p in ds.posts] == ["p1", "p2", "p6", "p7", "p8", "p9"]
    assert (s.spam, s.duplicate_posts, s.too_short, s.unparseable) == (2, 1, 1, 1)
    assert s.posts_out == 6


def test_keyword_and_activity_filters():
    users, posts, _ = load()
    ds, s = preprocess(users, posts, FilterConfig(keywords=["smoke"], activity_threshold=1))
    assert {p.post_id for p in ds.posts} == {"p6", "p7", "p8"}
    ds, s = preprocess(users, posts, FilterConfig(blacklist=FILTERS.blacklist, activity_threshold=2))
    assert {u.user_id for u in ds.users} == {"u1", "u2"}
    assert s.low_activity_users == 2


def test_dangling_parent_cleared():
    users, posts, _ = load()
    ds, s = preprocess(users, [p for p in posts if p.post_id != "p2"], FILTERS)
    p6 = next(p for p in ds.posts if p.post_id == "p6")
    assert p6.parent_id is None and s.dangling_parents == 1


def test_window_filter():
    users, posts, _ = load()
    ds, s = preprocess(users, posts, FilterConfig(window_start="2024-01-01T08:10:00",
                                                  window_end="2024-01-01T09:00:00", activity_threshold=0))
    assert [p.post_id for p in ds.posts] == ["p6", "p7", "p8"] and s.too_short == 1


def test_preprocess_idempotent_and_order_free():
    users, posts, _ = load()
    once, _ = preprocess(users, posts, FILTERS)
    twice, s2 = preprocess(once.users, once.posts, FILTERS)
    assert once == twice and s2.posts_in == s2.posts_out
    rng = random.Random(0)
    shuffled = posts[:]
    rng.shuffle(shuffled)
    assert preprocess(list(reversed(users)), shuffled, FILTERS)[0] == once


def test_records_roundtrip(tmp_path):
    users, posts, _ = load()
    path = str(tmp_path / "u.jsonl")
    write_records(path, users)
    again, bad = read_records(path, UserRecord)
    assert again == users and bad == 0
    recs, bad = parse_records(['{"post_id": "x", "user_id": "u", "timestamp": "nope", "text": ""}',
                               '{"post_id": "y", "user_id": "u", "timestamp": "2024-01-01T00:00:00", '
                               '"text": "", "kind": "teleport"}', ""], HistoricalPost)
    assert recs == [] and bad == 2


def test_assign_kind():
    assert assign_kind(UserRecord("a", verification_type="media")) is AgentKind.MEDIA_ACCOUNT
    assert assign_kind(UserRecord("a", verification_type="government")) is AgentKind.GOVERNMENT
    assert assign_kind(UserRecord("a", follower_count=200_000)) is AgentKind.OPINION_LEADER
    assert assign_kind(UserRecord("a", follower_count=10)) is AgentKind.ORDINARY_USER
    hinted = UserRecord("a", follower_count=10, agent_kind="media_account")
    assert assign_kind(hinted) is AgentKind.MEDIA_ACCOUNT
    with pytest.raises(ValueError):
        UserRecord("a", agent_kind="alien")


def test_empty_history_baseline():
    agent = init_agent(UserRecord("u9", region="Hubei"), [], mock_pool(PersonaScript()), InitConfig(),
                       default_templates())
    assert all(v == pytest.approx(0.1) for v in agent.beliefs.emotion.to_dict().values())
    assert FLAG_EMPTY_HISTORY in agent.flags and agent.beliefs.event_opinions == []
    assert initial_emotion([]).to_dict() == {k: 0.1 for k in EMOTIONS}


def test_unusable_replies_fall_back_to_defaults():
    gw = mock_pool(ScriptedSequence({"belief_update": ["no json", "still no json"]}))
    agent = init_agent(UserRecord("u9", display_name="Wu", region="Hubei"), [], gw, InitConfig(), default_templates())
    assert FLAG_DEFAULT_IDENTITY in agent.flags and FLAG_DEFAULT_PSYCHOLOGY in agent.flags
    assert agent.beliefs.identity.startswith("I am Wu")


def test_negative_history_raises_negative_emotion():
    e = initial_emotion(["Shameless lies and an outrageous disgrace"]).to_dict()
    assert e["angry"] > 0.1 and all(0 <= v <= 1 for v in e.values())


def test_roster_order_independent(tmp_path):
    users, posts, _ = load()
    ds, _ = preprocess(users, posts, FILTERS)
    cfg = InitConfig(event_background="A factory fire.", t_start="2024-01-01T08:30:00")
    a = initialize_agents(ds, mock_pool(PersonaScript()), cfg)
    rev = Dataset(list(reversed(ds.users)), list(reversed(ds.posts)))
    b = initialize_agents(rev, mock_pool(PersonaScript()), InitConfig(**{**cfg.__dict__, "threads": 3}))
    a.save(str(tmp_path / "a.json"))
    b.save(str(tmp_path / "b.json"))
    assert read_bytes(str(tmp_path / "a.json")) == read_bytes(str(tmp_path / "b.json"))
    kinds = {x.agent_id: x.kind for x in a.agents}
    assert kinds["u2"] is AgentKind.MEDIA_ACCOUNT
    assert ("u2", "u1") in a.follow_edges and ("u3", "u2") in a.follow_edges
    assert {s["id"] for s in a.seed_posts} == {"p1", "p2", "p6", "p8"}


def test_explicit_follows_override():
    assert derive_follow_edges([], [("a", "b"), ("a", "b"), ("c", "c")]) == [("a", "b")]


def test_synthetic_roster_valid(tmp_path):
    cfg = SyntheticConfig(n_users=20, seed=2)
    roster = synthetic_roster(cfg, mock_pool(PersonaScript()), "A factory fire.")
    assert len(roster.agents) == 20
    for a in roster.agents:
        assert a.beliefs.identity.strip()
        assert all(0.0 <= v <= 1.0 for v in a.beliefs.emotion.to_dict().values())
        assert isinstance(a.kind, AgentKind)
    ids = {a.agent_id for a in roster.agents}
    assert all(u in ids and v in ids for u, v in roster.follow_edges)
    path = str(tmp_path / "r.json")
    roster.save(path)
    again = tmp_path / "r2.json"
    Roster.load(path).save(str(again))
    assert read_bytes(path) == read_bytes(str(again))


def test_generate_deterministic():
    cfg = SyntheticConfig(n_users=15, steps=30, seed=4)
    assert generate(cfg) == generate(cfg)
    users, hist, log = generate(cfg)
    assert all(p.time.isoformat() < cfg.t_start for p in hist)
    assert all(p.time.isoformat() >= cfg.t_start for p in log)
    assert [e["step"] for e in scenario_events(cfg)] == list(cfg.event_steps)


def test_scenario_spec(tmp_path):
    ok = ScenarioSpec("bg", "2024-01-01T00:00:00", steps=276, dt=10, duration_minutes=2760)
    assert ok.config_overrides()["max_steps"] == 276
    with pytest.raises(ValueError, match="duration"):
        ScenarioSpec("bg", "2024-01-01T00:00:00", steps=10, dt=10, duration_minutes=2760)
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"event_background": "bg", "t_start": "2024-01-01T00:00:00", "steps": 3,
                             "users": "users.jsonl", "overrides": {"seed": 5}}))
    spec = ScenarioSpec.load(str(p))
    assert spec.users == str(tmp_path / "users.jsonl") and spec.config_overrides()["seed"] == 5
    p.write_text(json.dumps({"event_background": "bg", "t_start": "2024-01-01T00:00:00", "steps": 3, "x": 1}))
    with pytest.raises(ValueError, match="unknown"):
        ScenarioSpec.load(str(p))
