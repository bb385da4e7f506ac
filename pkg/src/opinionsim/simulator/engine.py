"""Main simulation loop, logs and checkpoints."""
from __future__ import annotations

import dataclasses
import hashlib
import inspect
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..cognition.emotion import contagion_blend, decay_emotion, mean_emotion
from ..cognition.pipeline import Agent, CognitionContext, EventNotice, FeedEntry, Perception, run_pipeline
from ..cognition.prompts import TemplateSet, default_templates
from ..llm.gateway import EndpointPool, HTTPBackend
from ..llm.mock import MockBackend, PersonaScript, echo_script, mock_pool
from ..platform.content import ActionRecord, ContentPool, PublishError, SocialGraphs, publish, seed_posts
from ..platform.recommend import ExposureHistory, RecommendationConfig, TrendingTracker, recommend, user_embedding
from ..temporal import (
    ActivityWeights,
    EventQueue,
    HawkesState,
    circadian,
    expected_activations,
    inject_exogenous,
    intensity,
    record_endogenous,
    sample_activation_count,
    sample_agents,
)
from ..text import HashingEmbedder
from .config import SimConfig

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "opinionsim-checkpoint"
CHECKPOINT_VERSION = 1

STEP_LOG = "step_log.jsonl"
ACTION_LOG = "action_log.jsonl"
TRACE_LOG = "trace.jsonl"
EXCHANGE_LOG = "llm_exchanges.jsonl"
LOG_FILES = (STEP_LOG, ACTION_LOG, TRACE_LOG, EXCHANGE_LOG)

_STREAM_STEP = 1
_STREAM_AGENT = 2


class CheckpointError(ValueError):
    pass


@dataclass
class Roster:
    """Initialized agents plus the static context they live in."""

    agents: List[Agent]
    follow_edges: List[Tuple[str, str]] = field(default_factory=list)
    activity: Dict[str, int] = field(default_factory=dict)
    seed_posts: List[dict] = field(default_factory=list)
    event_background: str = ""

    def to_dict(self) -> dict:
        return {
            "agents": [a.to_dict() for a in self.agents],
            "follow_edges": [list(e) for e in self.follow_edges],
            "activity": dict(self.activity),
            "seed_posts": list(self.seed_posts),
            "event_background": self.event_background,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Roster":
        return cls([Agent.from_dict(a) for a in d["agents"]], [tuple(e) for e in d.get("follow_edges", [])],
                   dict(d.get("activity", {})), list(d.get("seed_posts", [])), d.get("event_background", ""))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "Roster":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class StepRecord:
    step: int
    t: float
    clock: str
    lam: float
    circadian: float
    expected: float
    n_t: int
    activated: List[str]
    actions: int
    degraded: int
    events: List[str]
    forced: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def stable_int(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def stream(seed: int, kind: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, kind, *keys]))


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


class _AgentGateway:
    """Routes one agent's calls to the shared pool and keeps its exchanges together."""

    def __init__(self, pool, sink: list):
        self.pool = pool
        self.sink = sink
        self._takes_sink = "sink" in inspect.signature(pool.complete).parameters

    def complete(self, usage, prompt, rng):
        if self._takes_sink:
            return self.pool.complete(usage, prompt, rng, sink=self.sink)
        return self.pool.complete(usage, prompt, rng)


def build_gateway(cfg: SimConfig, mock: bool, script=None):
    g = cfg.gateway
    if mock or not g.endpoints:
        if script is None:
            script = echo_script if g.mock_script == "echo" else PersonaScript()
        return mock_pool(script, seed=g.mock_seed, sampling=g.sampling(), max_retries=g.max_retries)
    return EndpointPool(g.endpoint_specs(), HTTPBackend(timeout=g.timeout_s), g.sampling(), g.max_retries)


class Simulation:
    """Owns the full mutable state of one trajectory."""

    def __init__(self, config: SimConfig, roster: Optional[Roster] = None, gateway=None,
                 out_dir: Optional[str] = None, templates: Optional[TemplateSet] = None, embedder=None):
        self.config = config
        self.gateway = gateway if gateway is not None else build_gateway(config, mock=True)
        self.templates = templates or default_templates()
        self.embedder = embedder or HashingEmbedder(config.embedding_dim, config.embedding_seed)
        self.out_dir = out_dir
        self.step_index = 0
        self.agents: Dict[str, Agent] = {}
        self.pool = ContentPool(config.dedup_threshold)
        self.graphs = SocialGraphs()
        self.trending = TrendingTracker(config.recommendation.trending_window)
        self.histories: Dict[str, ExposureHistory] = {}
        self.hawkes = HawkesState()
        self.queue = EventQueue(config.exogenous_events())
        self.triggered: List[dict] = []
        self.activity = ActivityWeights()
        self.forced: List[str] = []
        self.interventions: List[dict] = []  # pending, applied at their activation step
        self.policy_log: List[dict] = []
        self.event_background = config.event_background
        self.on_step: List[Callable[["Simulation", StepRecord], None]] = []
        if roster is not None:
            self._init_from_roster(roster)

    # ------------------------------------------------------------ setup

    def _init_from_roster(self, roster: Roster) -> None:
        for a in sorted(roster.agents, key=lambda a: a.agent_id):
            self.agents[a.agent_id] = Agent.from_dict(a.to_dict())
            self.histories[a.agent_id] = ExposureHistory(self.config.recommendation.history_window)
        g = nx.DiGraph()
        g.add_nodes_from(self.agents)
        g.add_edges_from((u, v) for u, v in roster.follow_edges if u in self.agents and v in self.agents)
        self.graphs = SocialGraphs(g)
        counts = {a: int(roster.activity.get(a, 1)) for a in self.agents}
        self.activity = ActivityWeights.from_counts(counts, growth=self.config.activity_growth,
                                                    cap_multiple=self.config.activity_cap_multiple)
        seed_posts(self.pool, self.graphs, sorted(roster.seed_posts, key=lambda p: (p["t_pub"], p.get("id", ""))),
                   self.embedder.embed)
        if roster.event_background and not self.event_background:
            self.event_background = roster.event_background

    @property
    def t(self) -> float:
        return self.step_index * self.config.dt

    def context(self) -> CognitionContext:
        return CognitionContext(self.gateway, self.embedder.embed, self.templates, self.config.emotion,
                                self.config.memory, self.event_background)

    # ------------------------------------------------------------ logging

    def _path(self, name: str) -> Optional[str]:
        return os.path.join(self.out_dir, name) if self.out_dir else None

    def _append(self, name: str, records: Sequence[dict]) -> None:
        path = self._path(name)
        if path is None or not records:
            return
        with open(path, "a", encoding="utf-8") as fh:
            for r in records:
                fh.write(_dumps(r) + "\n")

    # ------------------------------------------------------------ step phases

    def _perception(self, agent: Agent, now: float, rng: np.random.Generator,
                    trending_now: Optional[List[str]], hot: List[str]) -> Perception:
        events = []
        for ev in self.triggered:
            if ev["id"] in agent.seen_events or now - ev["t"] > self.config.news_window:
                continue
            agent.seen_events.append(ev["id"])
            events.append(EventNotice(ev["label"], ev["payload"]))
        fallback = self.embedder.embed(agent.beliefs.identity)
        feed = recommend(agent.agent_id, user_embedding(agent.agent_id, self.pool, fallback), now, self.pool,
                         self.graphs, self.histories[agent.agent_id], self.config.recommendation, rng,
                         trending_now)
        entries = [FeedEntry(f.post.id, f.post.author_id, f.post.kind, f.post.text, list(f.post.hashtags),
                             f.post.likes, f.post.reposts, f.post.comments,
                             [(c.author_id, c.text) for c in f.comments], f.post.embedding) for f in feed]
        return Perception(now, self.config.clock(now), events, entries, list(hot), list(agent.directives))

    def _run_agent(self, agent: Agent, perception: Perception, rng: np.random.Generator):
        sink: list = []
        ctx = dataclasses.replace(self.context(), gateway=_AgentGateway(self.gateway, sink))
        result = run_pipeline(agent, perception, ctx, rng, step=self.step_index)
        return result, sink

    def _apply_due_interventions(self) -> None:
        from ..intervention import InterventionSpec, apply_intervention

        due = [d for d in self.interventions if d["activation_step"] <= self.step_index]
        self.interventions = [d for d in self.interventions if d["activation_step"] > self.step_index]
        for d in due:
            apply_intervention(self, InterventionSpec.from_dict(d))

    def step(self) -> StepRecord:
        cfg = self.config
        k = self.step_index
        now = self.t
        self._apply_due_interventions()

        # (1) exogenous events
        fired = []
        for ev in self.queue.pop_due(now):
            inject_exogenous(self.hawkes, ev, cfg.hawkes)
            rec = {"id": f"e{len(self.triggered)}", "label": ev.label, "payload": ev.payload, "t": now,
                   "t_trigger": ev.t_trigger, "magnitude": ev.magnitude}
            self.triggered.append(rec)
            fired.append(ev.label)

        # (2) intensity
        lam = intensity(self.hawkes, now, cfg.hawkes)
        circ = circadian(now, cfg.hawkes)

        # (3) activation
        rng = stream(cfg.seed, _STREAM_STEP, k)
        population = list(self.agents)
        n_t = sample_activation_count(lam, cfg.dt, cfg.hawkes, rng, len(population)) if population else 0
        chosen = sample_agents(population, n_t, self.activity.vector(population), rng) if n_t else []
        forced = sorted(set(self.forced) - set(chosen))
        self.forced = []
        activated = sorted(set(chosen) | set(forced))

        # (4) perception and cognition; reads see the pre-step snapshot
        hot = self.trending.top(cfg.recommendation.trending_top_n)
        inject = hot if (cfg.recommendation.trending_period > 0 and k % cfg.recommendation.trending_period == 0) else None
        jobs = []
        for aid in activated:
            arng = stream(cfg.seed, _STREAM_AGENT, stable_int(aid), k)
            agent = self.agents[aid]
            jobs.append((agent, self._perception(agent, now, arng, inject, hot), arng))
        if cfg.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
                outcomes = list(ex.map(lambda j: self._run_agent(*j), jobs))
        else:
            outcomes = [self._run_agent(*j) for j in jobs]

        # (5) serialized commit: agent id order, then draft order
        records: List[ActionRecord] = []
        traces: List[dict] = []
        exchanges: List[dict] = []
        degraded = 0
        per_agent: Dict[str, int] = {}
        for (agent, _, _), (result, sink) in zip(jobs, outcomes):
            traces.extend(result.trace)
            exchanges.extend({"step": k, "agent": agent.agent_id, **json.loads(x.to_json())} for x in sink)
            degraded += result.degraded
            for draft in result.plan.actions:
                try:
                    rec = publish(draft, agent.agent_id, now, self.pool, self.graphs, self.embedder.embed,
                                  step=k, trending=self.trending)
                except PublishError as exc:
                    log.warning("step %d: dropped action of %s: %s", k, agent.agent_id, exc)
                    continue
                records.append(rec)
                per_agent[agent.agent_id] = per_agent.get(agent.agent_id, 0) + 1

        # (6) endogenous feedback
        counted = records if cfg.hawkes.count_all_actions else [r for r in records if r.post_id is not None]
        record_endogenous(self.hawkes, len(counted), cfg.hawkes)

        # (7) contagion among graph neighbours active this step
        self._contagion(set(activated), now)

        # (8) bookkeeping
        self.activity.reinforce(per_agent)
        self.trending.roll()
        record = StepRecord(k, now, cfg.clock(now), lam, circ, expected_activations(lam, cfg.dt, cfg.hawkes),
                            n_t, activated, len(records), degraded, fired, forced)
        self._append(TRACE_LOG, traces)
        if cfg.gateway.log_exchanges:
            self._append(EXCHANGE_LOG, exchanges)
        self._append(ACTION_LOG, [r.to_dict() for r in records])
        self._append(STEP_LOG, [record.to_dict()])
        self.step_index += 1
        for hook in self.on_step:
            hook(self, record)
        return record

    def _contagion(self, active: set, now: float) -> None:
        if not active:
            return
        snapshot = {a: self.agents[a].beliefs.emotion for a in active}
        targets = set()
        for a in active:
            targets |= self.graphs.neighbors(a)
        cfg = self.config.emotion
        for aid in sorted(targets):
            if aid not in self.agents:
                continue
            neigh = sorted(n for n in self.graphs.neighbors(aid) if n in active)
            if not neigh:
                continue
            b = self.agents[aid].beliefs
            e = decay_emotion(b.emotion, max(0.0, now - b.last_update), cfg)
            b.emotion = contagion_blend(e, mean_emotion([snapshot[n] for n in neigh]), cfg.rho)
            b.last_update = max(b.last_update, now)

    # ------------------------------------------------------------ run loop

    def checkpoint_dir(self) -> Optional[str]:
        return self._path("checkpoints")

    def checkpoint_path(self, step: Optional[int] = None) -> Optional[str]:
        d = self.checkpoint_dir()
        return os.path.join(d, f"ckpt_{self.step_index if step is None else step:05d}.json") if d else None

    def run(self, n_steps: Optional[int] = None) -> List[StepRecord]:
        """Advance `n_steps` (default: up to max_steps), checkpointing periodically."""
        target = self.config.max_steps if n_steps is None else self.step_index + n_steps
        if self.out_dir:
            os.makedirs(self.checkpoint_dir(), exist_ok=True)
            if not os.path.exists(self.checkpoint_path()):
                save_checkpoint(self, self.checkpoint_path())
        out = []
        period = self.config.checkpoint_period
        while self.step_index < target:
            out.append(self.step())
            if self.out_dir and period > 0 and self.step_index % period == 0:
                save_checkpoint(self, self.checkpoint_path())
        if self.out_dir and out:
            save_checkpoint(self, self.checkpoint_path())
        return out

    # ------------------------------------------------------------ state

    def state_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "step": self.step_index,
            "t": self.t,
            "agents": [a.to_dict() for a in self.agents.values()],
            "activity": self.activity.to_dict(),
            "pool": self.pool.to_dict(),
            "graphs": self.graphs.to_dict(),
            "trending": self.trending.to_dict(),
            "histories": {a: h.to_list() for a, h in self.histories.items()},
            "hawkes": self.hawkes.to_dict(),
            "queue": self.queue.to_list(),
            "triggered": list(self.triggered),
            "forced": list(self.forced),
            "interventions": list(self.interventions),
            "policy_log": list(self.policy_log),
            "event_background": self.event_background,
            "rng": {"scheme": "seedsequence(seed, stream, key, step)", "seed": self.config.seed},
        }

    @classmethod
    def from_state(cls, state: dict, gateway=None, out_dir: Optional[str] = None,
                   config: Optional[SimConfig] = None, **kw) -> "Simulation":
        cfg = config or SimConfig.from_dict(state["config"])
        sim = cls(cfg, None, gateway, out_dir, **kw)
        sim.step_index = int(state["step"])
        sim.agents = {a["agent_id"]: Agent.from_dict(a) for a in state["agents"]}
        sim.activity = ActivityWeights.from_dict(state["activity"])
        sim.pool = ContentPool.from_dict(state["pool"])
        sim.graphs = SocialGraphs.from_dict(state["graphs"])
        sim.trending = TrendingTracker.from_dict(state["trending"])
        window = cfg.recommendation.history_window
        sim.histories = {a: ExposureHistory.from_list(window, ids) for a, ids in state["histories"].items()}
        sim.hawkes = HawkesState.from_dict(state["hawkes"])
        sim.queue = EventQueue.from_list(state["queue"])
        sim.triggered = list(state["triggered"])
        sim.forced = list(state["forced"])
        sim.interventions = list(state["interventions"])
        sim.policy_log = list(state["policy_log"])
        sim.event_background = state["event_background"]
        return sim


# ---------------------------------------------------------------- checkpoints

def checkpoint_bytes(sim: Simulation) -> Tuple[bytes, str]:
    payload = _dumps(sim.state_dict()).encode("utf-8")
    return payload, hashlib.sha256(payload).hexdigest()


def save_checkpoint(sim: Simulation, path: str) -> str:
    """Write header line + canonical JSON payload atomically; returns the payload hash."""
    payload, digest = checkpoint_bytes(sim)
    header = _dumps({"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "sha256": digest,
                     "step": sim.step_index}).encode("utf-8")
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header + b"\n" + payload + b"\n")
    os.replace(tmp, path)
    return digest


def read_checkpoint(path: str) -> Tuple[dict, dict]:
    """Return (header, state) after verifying format, version and hash."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head, sep, rest = raw.partition(b"\n")
    if not sep:
        raise CheckpointError(f"{path}: missing checkpoint header")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc
    if header.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a checkpoint (format={header.get('format')!r})")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: version {header.get('version')} != supported {CHECKPOINT_VERSION}")
    payload = rest[:-1] if rest.endswith(b"\n") else rest
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("sha256"):
        raise CheckpointError(f"{path}: payload hash {digest[:12]} does not match header {str(header.get('sha256'))[:12]}")
    try:
        state = json.loads(payload)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt payload: {exc}") from exc
    return header, state


def load_checkpoint(path: str, gateway=None, out_dir: Optional[str] = None,
                    config: Optional[SimConfig] = None, **kw) -> Simulation:
    _, state = read_checkpoint(path)
    return Simulation.from_state(state, gateway, out_dir, config, **kw)


def truncate_logs(out_dir: str, step: int) -> None:
    """Drop log records at or after `step` (used when resuming)."""
    for name in LOG_FILES:
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            continue
        with open(path, encoding="utf-8") as fh:
            keep = [line for line in fh if json.loads(line).get("step", 0) < step]
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(keep)


def resume(path: str, out_dir: str, gateway=None, config: Optional[SimConfig] = None, **kw) -> Simulation:
    sim = load_checkpoint(path, gateway, out_dir, config, **kw)
    truncate_logs(out_dir, sim.step_index)
    return sim


def latest_checkpoint(out_dir: str) -> Optional[str]:
    d = os.path.join(out_dir, "checkpoints")
    if not os.path.isdir(d):
        return None
    files = sorted(f for f in os.listdir(d) if f.startswith("ckpt_") and f.endswith(".json"))
    return os.path.join(d, files[-1]) if files else None


def run(config: SimConfig, roster: Roster, out_dir: str, gateway=None, **kw) -> Dict[str, str]:
    """Fresh run of `config.max_steps` steps; returns the log paths."""
    os.makedirs(out_dir, exist_ok=True)
    for name in LOG_FILES:
        open(os.path.join(out_dir, name), "w").close()
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
    sim = Simulation(config, roster, gateway, out_dir, **kw)
    sim.run()
    return {"step_log": os.path.join(out_dir, STEP_LOG), "action_log": os.path.join(out_dir, ACTION_LOG),
            "trace": os.path.join(out_dir, TRACE_LOG), "checkpoint": sim.checkpoint_path()}
