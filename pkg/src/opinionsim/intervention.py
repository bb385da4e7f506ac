"""Governance interventions and branch-and-compare counterfactual runs."""
from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .cognition.beliefs import OpinionEntry, dedupe_opinions, identity_digest
from .cognition.emotion import EMOTIONS, EmotionVector
from .platform.recommend import RecommendationConfig
from .simulator.engine import (
    ACTION_LOG,
    LOG_FILES,
    Simulation,
    load_checkpoint,
    read_checkpoint,
    stable_int,
    stream,
)
from .temporal import ExogenousEvent

EVENT_QUEUE = "event_queue"
NODE_CONTROL = "node_control"
PLATFORM_POLICY = "platform_policy"
KINDS = (EVENT_QUEUE, NODE_CONTROL, PLATFORM_POLICY)

EDITABLE_LAYERS = ("psychology", "event_opinions", "emotion")
OPERATIONS = ("replace", "append", "scale")

_STREAM_INTERVENTION = 3


class InterventionError(ValueError):
    pass


@dataclass
class BeliefEdit:
    layer: str
    operation: str
    coverage: float
    payload: Any

    def __post_init__(self):
        if self.layer not in EDITABLE_LAYERS:
            raise InterventionError(f"layer {self.layer!r} is not editable; choose from {EDITABLE_LAYERS}")
        if self.operation not in OPERATIONS:
            raise InterventionError(f"unknown edit operation {self.operation!r}")
        if not 0.0 <= self.coverage <= 1.0:
            raise InterventionError("coverage must lie in [0, 1]")
        if self.operation == "scale" and self.layer != "emotion":
            raise InterventionError("scale applies to the emotion layer only")


@dataclass
class InterventionSpec:
    kind: str
    activation_step: int
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InterventionError(f"unknown intervention kind {self.kind!r}")
        if self.activation_step < 0:
            raise InterventionError("activation_step must be >= 0")
        if self.kind == NODE_CONTROL and "belief_edit" in self.params:
            edit = self.params["belief_edit"]
            BeliefEdit(**edit) if isinstance(edit, dict) else edit

    def to_dict(self) -> dict:
        params = dict(self.params)
        if isinstance(params.get("belief_edit"), BeliefEdit):
            params["belief_edit"] = asdict(params["belief_edit"])
        return {"kind": self.kind, "activation_step": self.activation_step, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "InterventionSpec":
        return cls(d["kind"], int(d["activation_step"]), dict(d.get("params", {})))


def coverage_count(coverage: float, n: int) -> int:
    """round(c * n) with halves rounded up."""
    return min(n, int(math.floor(coverage * n + 0.5)))


def select_coverage(sim: Simulation, candidates: List[str], coverage: float, step: int) -> List[str]:
    candidates = sorted(candidates)
    k = coverage_count(coverage, len(candidates))
    if k == 0:
        return []
    rng = stream(sim.config.seed, _STREAM_INTERVENTION, step)
    idx = rng.choice(len(candidates), size=k, replace=False)
    return sorted(candidates[int(i)] for i in idx)


def _edit_beliefs(sim: Simulation, agent_id: str, edit: BeliefEdit) -> None:
    b = sim.agents[agent_id].beliefs
    now = sim.t
    if edit.layer == "psychology":
        traits = [str(x) for x in (edit.payload if isinstance(edit.payload, list) else [edit.payload])]
        b.psychology = traits if edit.operation == "replace" else b.psychology + [t for t in traits if t not in b.psychology]
    elif edit.layer == "event_opinions":
        items = edit.payload if isinstance(edit.payload, list) else [edit.payload]
        new = [OpinionEntry(now, str(o["subject"]), str(o["opinion"]), str(o.get("reason", ""))) for o in items]
        b.event_opinions = dedupe_opinions(new if edit.operation == "replace" else b.event_opinions + new)
    else:
        cur = b.emotion.to_dict()
        if edit.operation == "replace":
            b.emotion = EmotionVector.from_dict({**cur, **edit.payload})
        elif edit.operation == "append":
            b.emotion = EmotionVector(*(cur[k] + float(edit.payload.get(k, 0.0)) for k in EMOTIONS))
        else:
            factors = edit.payload if isinstance(edit.payload, dict) else {k: float(edit.payload) for k in EMOTIONS}
            b.emotion = EmotionVector(*(cur[k] * float(factors.get(k, 1.0)) for k in EMOTIONS))


def apply_intervention(sim: Simulation, spec: InterventionSpec) -> dict:
    """Apply one spec to the live simulation; returns the audit record it logs."""
    p = spec.params
    record: Dict[str, Any] = {"step": sim.step_index, **spec.to_dict()}
    if spec.kind == EVENT_QUEUE:
        ev = ExogenousEvent(sim.t, p.get("label", "intervention"), p.get("payload", ""), float(p.get("magnitude", 1.0)))
        sim.queue.push(ev)
    elif spec.kind == NODE_CONTROL:
        targets = p.get("targets")
        if targets is not None:
            missing = [t for t in targets if t not in sim.agents]
            if missing:
                raise InterventionError(f"node_control targets not in roster: {missing}")
        pool = list(targets) if targets is not None else list(sim.agents)
        if "belief_edit" in p:
            edit = p["belief_edit"] if isinstance(p["belief_edit"], BeliefEdit) else BeliefEdit(**p["belief_edit"])
            chosen = select_coverage(sim, pool, edit.coverage, sim.step_index)
            for aid in chosen:
                _edit_beliefs(sim, aid, edit)
            record["edited"] = chosen
        if "directive" in p:
            for aid in sorted(pool):
                sim.agents[aid].directives.append(str(p["directive"]))
                sim.forced.append(aid)
            record["directed"] = sorted(pool)
    else:
        overrides = dict(p.get("recommendation", {}))
        if "reach_rules" in p:
            overrides["reach_rules"] = list(sim.config.recommendation.reach_rules) + list(p["reach_rules"])
        current = {f.name: getattr(sim.config.recommendation, f.name) for f in fields(RecommendationConfig)}
        unknown = set(overrides) - set(current)
        if unknown:
            raise InterventionError(f"unknown recommendation overrides: {sorted(unknown)}")
        sim.config.recommendation = RecommendationConfig(**{**current, **overrides})
    sim.policy_log.append(json.loads(json.dumps(record, default=str)))
    return record


def schedule(sim: Simulation, spec: InterventionSpec) -> None:
    if spec.activation_step < sim.step_index:
        raise InterventionError(f"activation step {spec.activation_step} precedes the branch point {sim.step_index}")
    sim.interventions.append(spec.to_dict())


# ---------------------------------------------------------------- branching

@dataclass
class Arm:
    name: str
    interventions: List[InterventionSpec] = field(default_factory=list)
    seed: Optional[int] = None

    @classmethod
    def from_dict(cls, d: dict) -> "Arm":
        return cls(d["name"], [InterventionSpec.from_dict(s) for s in d.get("interventions", [])], d.get("seed"))

    def to_dict(self) -> dict:
        return {"name": self.name, "interventions": [s.to_dict() for s in self.interventions], "seed": self.seed}


@dataclass
class BranchPlan:
    checkpoint: str
    arms: List[Arm]
    steps: int
    seed_policy: str = "shared"  # shared | per_arm
    control: Optional[str] = None

    def __post_init__(self):
        names = [a.name for a in self.arms]
        if len(set(names)) != len(names):
            raise InterventionError("arm names must be unique")
        if self.seed_policy not in ("shared", "per_arm"):
            raise InterventionError("seed_policy must be 'shared' or 'per_arm'")
        if self.steps < 0:
            raise InterventionError("steps must be >= 0")

    @property
    def control_arm(self) -> str:
        if self.control:
            return self.control
        for a in self.arms:
            if a.name == "control":
                return a.name
        return self.arms[0].name

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "BranchPlan":
        ckpt = d["checkpoint"]
        if not os.path.isabs(ckpt):
            ckpt = os.path.join(base_dir, ckpt)
        return cls(ckpt, [Arm.from_dict(a) for a in d["arms"]], int(d["steps"]), d.get("seed_policy", "shared"),
                   d.get("control"))

    @classmethod
    def load(cls, path: str) -> "BranchPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        return {"checkpoint": self.checkpoint, "arms": [a.to_dict() for a in self.arms], "steps": self.steps,
                "seed_policy": self.seed_policy, "control": self.control_arm}


def arm_seed(plan: BranchPlan, arm: Arm, base_seed: int) -> int:
    if arm.seed is not None:
        return int(arm.seed)
    if plan.seed_policy == "shared":
        return base_seed
    return (base_seed + stable_int(arm.name)) & 0xFFFFFFFF


def run_arm(plan: BranchPlan, arm: Arm, out_dir: str, gateway_factory: Callable[[], object],
            expected_hash: str, base_seed: int) -> Dict[str, Any]:
    header, _ = read_checkpoint(plan.checkpoint)
    if header["sha256"] != expected_hash:
        raise InterventionError(f"arm {arm.name}: checkpoint hash changed ({header['sha256'][:12]})")
    arm_dir = os.path.join(out_dir, arm.name)
    os.makedirs(arm_dir, exist_ok=True)
    for name in LOG_FILES:
        open(os.path.join(arm_dir, name), "w").close()
    sim = load_checkpoint(plan.checkpoint, gateway_factory(), arm_dir)
    sim.config.seed = arm_seed(plan, arm, base_seed)
    identities_before = identity_digest({a: x.beliefs for a, x in sim.agents.items()})
    start = sim.step_index
    for spec in arm.interventions:
        schedule(sim, spec)
    sim.run(plan.steps)
    identities_after = identity_digest({a: x.beliefs for a, x in sim.agents.items()})
    if identities_before != identities_after:
        raise InterventionError(f"arm {arm.name}: agent identities changed during the run")
    return {"name": arm.name, "dir": arm_dir, "seed": sim.config.seed, "start_step": start,
            "end_step": sim.step_index, "identity_digest": identities_after,
            "interventions": [s.to_dict() for s in arm.interventions], "policy_log": sim.policy_log}


def run_branches(plan: BranchPlan, out_dir: str, gateway_factory: Callable[[], object],
                 threads: int = 1) -> Dict[str, Any]:
    """Run every arm from the shared checkpoint; writes manifest.json and comparison.json."""
    from .evaluation.emergence import emotion_outcomes
    from .evaluation.logs import read_jsonl

    header, state = read_checkpoint(plan.checkpoint)
    base_seed = int(state["config"]["seed"])
    os.makedirs(out_dir, exist_ok=True)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            arms = list(ex.map(lambda a: run_arm(plan, a, out_dir, gateway_factory, header["sha256"], base_seed),
                               plan.arms))
    else:
        arms = [run_arm(plan, a, out_dir, gateway_factory, header["sha256"], base_seed) for a in plan.arms]
    branch_step = int(state["step"])
    outcomes = {}
    for a in arms:
        actions = read_jsonl(os.path.join(a["dir"], ACTION_LOG))
        outcomes[a["name"]] = emotion_outcomes(actions)
    control = plan.control_arm
    comparisons = []
    for a in arms:
        if a["name"] == control:
            continue
        comparisons.append({
            "arm": a["name"], "control": control,
            "arm_dir": a["dir"], "control_dir": os.path.join(out_dir, control),
            "outcomes": outcomes[a["name"]], "control_outcomes": outcomes[control],
            "delta": {k: (None if outcomes[a["name"]][k] is None or outcomes[control][k] is None
                          else outcomes[a["name"]][k] - outcomes[control][k]) for k in outcomes[control]},
        })
    manifest = {"checkpoint": os.path.abspath(plan.checkpoint), "checkpoint_sha256": header["sha256"],
                "branch_step": branch_step, "steps": plan.steps, "seed_policy": plan.seed_policy,
                "control": control, "arms": arms}
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, ensure_ascii=False)
    bundle = {"control": control, "outcomes": outcomes, "comparisons": comparisons}
    with open(os.path.join(out_dir, "comparison.json"), "w", encoding="utf-8") as fh:
        json.dump(bundle, fh, indent=2, sort_keys=True, ensure_ascii=False)
    return {"manifest": manifest, "comparison": bundle}
