"""Branch one checkpoint into five governance arms and compare emotional outcomes.

The base run stops at step 24. Every arm restarts from that exact state, so
differences between arms come from the intervention alone.

    python3 demos/counterfactual_arms.py [out_dir]
"""
import os
import sys
import tempfile

from opinionsim.ingestion.synthetic import SyntheticConfig, scenario_events, synthetic_roster
from opinionsim.intervention import Arm, BranchPlan, InterventionSpec, run_branches
from opinionsim.llm.mock import PersonaScript, mock_pool
from opinionsim.simulator.config import SimConfig
from opinionsim.simulator.engine import run

BACKGROUND = "A fire breaks out at a chemical factory; residents fear toxic smoke."
BRANCH = 24


def gateway():
    return mock_pool(PersonaScript(), seed=1)


def main(out_dir):
    sc = SyntheticConfig(n_users=60, event_steps=(6,), seed=1)
    roster = synthetic_roster(sc, gateway(), BACKGROUND)
    cfg = SimConfig(max_steps=BRANCH, seed=1, events=scenario_events(sc), event_background=BACKGROUND,
                    checkpoint_period=BRANCH)
    base = os.path.join(out_dir, "base")
    run(cfg, roster, base, gateway())
    ckpt = os.path.join(base, "checkpoints", f"ckpt_{BRANCH:05d}.json")

    def news(label, text):
        return Arm(label, [InterventionSpec("event_queue", BRANCH, {"label": label, "payload": text})])

    calm = {"layer": "psychology", "operation": "replace", "coverage": 0.3,
            "payload": ["I stay calm and rational", "I wait for evidence before judging"]}
    plan = BranchPlan(ckpt, [
        Arm("actual"),
        news("apology", "The factory owner issues a formal public apology."),
        news("transparency", "Officials publish air-quality readings every hour."),
        Arm("calm_leaders", [InterventionSpec("node_control", BRANCH, {"belief_edit": calm})]),
        Arm("downrank_hot", [InterventionSpec("platform_policy", BRANCH,
                                              {"recommendation": {"w_p": 0.15, "w_r": 0.55}})]),
    ], steps=36, control="actual")
    result = run_branches(plan, os.path.join(out_dir, "arms"), gateway)

    ctrl = result["comparison"]["outcomes"]["actual"]
    print(f"{'arm':14s} {'neg ratio':>10s} {'anger':>8s} {'intensity':>10s}")
    print(f"{'actual':14s} {ctrl['negative_emotion_ratio']:10.3f} {ctrl['anger_ratio']:8.3f} "
          f"{ctrl['emotion_intensity']:10.3f}")
    for c in result["comparison"]["comparisons"]:
        d = c["delta"]
        print(f"{c['arm']:14s} {d['negative_emotion_ratio']:+10.3f} {d['anger_ratio']:+8.3f} "
              f"{d['emotion_intensity']:+10.3f}")
    print("(arm rows are differences from the actual arm)")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="arms_"))
