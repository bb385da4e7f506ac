import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from opinionsim.cognition.beliefs import AgentKind, BeliefState  # noqa: E402
from opinionsim.cognition.emotion import EmotionVector  # noqa: E402
from opinionsim.cognition.memory import MemoryBank  # noqa: E402
from opinionsim.cognition.pipeline import Agent  # noqa: E402
from opinionsim.simulator.config import SimConfig  # noqa: E402
from opinionsim.simulator.engine import Roster  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def make_agent(aid: str, kind=AgentKind.ORDINARY_USER, traits=None, emotion=None) -> Agent:
    beliefs = BeliefState(f"I am {aid}, an ordinary user from Hubei.", list(traits or ["I follow the news"]), [],
                          emotion or EmotionVector.uniform(0.1), 0.0, None)
    return Agent(aid, kind, beliefs, MemoryBank(200), {"user_id": aid})


def small_roster(n: int = 12, seed_posts: int = 6) -> Roster:
    agents = [make_agent(f"a{i:02d}") for i in range(n)]
    edges = [(f"a{i:02d}", f"a{(i + 1) % n:02d}") for i in range(n)]
    seeds = [{"id": f"s{j}", "author_id": f"a{j % n:02d}", "t_pub": -60.0 + j, "kind": "short_post",
              "text": f"factory fire update number {j} is shocking", "hashtags": ["#FactoryFire#"],
              "parent_id": None} for j in range(seed_posts)]
    return Roster(agents, edges, {a.agent_id: 1 + i % 3 for i, a in enumerate(agents)}, seeds, "A factory fire.")


def small_config(steps: int = 12, seed: int = 3, **kw) -> SimConfig:
    d = {"max_steps": steps, "seed": seed, "checkpoint_period": 5,
         "events": [{"step": 1, "label": "fire", "payload": "A fire breaks out at the factory."}],
         "hawkes": {"mu": 0.05}}
    d.update(kw)
    return SimConfig.from_dict({**SimConfig().to_dict(), **d, "hawkes": {**SimConfig().to_dict()["hawkes"],
                                                                          **d["hawkes"]}})


def read_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture
def roster():
    return small_roster()


# acceptance criterion number -> (passed, title, seconds, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, secs, detail = ACCEPTANCE[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.1f}s)"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
