"""Three scripted news events on a 100-agent synthetic population.

Runs two simulated days with the mock backend and draws the per-step action
rate as a text histogram, so the outbreak and decay after each event is visible.

    python3 demos/outbreak_decay.py [out_dir]
"""
import sys
import tempfile

from opinionsim.ingestion.synthetic import SyntheticConfig, scenario_events, synthetic_roster
from opinionsim.llm.mock import PersonaScript, mock_pool
from opinionsim.simulator.config import SimConfig
from opinionsim.simulator.engine import Simulation

BACKGROUND = "A fire breaks out at a chemical factory; officials respond over two days."


def main(out_dir):
    sc = SyntheticConfig(n_users=100, event_steps=(12, 108, 204), seed=0)
    gw = mock_pool(PersonaScript(), seed=0)
    roster = synthetic_roster(sc, gw, BACKGROUND)
    cfg = SimConfig(max_steps=288, seed=0, events=scenario_events(sc), event_background=BACKGROUND,
                    checkpoint_period=0)
    records = Simulation(cfg, roster, gw, out_dir).run()

    # one row per hour; bar length is the mean actions per step
    scale = max(r.actions for r in records) / 60 or 1
    for h in range(0, len(records), 6):
        chunk = records[h:h + 6]
        mean = sum(r.actions for r in chunk) / len(chunk)
        mark = "*" if any(r.events for r in chunk) else " "
        print(f"h{h // 6:02d}{mark} {mean:6.1f} " + "#" * int(mean / scale))
    print(f"logs written to {out_dir}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="outbreak_"))
