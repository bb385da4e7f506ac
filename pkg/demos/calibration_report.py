"""Score a simulated run against a held-out reference log.

A synthetic generator stands in for real platform data: it writes a user table,
pre-event history and a reference log of what "really" happened. The simulation
only sees users and history; the report then compares its output with the
reference across behaviour, content and topology.

    python3 demos/calibration_report.py [out_dir]
"""
import json
import os
import sys
import tempfile

from opinionsim.evaluation.report import ReportConfig, build_report, write_report
from opinionsim.ingestion.schema import write_records
from opinionsim.ingestion.synthetic import SyntheticConfig, generate, scenario_events, synthetic_roster
from opinionsim.llm.mock import PersonaScript, mock_pool
from opinionsim.simulator.config import SimConfig
from opinionsim.simulator.engine import ACTION_LOG, run

BACKGROUND = "A fire breaks out at a chemical factory; officials respond over two days."


def main(out_dir):
    sc = SyntheticConfig(n_users=80, steps=144, event_steps=(6, 96), seed=5)
    _, _, reference = generate(sc)
    ref_path = os.path.join(out_dir, "reference.jsonl")
    os.makedirs(out_dir, exist_ok=True)
    write_records(ref_path, reference)

    gw = mock_pool(PersonaScript(), seed=5)
    cfg = SimConfig(max_steps=sc.steps, seed=5, events=scenario_events(sc), event_background=BACKGROUND,
                    t_start=sc.t_start)
    sim_dir = os.path.join(out_dir, "sim")
    run(cfg, synthetic_roster(sc, gw, BACKGROUND), sim_dir, gw)

    report = build_report(os.path.join(sim_dir, ACTION_LOG), ref_path, ReportConfig(t_start=sc.t_start))
    paths = write_report(report, os.path.join(out_dir, "report"))
    d = report.to_dict()
    for layer in ("behavior", "content", "topology"):
        vals = {k: v for k, v in d[layer].items() if isinstance(v, (int, float)) or v is None}
        print(layer, json.dumps(vals, sort_keys=True, default=str))
    print("figure data:", ", ".join(sorted(os.path.basename(p) for p in paths.values())))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="calib_"))
