"""Run every bundled figure through the command-line pipeline and collect one
JSON report: verdicts, estimands, oracle verification, counterexample
searches for the non-identifiable queries, plus small exhaustive sweeps.

    python3 scripts/figure_suite.py --seeds 20 --output suite.json
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

from ettid.cli import RunConfig, run
from ettid.figures import figure_text
from ettid.sweeps import SweepConfig, multi_treatment_sweep, single_treatment_sweep

Q1 = "ETT[ Y=y | do(X=x) ; X=x' ]"
Q5 = "ETT[ Y=y | do(X1=x1), do(X2=x2) ; X1=x1', X2=x2' ]"

# figure, query, distributions a counterexample pair must share (None: identified)
CASES = [
    ("bow", Q1, "pv"),
    ("fig1a", Q1, None),
    ("fig2", Q1, None),
    ("fig3a", Q1, "pv"),
    ("fig4a", Q1, "pv"),
    ("fig4b", Q5, "pstar"),
    ("fig5a", Q5, None),
    ("fig5a_bi", Q5, None),
]


@dataclass
class SuiteConfig:
    seeds: int = 20
    seed: int = 0
    budget: int = 20_000
    sweep_n: int = 3
    output: str | None = None


def suite_report(cfg: SuiteConfig) -> dict:
    figures = {}
    with tempfile.TemporaryDirectory() as tmp:
        for name, query, agree in CASES:
            path = Path(tmp) / f"{name}.graph"
            path.write_text(figure_text(name))
            status, doc = run(RunConfig(str(path), query, mode="verify", seeds=cfg.seeds, seed=cfg.seed))
            entry = {"exit": status, "report": doc}
            if agree is not None:
                cstatus, cdoc = run(RunConfig(str(path), query, mode="counterexample", budget=cfg.budget,
                                              agree=agree, seed=cfg.seed))
                entry["counterexample"] = {"exit": cstatus, **cdoc["counterexample"]}
            figures[name] = entry
    sweep = SweepConfig(max_n=cfg.sweep_n, min_n=2, seeds=cfg.seeds, seed_offset=cfg.seed)
    return {
        "config": asdict(cfg) | {"output": None},
        "figures": figures,
        "single_sweep": [c.to_json() for c in single_treatment_sweep(sweep)],
        "multi_sweep": [c.to_json() for c in multi_treatment_sweep(sweep)],
    }


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=20_000)
    p.add_argument("--sweep-n", type=int, default=3)
    p.add_argument("--output")
    cfg = SuiteConfig(**vars(p.parse_args(argv)))
    text = json.dumps(suite_report(cfg), indent=2, sort_keys=True) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
