#!/usr/bin/env python3
"""Computer Programmers case study: success probabilities for the fixture
workers, with and without subskill division."""

import argparse
import json
from pathlib import Path

from jobfit.dataio import load_fixture_job, named_worker
from jobfit.job import ErrorModel, FIXTURE_MODEL
from jobfit.simulate import SimConfig, estimate_success_probability


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--out", default="results/case_study.json")
    args = ap.parse_args()

    config = SimConfig(trials=args.trials, seed=args.seed)
    divided = load_fixture_job()
    undivided = load_fixture_job(divide=False)
    avg_model = ErrorModel(h="average", g="weighted", f="weighted")

    rows = {}
    for label, worker, spec, model in (
        ("human", named_worker("human"), divided, FIXTURE_MODEL),
        ("ai", named_worker("ai"), divided, FIXTURE_MODEL),
        ("human_undivided", named_worker("human-skill"), undivided, avg_model),
        ("ai_undivided", named_worker("ai-skill"), undivided, avg_model),
    ):
        est = estimate_success_probability(worker, spec, model, config)
        rows[label] = {"p": est.value, "stderr": est.stderr}
        print(f"{label:16s} P = {est.value:.4f} +- {est.stderr:.4f}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"tau": divided.tau, "trials": args.trials,
                               "seed": args.seed, "results": rows},
                              indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
