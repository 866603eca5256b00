#!/usr/bin/env python3
"""Run the split over a real HTTP hop on localhost.

Starts the guidance service in a background thread, sends one batched
request for the first --n dataset questions, then completes each answer
locally with the student backend. Only the guidance text crosses the
wire, which is the whole point of the exercise.
"""

from __future__ import annotations

import argparse
import threading
import time

import httpx
import uvicorn

from gkt.backends import build_backend
from gkt.config import load_config
from gkt.datasets import load_dataset
from gkt.domain import GuidancePrompt, UserRequest
from gkt.evaluation import evaluate_results
from gkt.link import transmission_time
from gkt.pipeline import resolve_few_shot
from gkt.service import create_app
from gkt.student import build_jobs, run_edge_fleet


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="experiment config")
    parser.add_argument("--n", type=int, default=8, help="questions to send")
    parser.add_argument("--port", type=int, default=8077)
    args = parser.parse_args()

    config = load_config(args.config)
    few_shot = resolve_few_shot(config)
    app = create_app(
        build_backend(config.teacher_backend),
        few_shot_prompt=few_shot,
        capacity=config.effective_batch_size,
        linger_s=config.service_linger_s,
    )
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=args.port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.02)

    records = load_dataset(config.dataset_path)[: args.n]
    try:
        reply = httpx.post(
            f"http://127.0.0.1:{args.port}/v1/guidance",
            json={
                "questions": [r.question for r in records],
                "mode": config.projection.mode.value,
                "budget": config.projection.guidance_token_budget,
            },
            timeout=60.0,
        )
        reply.raise_for_status()
    finally:
        server.should_exit = True
        thread.join()
    body = reply.json()

    # The service reports one latency for the coalesced batch; apportion it
    # evenly, same as the in-process teacher path does.
    share = body["batch_latency_s"] / max(len(records), 1)
    guidance = [
        GuidancePrompt(
            request_id=r.id,
            text=text,
            teacher_token_count=count,
            generation_time=share,
            batch_index=0,
        )
        for r, text, count in zip(records, body["guidance"], body["token_counts"])
    ]
    requests = [
        UserRequest(request_id=r.id, question=r.question, settings=config.student_settings_default)
        for r in records
    ]
    jobs = build_jobs(requests, guidance, few_shot)
    fleet = run_edge_fleet(
        jobs,
        build_backend(config.student_backend),
        parallelism=config.edge_parallelism,
        task=config.task,
    )
    scores = {
        s.record_id: s
        for s in evaluate_results(fleet.completed, records, config.task)
    }
    guidance_by_id = {g.request_id: g for g in guidance}

    print(f"\n{'id':<12} {'guid_tok':>8} {'answer':>10} {'gold':>10}  ok")
    for r in records:
        s = scores.get(r.id)
        tokens = guidance_by_id[r.id].teacher_token_count
        if s is None:
            print(f"{r.id:<12} {tokens:>8} {'FAILED':>10} {r.gold_answer:>10}  -")
            continue
        mark = "y" if s.correct else "n"
        print(f"{r.id:<12} {tokens:>8} {str(s.extracted_answer):>10} {r.gold_answer:>10}  {mark}")
    n_ok = sum(1 for s in scores.values() if s.correct)
    print(f"\naccuracy        {n_ok}/{len(records)}")
    print(f"cloud batch     {body['batch_latency_s']:.3f} s")
    print(f"edge makespan   {fleet.makespan_s:.3f} s (parallelism {fleet.parallelism})")
    if config.link is not None:
        total = sum(g.teacher_token_count for g in guidance)
        print(f"link transfer   {transmission_time(total, config.link):.3f} s for {total} tokens")


if __name__ == "__main__":
    main()
