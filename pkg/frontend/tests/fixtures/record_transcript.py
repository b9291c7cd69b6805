#!/usr/bin/env python3
"""Record a real 5-candidate vetting session against the in-process
service, for the UI replay snapshot test.

Regenerate with:  python frontend/tests/fixtures/record_transcript.py
(deterministic: fixed seeds, fixed verdict rule accuracy >= 0.7)
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from autoweak.datagen import gaussian_blob_bundle
from autoweak.iws_engine import build_pool
from autoweak.iws_service import create_app, read_verdict_log
from autoweak.lf_engine import SynthesisConfig

THRESHOLD = 0.7
OUT = Path(__file__).parent / "session_transcript.json"


def main():
    # d=1 stumps with 5 classes: exactly one candidate per class
    bundle = gaussian_blob_bundle(n=120, m=60, d=1, classes=5, sep=3.0,
                                  sigma=0.4, seed=101)
    pool = build_pool(bundle, SynthesisConfig(cardinality=1,
                                              learner_kinds=("stump",),
                                              seed=101), min_pool=5)
    assert len(pool.lfs) == 5
    with tempfile.TemporaryDirectory() as td:
        client = TestClient(create_app(bundle, pool, Path(td)))
        sid = client.post("/sessions", json={"mode": "interactive"}).json()["session_id"]
        steps = []
        while True:
            nxt = client.get(f"/sessions/{sid}/next").json()
            if nxt["done"]:
                steps.append({"next": nxt})
                break
            useful = nxt["stats"]["accuracy"] >= THRESHOLD
            verdict = client.post(
                f"/sessions/{sid}/verdict",
                json={"lf_id": nxt["lf_id"], "useful": useful}).json()
            state = client.get(f"/sessions/{sid}/state").json()
            steps.append({"next": nxt, "verdict_sent": {"lf_id": nxt["lf_id"],
                                                        "useful": useful},
                          "verdict_response": verdict, "state": state})
        finalize = client.post(f"/sessions/{sid}/finalize").json()
        final_state = client.get(f"/sessions/{sid}/state").json()
        server_log = read_verdict_log(Path(td) / f"{sid}.ndjson")

    # scrub run-dependent identifiers so the fixture is stable
    finalize["lf_set_path"] = "<lf_set_path>"
    transcript = {
        "threshold": THRESHOLD,
        "session_id": "fixture",
        "steps": steps,
        "finalize": finalize,
        "final_state": final_state,
        "server_verdict_log": server_log,
    }
    assert final_state["verdicts"] == server_log
    OUT.write_text(json.dumps(transcript, indent=1, sort_keys=True),
                   encoding="ascii")
    print(f"wrote {OUT} ({len(steps)} steps)")


if __name__ == "__main__":
    main()
