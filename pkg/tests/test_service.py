"""Wire-protocol tests: the session endpoints drive the same engine the
library exposes, verdict logs replay exactly, and sessions are isolated."""

import json

import pytest
from fastapi.testclient import TestClient

from autoweak.datagen import gaussian_blob_bundle
from autoweak.iws_engine import build_pool, open_session, run_automated
from autoweak.iws_service import TOKEN_ENV, create_app, read_verdict_log
from autoweak.lf_engine import LFSet, SynthesisConfig


@pytest.fixture()
def served(tmp_path):
    bundle = gaussian_blob_bundle(n=150, m=60, d=5, classes=2, sep=4.0,
                                  sigma=0.6, seed=0)
    pool = build_pool(bundle, SynthesisConfig(cardinality=1,
                                              learner_kinds=("stump",), seed=0))
    app = create_app(bundle, pool, tmp_path / "sessions")
    return TestClient(app), bundle, pool, tmp_path / "sessions"


def drive_session(client, threshold):
    sid = client.post("/sessions", json={"mode": "interactive"}).json()["session_id"]
    while True:
        nxt = client.get(f"/sessions/{sid}/next").json()
        if nxt["done"]:
            break
        useful = nxt["stats"]["accuracy"] >= threshold
        r = client.post(f"/sessions/{sid}/verdict",
                        json={"lf_id": nxt["lf_id"], "useful": useful})
        assert r.status_code == 200
    final = client.post(f"/sessions/{sid}/finalize").json()
    return sid, final


class TestProtocol:
    def test_threshold_client_matches_automated(self, served):
        client, bundle, pool, _ = served
        t = 0.7
        sid, final = drive_session(client, t)
        served_ids = [lf["id"] for lf in json.loads(
            open(final["lf_set_path"]).read())["lfs"]]
        auto = run_automated(open_session(bundle, pool, mode="automated",
                                          accuracy_threshold=t))
        assert served_ids == [lf.lf_id for lf in auto.lfs]

    def test_next_is_deterministic_given_state(self, served):
        client, _, _, _ = served
        sid = client.post("/sessions", json={}).json()["session_id"]
        a = client.get(f"/sessions/{sid}/next").json()
        b = client.get(f"/sessions/{sid}/next").json()
        assert a == b
        assert set(a["stats"]) == {"coverage", "precision", "recall", "accuracy"}

    def test_double_verdict_409(self, served):
        client, _, _, _ = served
        sid = client.post("/sessions", json={}).json()["session_id"]
        nxt = client.get(f"/sessions/{sid}/next").json()
        body = {"lf_id": nxt["lf_id"], "useful": True}
        assert client.post(f"/sessions/{sid}/verdict", json=body).status_code == 200
        again = client.post(f"/sessions/{sid}/verdict", json=body)
        assert again.status_code == 409
        assert "already decided" in again.json()["detail"]

    def test_unknown_candidate_404(self, served):
        client, _, _, _ = served
        sid = client.post("/sessions", json={}).json()["session_id"]
        r = client.post(f"/sessions/{sid}/verdict",
                        json={"lf_id": "ghost", "useful": True})
        assert r.status_code == 404

    def test_unknown_session_404(self, served):
        client, _, _, _ = served
        assert client.get("/sessions/nope/next").status_code == 404

    def test_finalize_empty_warns(self, served):
        client, _, _, _ = served
        sid = client.post("/sessions", json={}).json()["session_id"]
        final = client.post(f"/sessions/{sid}/finalize").json()
        assert final["summary"]["selected"] == 0
        assert "empty selection" in final["summary"]["warning"]
        # a finalized session refuses further interaction
        assert client.get(f"/sessions/{sid}/next").status_code == 409

    def test_concurrent_sessions_independent(self, served):
        client, _, pool, _ = served
        sid_a = client.post("/sessions", json={}).json()["session_id"]
        sid_b = client.post("/sessions", json={}).json()["session_id"]
        nxt = client.get(f"/sessions/{sid_a}/next").json()
        client.post(f"/sessions/{sid_a}/verdict",
                    json={"lf_id": nxt["lf_id"], "useful": True})
        final_a = client.post(f"/sessions/{sid_a}/finalize").json()
        final_b = client.post(f"/sessions/{sid_b}/finalize").json()
        assert final_a["summary"]["selected"] == 1
        assert final_b["summary"]["selected"] == 0

    def test_state_reports_verdict_history(self, served):
        client, _, _, log_dir = served
        sid, _ = drive_session(client, threshold=0.8)
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["finalized"] is True
        logged = read_verdict_log(log_dir / f"{sid}.ndjson")
        assert state["verdicts"] == logged

    def test_replay_from_log_reproduces_final_set(self, served):
        client, bundle, _, log_dir = served
        sid, final = drive_session(client, threshold=0.75)
        pool = LFSet.load(log_dir / "pool.json")
        from autoweak.iws_engine import replay_session

        replayed = replay_session(bundle, pool,
                                  read_verdict_log(log_dir / f"{sid}.ndjson"))
        saved = LFSet.load(final["lf_set_path"])
        assert [lf.lf_id for lf in replayed.lfs] == [lf.lf_id for lf in saved.lfs]

    def test_committee_preview_grows(self, served):
        client, _, _, _ = served
        sid = client.post("/sessions", json={}).json()["session_id"]
        first = client.get(f"/sessions/{sid}/next").json()
        assert first["committee"] == {"size": 0, "coverage": 0.0}
        client.post(f"/sessions/{sid}/verdict",
                    json={"lf_id": first["lf_id"], "useful": True})
        second = client.get(f"/sessions/{sid}/next").json()
        assert second["committee"]["size"] == 1
        assert second["committee"]["coverage"] > 0


class TestAuth:
    def test_token_guard(self, tmp_path, monkeypatch):
        bundle = gaussian_blob_bundle(n=60, m=30, d=5, classes=2, seed=1)
        pool = build_pool(bundle, SynthesisConfig(cardinality=1,
                                                  learner_kinds=("stump",)))
        app = create_app(bundle, pool, tmp_path / "s")
        client = TestClient(app)
        monkeypatch.setenv(TOKEN_ENV, "sekrit")
        assert client.post("/sessions", json={}).status_code == 401
        ok = client.post("/sessions", json={}, headers={"x-auth-token": "sekrit"})
        assert ok.status_code == 200

    def test_open_when_no_token_set(self, tmp_path, monkeypatch):
        monkeypatch.delenv(TOKEN_ENV, raising=False)
        bundle = gaussian_blob_bundle(n=60, m=30, d=5, classes=2, seed=2)
        pool = build_pool(bundle, SynthesisConfig(cardinality=1,
                                                  learner_kinds=("stump",)))
        client = TestClient(create_app(bundle, pool, tmp_path / "s"))
        assert client.post("/sessions", json={}).status_code == 200
