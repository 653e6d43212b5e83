import pytest
from fastapi.testclient import TestClient

from preftune.service import create_app
from preftune.session import Session, SessionConfig

TOY_DIMS = [["q_pos", 10.0, 2000.0, 4], ["q_vel", 1.0, 200.0, 4]]


def config_dict(**overrides):
    base = dict(budget=4, seed=5, dimensions=TOY_DIMS, feedback_source="human")
    base.update(overrides)
    return base


@pytest.fixture()
def client():
    return TestClient(create_app())


@pytest.fixture()
def live_client():
    session = Session.start(SessionConfig(**config_dict()))
    return TestClient(create_app(session))


class TestLifecycle:
    def test_no_session_is_404(self, client):
        for path in ("/session", "/session/current-action", "/session/history", "/session/posterior"):
            assert client.get(path).status_code == 404

    def test_start_session(self, client):
        resp = client.post("/session", json=config_dict())
        assert resp.status_code == 201
        body = resp.json()
        assert body["iteration"] == 0
        assert body["budget"] == 4
        assert body["current_action"]["id"] >= 0
        assert client.get("/session").json()["iteration"] == 0

    def test_second_session_conflicts(self, client):
        assert client.post("/session", json=config_dict()).status_code == 201
        assert client.post("/session", json=config_dict()).status_code == 409

    def test_invalid_config_rejected(self, client):
        assert client.post("/session", json={"budget": 0}).status_code == 422

    def test_completed_session_can_be_replaced(self, client):
        client.post("/session", json=config_dict(budget=1))
        client.post("/session/feedback", json={"ordinal": 2})
        assert client.post("/session", json=config_dict()).status_code == 201


class TestFeedback:
    def test_feedback_advances_iteration(self, live_client):
        resp = live_client.post("/session/feedback", json={"ordinal": 3})
        assert resp.status_code == 200
        assert resp.json()["iteration"] == 1

    def test_stale_iteration_token_rejected(self, live_client):
        ok = live_client.post("/session/feedback", json={"ordinal": 2, "iteration": 0})
        assert ok.status_code == 200
        stale = live_client.post("/session/feedback", json={"ordinal": 2, "iteration": 0})
        assert stale.status_code == 409
        current = live_client.post("/session/feedback", json={"ordinal": 2, "iteration": 1})
        assert current.status_code == 200

    def test_malformed_event_rejected(self, live_client):
        assert live_client.post("/session/feedback", json={}).status_code == 422
        assert (
            live_client.post("/session/feedback", json={"preference": "maybe"}).status_code
            == 422
        )
        assert live_client.post("/session/feedback", json={"ordinal": 9}).status_code == 422

    def test_skip_accepted(self, live_client):
        resp = live_client.post("/session/feedback", json={"skip": True})
        assert resp.status_code == 200

    def test_feedback_after_completion_rejected(self, client):
        client.post("/session", json=config_dict(budget=1))
        client.post("/session/feedback", json={"ordinal": 2})
        assert client.post("/session/feedback", json={"ordinal": 2}).status_code == 422


class TestViews:
    def test_current_action_matches_summary(self, live_client):
        summary = live_client.get("/session").json()
        action = live_client.get("/session/current-action").json()
        assert action == summary["current_action"]

    def test_history_accumulates(self, live_client):
        assert live_client.get("/session/history").json() == []
        live_client.post("/session/feedback", json={"ordinal": 2})
        history = live_client.get("/session/history").json()
        assert len(history) == 1
        assert set(history[0]) == {"iteration", "best_id", "best_mu"}

    def test_posterior_view(self, live_client):
        live_client.post("/session/feedback", json={"ordinal": 2})
        view = live_client.get("/session/posterior").json()
        assert set(view) == {"action_ids", "mean", "std"}
        assert len(view["mean"]) == len(view["action_ids"])

    def test_episode_metrics_surfaced_for_plant_sessions(self, client):
        cfg = config_dict(episode={"profile": "toy", "duration": 0.2})
        body = client.post("/session", json=cfg).json()
        metrics = body["latest_metrics"]
        assert metrics is not None
        assert set(metrics) == {
            "tracking_rms",
            "torque_chatter",
            "saturation_frac",
            "vdot_violation",
            "failed",
        }
