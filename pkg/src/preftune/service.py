"""HTTP API for the live operator loop: one session per service instance."""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .session import FeedbackEvent, Session, SessionConfig, SessionError

__all__ = ["create_app"]


class FeedbackBody(BaseModel):
    preference: str | None = None
    ordinal: int | None = None
    skip: bool = False
    note: str = ""
    iteration: int | None = None  # idempotency token


def create_app(session: Session | None = None) -> FastAPI:
    """Build the service app, optionally around an already-started session."""
    app = FastAPI(title="preftune session service")
    state = {"session": session}
    lock = threading.Lock()  # single writer; mutations serialize here

    def active() -> Session:
        if state["session"] is None:
            raise HTTPException(status_code=404, detail="no active session")
        return state["session"]

    @app.get("/session")
    def get_session():
        return active().summary()

    @app.post("/session", status_code=201)
    def start_session(config: dict):
        with lock:
            if state["session"] is not None and not state["session"].completed:
                raise HTTPException(status_code=409, detail="a session is already active")
            try:
                state["session"] = Session.start(SessionConfig.from_dict(config))
            except (SessionError, ValueError, TypeError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            session = state["session"]
            if session.config.feedback_source == "human" and session.config.episode:
                session.episode_metrics(session.current_action)
            return session.summary()

    @app.post("/session/feedback")
    def submit_feedback(body: FeedbackBody):
        with lock:
            session = active()
            if body.iteration is not None and body.iteration != session.iteration:
                raise HTTPException(
                    status_code=409,
                    detail=f"stale feedback for iteration {body.iteration}, "
                    f"session is at {session.iteration}",
                )
            try:
                event = FeedbackEvent(
                    preference=body.preference,
                    ordinal=body.ordinal,
                    skip=body.skip,
                    note=body.note,
                )
                session.submit_feedback(event)
            except (SessionError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            if (
                not session.completed
                and session.config.feedback_source == "human"
                and session.config.episode
            ):
                session.episode_metrics(session.current_action)
            return session.summary()

    @app.get("/session/current-action")
    def current_action():
        session = active()
        return session.summary()["current_action"]

    @app.get("/session/history")
    def history():
        return active().summary()["history"]

    @app.get("/session/posterior")
    def posterior():
        return active().posterior_view()

    return app
