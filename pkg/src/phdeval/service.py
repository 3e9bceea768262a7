"""HTTP service hosting the triplet-choice study.

Candidate order is randomized per (subject, group) server-side and image
URLs are opaque tokens, so nothing the browser sees reveals which
candidate is which; votes are translated back to canonical pred_a/pred_b
terms before they are logged.  Every accepted vote is fsync'd to the
append-only log before the 201 goes out.
"""

from __future__ import annotations

import hashlib
import random
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .consistency import (
    Choice,
    ConsistencyEntry,
    TripletGroup,
    VoteRecord,
    append_vote,
    consistency,
    invalid_group_ids,
    read_manifest,
    read_votes,
    score_groups,
    tally_all,
    utc_now,
)
from .errors import MissingScoresError
from .mask_io import BinarizationPolicy, DEFAULT_POLICY
from .metrics import DEFAULT_METRICS, MetricDescriptor


class VotePayload(BaseModel):
    group_id: str
    subject_id: str
    choice: str  # "A" | "B" as displayed, or "difficult"


class StudyState:
    """All mutable state of one study service instance."""

    def __init__(
        self,
        groups: list[TripletGroup],
        votes_path: Path,
        seed: int = 0,
        batch_size: int | None = None,
        metrics: list[MetricDescriptor] | None = None,
        policy: BinarizationPolicy = DEFAULT_POLICY,
        validity_threshold: int = 11,
        tie_epsilon: float = 0.0,
    ):
        self.groups = groups
        self.by_id = {g.group_id: g for g in groups}
        self.votes_path = Path(votes_path)
        self.seed = seed
        self.batch_size = batch_size
        self.metrics = metrics if metrics is not None else list(DEFAULT_METRICS)
        self.policy = policy
        self.validity_threshold = validity_threshold
        self.tie_epsilon = tie_epsilon
        self.write_lock = threading.Lock()
        # (group_id, subject_id) pairs already answered; seeded from the log
        self.answered: set[tuple[str, str]] = set()
        if self.votes_path.exists():
            for record in read_votes(self.votes_path):
                self.answered.add((record.group_id, record.subject_id))
        # opaque image tokens: the URL must not leak canonical roles
        self.tokens: dict[str, Path] = {}
        for g in groups:
            for role, path in (("gt", g.gt), ("a", g.pred_a), ("b", g.pred_b)):
                self.tokens[self._token(g.group_id, role)] = Path(path)

    def _token(self, group_id: str, role: str) -> str:
        raw = f"{self.seed}:{group_id}:{role}".encode()
        return hashlib.sha256(raw).hexdigest()[:20]

    def subject_order(self, subject_id: str) -> list[TripletGroup]:
        rng = random.Random(f"{self.seed}|{subject_id}")
        order = list(self.groups)
        rng.shuffle(order)
        return order

    def swapped(self, subject_id: str, group_id: str) -> bool:
        """True when this subject sees pred_b in slot A and pred_a in slot B."""
        rng = random.Random(f"{self.seed}|{subject_id}|{group_id}")
        return rng.random() < 0.5

    def next_group(self, subject_id: str) -> dict:
        order = self.subject_order(subject_id)
        answered = sum(1 for g in order if (g.group_id, subject_id) in self.answered)
        for g in order:
            if (g.group_id, subject_id) in self.answered:
                continue
            swap = self.swapped(subject_id, g.group_id)
            slot_a, slot_b = ("b", "a") if swap else ("a", "b")
            payload = {
                "group_id": g.group_id,
                "gt_url": f"/img/{self._token(g.group_id, 'gt')}",
                "a_url": f"/img/{self._token(g.group_id, slot_a)}",
                "b_url": f"/img/{self._token(g.group_id, slot_b)}",
                "answered": answered,
                "total": len(order),
            }
            if self.batch_size:
                payload["batch"] = answered // self.batch_size + 1
                payload["batch_size"] = self.batch_size
            return payload
        return {"done": True, "answered": answered, "total": len(order)}

    def record_vote(self, payload: VotePayload) -> None:
        group = self.by_id.get(payload.group_id)
        if group is None:
            raise HTTPException(status_code=404, detail=f"unknown group {payload.group_id!r}")
        if payload.choice not in ("A", "B", "difficult"):
            raise HTTPException(status_code=400, detail=f"invalid choice {payload.choice!r}")
        choice = Choice(payload.choice)
        if choice is not Choice.DIFFICULT and self.swapped(payload.subject_id, payload.group_id):
            choice = Choice.PRED_B if choice is Choice.PRED_A else Choice.PRED_A
        record = VoteRecord(
            group_id=payload.group_id,
            subject_id=payload.subject_id,
            choice=choice,
            ts=utc_now(),
        )
        with self.write_lock:
            key = (record.group_id, record.subject_id)
            if key in self.answered:
                raise HTTPException(status_code=409, detail="vote already recorded")
            try:
                append_vote(self.votes_path, record)
            except OSError as exc:
                raise HTTPException(status_code=503, detail=f"storage failure: {exc}") from exc
            self.answered.add(key)

    def results(self) -> dict:
        """Consistency report derived by replaying the vote log."""
        votes = read_votes(self.votes_path) if self.votes_path.exists() else []
        verdicts = tally_all(votes, self.validity_threshold)
        valid_ids = {gid for gid, v in verdicts.items() if v.valid}
        score_groups(self.groups, self.metrics, self.policy, only_group_ids=valid_ids)
        entries: list[tuple[str, ConsistencyEntry | None, str | None]] = []
        for desc in self.metrics:
            try:
                entries.append((desc.name, consistency(self.groups, verdicts, desc, self.tie_epsilon), None))
            except MissingScoresError as exc:
                entries.append((desc.name, None, str(exc)))
        return {
            "validity_threshold": self.validity_threshold,
            "tie_epsilon": self.tie_epsilon,
            "votes": len(votes),
            "valid_groups": sorted(valid_ids),
            "excluded_groups": invalid_group_ids(self.groups, verdicts),
            "metrics": [
                {
                    "metric": name,
                    "matched": e.matched if e else None,
                    "valid": e.valid if e else None,
                    "ratio": e.ratio_str if e else None,
                    "percent": e.percent if e else None,
                    "error": err,
                }
                for name, e, err in entries
            ],
        }


def create_app(
    manifest_path,
    votes_path,
    seed: int = 0,
    batch_size: int | None = None,
    metrics: list[MetricDescriptor] | None = None,
    policy: BinarizationPolicy = DEFAULT_POLICY,
    validity_threshold: int = 11,
    tie_epsilon: float = 0.0,
    ui_dir=None,
) -> FastAPI:
    groups = read_manifest(manifest_path)
    state = StudyState(
        groups,
        Path(votes_path),
        seed=seed,
        batch_size=batch_size,
        metrics=metrics,
        policy=policy,
        validity_threshold=validity_threshold,
        tie_epsilon=tie_epsilon,
    )
    app = FastAPI(title="phdeval study service")
    app.state.study = state

    @app.get("/api/session/{subject_id}/next")
    def next_group(subject_id: str):
        return state.next_group(subject_id)

    @app.post("/api/votes", status_code=201)
    def post_vote(payload: VotePayload):
        state.record_vote(payload)
        return JSONResponse({"recorded": True}, status_code=201)

    @app.get("/api/results")
    def results():
        return state.results()

    @app.get("/img/{token}")
    def image(token: str):
        path = state.tokens.get(token)
        if path is None or not path.exists():
            raise HTTPException(status_code=404, detail="unknown image")
        return FileResponse(path, media_type="image/png")

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def serve(app: FastAPI, host: str, port: int) -> None:
    """Run until terminated; a busy port surfaces as a clear error."""
    import socket

    import uvicorn

    # probe the bind up front: uvicorn logs bind failures but exits with a
    # bare SystemExit, which is useless from a script
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.bind((host, port))
        probe.close()
    except OSError as exc:
        raise SystemExit(f"cannot bind {host}:{port}: {exc}") from exc
    uvicorn.run(app, host=host, port=port, log_level="info")
