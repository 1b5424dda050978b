"""HTTP service wrapping the letter habitat.

Single logical writer: every mutation (client move or scheduled
evaporation tick) passes through one lock, is validated, appended to
the JSON-lines event log (flushed and fsynced before the response), and
only then published. Reads are served from the last published snapshot
without taking the write lock.

Endpoints (JSON):
    GET  /habitat          full snapshot: dims, objects, field, version
    POST /moves            MoveEvent body -> {version, event_id} or {code, message}
    GET  /events?since=N   events with event_id > N, in order
    GET  /metrics          letter_cluster_count, pheromone_entropy, resistance
    GET  /words            lexicon words currently written on the grid

Recovery after a crash = load the newest snapshot file + replay the log
tail; accepted events are durable, so the recovered state equals the
pre-crash state bit-exactly.
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .grid import TorusDims
from .habitat import (
    CorruptLogError,
    Event,
    GenesisDescriptor,
    HabitatError,
    HabitatState,
    MoveEvent,
    TickEvent,
    apply_event,
    consensus_metrics,
    detect_words,
    event_to_record,
    genesis,
    load_snapshot,
    read_event_log,
    replay,
    snapshot,
)


class BadLexiconError(ValueError):
    """Lexicon file missing or unreadable."""


@dataclass(frozen=True)
class ServiceConfig:
    dims: TorusDims
    letters: str
    seed: int
    data_dir: Path
    lexicon_paths: tuple[str, ...] = ()
    deposit_amount: float = 1.0
    tick_interval_s: float = 30.0
    tick_rho: float = 0.02
    snapshot_every: int = 100
    metrics_window: int = 32
    host: str = "127.0.0.1"
    port: int = 8700

    def descriptor(self) -> GenesisDescriptor:
        return GenesisDescriptor(self.dims, self.letters, self.seed, self.deposit_amount)


def load_lexicon(paths) -> set[str]:
    """Union of newline-delimited word files, uppercased, A-Z only."""
    words: set[str] = set()
    for path in paths:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise BadLexiconError(f"cannot read lexicon {path}: {exc}") from exc
        for line in text.splitlines():
            word = line.strip().upper()
            if not word or word.startswith("#"):
                continue
            if not all("A" <= ch <= "Z" for ch in word):
                raise BadLexiconError(f"{path}: bad lexicon entry {line.strip()!r}")
            words.add(word)
    return words


class HabitatStore:
    """Append-only event log plus periodic snapshot files under data_dir."""

    def __init__(self, data_dir: Path) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "events.jsonl"
        self._log_file = None

    def snapshot_path(self, version: int) -> Path:
        return self.data_dir / f"snapshot-{version:09d}.json"

    def latest_snapshot(self) -> HabitatState | None:
        candidates = sorted(self.data_dir.glob("snapshot-*.json"))
        if not candidates:
            return None
        return load_snapshot(json.loads(candidates[-1].read_text()))

    def write_snapshot(self, state: HabitatState) -> None:
        path = self.snapshot_path(state.version)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(snapshot(state)))
        os.replace(tmp, path)

    def read_events(self) -> list[Event]:
        if not self.log_path.exists():
            return []
        return read_event_log(self.log_path)

    def open_log(self) -> None:
        self._log_file = open(self.log_path, "a")

    def append(self, event: Event) -> None:
        assert self._log_file is not None, "store not opened"
        self._log_file.write(json.dumps(event_to_record(event)) + "\n")
        self._log_file.flush()
        os.fsync(self._log_file.fileno())

    def close(self) -> None:
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None

    def recover(self, descriptor: GenesisDescriptor) -> tuple[HabitatState, list[Event]]:
        """Newest snapshot + log tail; fresh genesis when the dir is empty.

        The stored genesis descriptor wins over the configured one, so a
        config edit cannot silently fork an existing habitat.
        """
        snap = self.latest_snapshot()
        events = self.read_events()
        if snap is None:
            state = genesis(descriptor)
            result = replay(events, descriptor, start=state)
            return result.state, events
        tail = [e for e in events if e.event_id > snap.version]
        if tail and tail[0].event_id != snap.version + 1:
            raise CorruptLogError(
                f"log tail starts at {tail[0].event_id}, snapshot is at {snap.version}"
            )
        result = replay(tail, snap.created_from, start=snap)
        return result.state, events


class HabitatService:
    """The single-writer core shared by the HTTP handler and the tick thread."""

    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        self.lexicon = load_lexicon(config.lexicon_paths)
        self.store = HabitatStore(config.data_dir)
        self.state, self.events = self.store.recover(config.descriptor())
        if self.store.latest_snapshot() is None:
            self.store.write_snapshot(self.state)  # persist genesis
        self.store.open_log()
        self._lock = threading.Lock()
        self._history: deque = deque(maxlen=config.metrics_window)
        self._published: dict = {}
        self._since_snapshot = 0
        self._publish()

    # -- mutation path (single writer) --------------------------------

    def submit_move(self, user: str, object_id: str, from_pos, to_pos, expected_version: int) -> dict:
        with self._lock:
            event = MoveEvent(
                event_id=self.state.version + 1,
                user=user,
                object_id=object_id,
                from_pos=tuple(from_pos),
                to_pos=tuple(to_pos),
                expected_version=expected_version,
                timestamp_ms=int(time.time() * 1000),
            )
            self._apply_and_log(event)
            return {"version": self.state.version, "event_id": event.event_id}

    def submit_tick(self, rho: float) -> dict:
        with self._lock:
            event = TickEvent(
                event_id=self.state.version + 1,
                rho=rho,
                timestamp_ms=int(time.time() * 1000),
            )
            self._apply_and_log(event)
            return {"version": self.state.version, "event_id": event.event_id}

    def _apply_and_log(self, event: Event) -> None:
        self._history.append(self.state.field.values.copy())
        try:
            apply_event(self.state, event)
        except HabitatError:
            self._history.pop()
            raise
        self.store.append(event)
        self.events.append(event)
        self._since_snapshot += 1
        if self._since_snapshot >= self.config.snapshot_every:
            self.store.write_snapshot(self.state)
            self._since_snapshot = 0
        self._publish()

    def _publish(self) -> None:
        state = self.state
        self._published = {
            "dims": {"width": state.dims.width, "height": state.dims.height},
            "version": state.version,
            "objects": [
                {"id": o.id, "glyph": o.glyph, "x": o.pos[0], "y": o.pos[1]}
                for o in sorted(state.objects.values(), key=lambda o: o.id)
            ],
            "field": [float(v) for v in state.field.values.ravel()],
        }

    # -- read path (lock-free on the published snapshot) --------------

    def habitat_payload(self) -> dict:
        return self._published

    def events_since(self, since: int) -> dict:
        with self._lock:
            records = [event_to_record(e) for e in self.events if e.event_id > since]
        return {"events": records}

    def metrics_payload(self) -> dict:
        with self._lock:
            metrics = consensus_metrics(self.state, list(self._history))
        return {
            "letter_cluster_count": metrics.letter_cluster_count,
            "pheromone_entropy": metrics.pheromone_entropy,
            "resistance": metrics.resistance,
        }

    def words_payload(self) -> dict:
        with self._lock:
            hits = detect_words(self.state, self.lexicon)
        return {
            "words": [
                {"word": h.word, "cells": [list(c) for c in h.cells], "direction": h.direction}
                for h in hits
            ]
        }

    def shutdown(self) -> None:
        with self._lock:
            self.store.write_snapshot(self.state)
            self.store.close()


ERROR_STATUS = {
    "VersionConflict": 409,
    "CellOccupied": 409,
    "ObjectNotAtFrom": 409,
    "UnknownObject": 404,
    "RhoOutOfRange": 400,
}


class _Handler(BaseHTTPRequestHandler):
    service: HabitatService  # set by make_server

    def do_GET(self) -> None:
        url = urlparse(self.path)
        if url.path == "/habitat":
            self._json(200, self.service.habitat_payload())
        elif url.path == "/events":
            query = parse_qs(url.query)
            try:
                since = int(query.get("since", ["0"])[0])
            except ValueError:
                self._json(400, {"code": "BadRequest", "message": "since must be an integer"})
                return
            self._json(200, self.service.events_since(since))
        elif url.path == "/metrics":
            self._json(200, self.service.metrics_payload())
        elif url.path == "/words":
            self._json(200, self.service.words_payload())
        else:
            self._json(404, {"code": "NotFound", "message": f"no route {url.path}"})

    def do_POST(self) -> None:
        url = urlparse(self.path)
        if url.path != "/moves":
            self._json(404, {"code": "NotFound", "message": f"no route {url.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._json(400, {"code": "BadRequest", "message": "body is not valid JSON"})
            return
        try:
            user = str(body["user"])
            object_id = str(body["object_id"])
            from_pos = tuple(int(v) for v in body["from"])
            to_pos = tuple(int(v) for v in body["to"])
            expected = int(body["expected_version"])
            if len(from_pos) != 2 or len(to_pos) != 2:
                raise ValueError("from/to must be [x, y]")
        except (KeyError, TypeError, ValueError) as exc:
            missing = exc.args[0] if isinstance(exc, KeyError) else exc
            self._json(400, {"code": "BadRequest", "message": f"bad move body: {missing}"})
            return
        try:
            result = self.service.submit_move(user, object_id, from_pos, to_pos, expected)
        except HabitatError as exc:
            self._json(
                ERROR_STATUS.get(exc.code, 400), {"code": exc.code, "message": str(exc)}
            )
            return
        self._json(200, result)

    def _json(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args) -> None:  # quiet by default
        pass


class TickScheduler(threading.Thread):
    """Posts evaporation TickEvents through the same single-writer path."""

    def __init__(self, service: HabitatService, interval_s: float, rho: float) -> None:
        super().__init__(daemon=True, name="habitat-tick")
        self.service = service
        self.interval_s = interval_s
        self.rho = rho
        self._stop = threading.Event()

    def run(self) -> None:
        while not self._stop.wait(self.interval_s):
            try:
                self.service.submit_tick(self.rho)
            except HabitatError:
                pass

    def stop(self) -> None:
        self._stop.set()


def make_server(config: ServiceConfig) -> tuple[ThreadingHTTPServer, HabitatService]:
    service = HabitatService(config)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    try:
        server = ThreadingHTTPServer((config.host, config.port), handler)
    except OSError as exc:
        raise OSError(f"cannot bind {config.host}:{config.port}: {exc}") from exc
    return server, service


def serve_forever(config: ServiceConfig) -> None:
    """Run until SIGTERM/SIGINT; flushes a final snapshot on the way out."""
    import signal

    server, service = make_server(config)
    scheduler = None
    if config.tick_interval_s > 0:
        scheduler = TickScheduler(service, config.tick_interval_s, config.tick_rho)
        scheduler.start()

    def handle_signal(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, handle_signal)
    signal.signal(signal.SIGINT, handle_signal)
    try:
        server.serve_forever()
    finally:
        if scheduler is not None:
            scheduler.stop()
        service.shutdown()
        server.server_close()
