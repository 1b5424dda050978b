"""Event-sourced multi-user letter habitat.

A toroidal grid holds single-letter objects that humans move around;
each accepted move deposits pheromone at its destination and scheduled
ticks evaporate the whole field. State changes ONLY by applying events
(moves and ticks) in a single total order, so the append-only event log
is the source of truth: replaying it from genesis reproduces any
snapshot bit-exactly.

Optimistic concurrency: a move carries the version its client saw and
is rejected with a VersionConflict when stale. Rejected events never
touch state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .grid import Coord, PheromoneField, TorusDims, torus_wrap
from .metrics import pearson, shannon_entropy


class HabitatError(Exception):
    """Base for event-application failures; ``code`` mirrors the API error code."""

    code = "HabitatError"


class VersionConflictError(HabitatError):
    code = "VersionConflict"


class UnknownObjectError(HabitatError):
    code = "UnknownObject"


class ObjectNotAtFromError(HabitatError):
    code = "ObjectNotAtFrom"


class CellOccupiedError(HabitatError):
    code = "CellOccupied"


class RhoOutOfRangeError(HabitatError):
    code = "RhoOutOfRange"


class MalformedDocumentError(ValueError):
    """Snapshot document cannot be parsed back into a state."""


class CorruptLogError(ValueError):
    """Event log has a gap or an unparseable record."""


@dataclass(frozen=True)
class GenesisDescriptor:
    """Everything needed to rebuild the initial habitat deterministically."""

    dims: TorusDims
    letters: str
    seed: int
    deposit_amount: float = 1.0

    def __post_init__(self) -> None:
        if not self.letters:
            raise ValueError("genesis needs at least one letter")
        if not all("A" <= ch <= "Z" for ch in self.letters):
            raise ValueError("letters must be uppercase A-Z")
        if len(self.letters) > self.dims.cell_count:
            raise ValueError(
                f"{len(self.letters)} letters cannot fit on {self.dims.cell_count} cells"
            )
        if self.deposit_amount <= 0:
            raise ValueError("deposit_amount must be > 0")


@dataclass
class LetterObject:
    id: str
    glyph: str
    pos: Coord


@dataclass(frozen=True)
class MoveEvent:
    event_id: int
    user: str
    object_id: str
    from_pos: Coord
    to_pos: Coord
    expected_version: int
    timestamp_ms: int = 0


@dataclass(frozen=True)
class TickEvent:
    event_id: int
    rho: float
    timestamp_ms: int = 0


Event = MoveEvent | TickEvent


@dataclass(frozen=True)
class WordHit:
    word: str
    cells: tuple[Coord, ...]
    direction: str  # "right" or "down"


@dataclass
class HabitatState:
    dims: TorusDims
    objects: dict[str, LetterObject]
    field: PheromoneField
    version: int
    created_from: GenesisDescriptor
    occupied: dict[Coord, str] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.occupied:
            self.occupied = {obj.pos: oid for oid, obj in self.objects.items()}
        if len(self.occupied) != len(self.objects):
            raise ValueError("two objects share a cell")

    def copy(self) -> "HabitatState":
        return HabitatState(
            dims=self.dims,
            objects={oid: replace(obj) for oid, obj in self.objects.items()},
            field=self.field.copy(),
            version=self.version,
            created_from=self.created_from,
            occupied=dict(self.occupied),
        )


def genesis(descriptor: GenesisDescriptor) -> HabitatState:
    """Seeded initial layout: the letter multiset scattered over distinct cells."""
    rng = np.random.default_rng(descriptor.seed)
    dims = descriptor.dims
    chosen = rng.choice(dims.cell_count, size=len(descriptor.letters), replace=False)
    objects: dict[str, LetterObject] = {}
    for i, (glyph, cell) in enumerate(zip(descriptor.letters, chosen)):
        pos = (int(cell) % dims.width, int(cell) // dims.width)
        objects[f"L{i}"] = LetterObject(id=f"L{i}", glyph=glyph, pos=pos)
    return HabitatState(
        dims=dims,
        objects=objects,
        field=PheromoneField.zeros(dims),
        version=0,
        created_from=descriptor,
    )


def apply_move(state: HabitatState, event: MoveEvent, deposit_amount: float | None = None) -> None:
    """Apply one move in place, or raise (state untouched on every error path).

    Success needs the client's expected_version to match, the object to
    be where the client saw it, and the wrapped target cell to be free.
    """
    if event.expected_version != state.version:
        raise VersionConflictError(
            f"expected version {event.expected_version}, habitat is at {state.version}"
        )
    obj = state.objects.get(event.object_id)
    if obj is None:
        raise UnknownObjectError(f"no object {event.object_id!r}")
    from_pos = torus_wrap(event.from_pos, state.dims)
    if obj.pos != from_pos:
        raise ObjectNotAtFromError(f"{event.object_id} is at {obj.pos}, not {from_pos}")
    to_pos = torus_wrap(event.to_pos, state.dims)
    if to_pos in state.occupied:
        raise CellOccupiedError(f"cell {to_pos} holds {state.occupied[to_pos]}")
    amount = state.created_from.deposit_amount if deposit_amount is None else deposit_amount
    del state.occupied[obj.pos]
    obj.pos = to_pos
    state.occupied[to_pos] = obj.id
    state.field.deposit(to_pos, amount)
    state.version += 1


def apply_tick(state: HabitatState, event: TickEvent) -> None:
    """Evaporate the field once and bump the version."""
    if not 0.0 <= event.rho <= 1.0:
        raise RhoOutOfRangeError(f"rho must be in [0, 1], got {event.rho}")
    state.field.evaporate(event.rho)
    state.version += 1


def apply_event(state: HabitatState, event: Event) -> None:
    if isinstance(event, MoveEvent):
        apply_move(state, event)
    elif isinstance(event, TickEvent):
        apply_tick(state, event)
    else:
        raise TypeError(f"not an event: {event!r}")


def detect_words(state: HabitatState, lexicon: set[str]) -> list[WordHit]:
    """Find lexicon words written as complete maximal glyph runs.

    Runs are scanned left-to-right and top-to-bottom and never wrap
    across the torus seam; a word only counts when it fills its whole
    maximal run (no substrings). Output order is row-major by start
    cell, Right before Down.
    """
    glyph_at: dict[Coord, str] = {
        obj.pos: obj.glyph for obj in state.objects.values()
    }
    hits: list[tuple[int, int, int, WordHit]] = []
    w, h = state.dims.width, state.dims.height

    for y in range(h):
        for cells in _maximal_runs([(x, y) for x in range(w)], glyph_at):
            word = "".join(glyph_at[c] for c in cells)
            if word in lexicon:
                hits.append((cells[0][1], cells[0][0], 0, WordHit(word, tuple(cells), "right")))
    for x in range(w):
        for cells in _maximal_runs([(x, y) for y in range(h)], glyph_at):
            word = "".join(glyph_at[c] for c in cells)
            if word in lexicon:
                hits.append((cells[0][1], cells[0][0], 1, WordHit(word, tuple(cells), "down")))
    hits.sort(key=lambda rec: rec[:3])
    return [rec[3] for rec in hits]


def _maximal_runs(line: list[Coord], glyph_at: dict[Coord, str]):
    run: list[Coord] = []
    for c in line:
        if c in glyph_at:
            run.append(c)
        elif run:
            yield run
            run = []
    if run:
        yield run


@dataclass(frozen=True)
class ConsensusMetrics:
    letter_cluster_count: int
    pheromone_entropy: float
    resistance: float | None


def consensus_metrics(
    state: HabitatState, history: Sequence[np.ndarray] = ()
) -> ConsensusMetrics:
    """Cluster count, field entropy, and correlation with the oldest
    field snapshot in ``history`` (None there when undefined)."""
    resistance = None
    if len(history):
        resistance = pearson(state.field.values, history[0])
    return ConsensusMetrics(
        letter_cluster_count=_cluster_count(state),
        pheromone_entropy=shannon_entropy(state.field.values),
        resistance=resistance,
    )


def _cluster_count(state: HabitatState) -> int:
    # connected components of occupied cells, toroidal 4-adjacency
    w, h = state.dims.width, state.dims.height
    unseen = set(state.occupied)
    count = 0
    while unseen:
        count += 1
        stack = [unseen.pop()]
        while stack:
            x, y = stack.pop()
            for nxt in (((x + 1) % w, y), ((x - 1) % w, y), (x, (y + 1) % h), (x, (y - 1) % h)):
                if nxt in unseen:
                    unseen.remove(nxt)
                    stack.append(nxt)
    return count


SNAPSHOT_FORMAT = "habitat-snapshot-v1"


def snapshot(state: HabitatState) -> dict:
    """Portable JSON-able document; floats survive round-trips exactly."""
    return {
        "format": SNAPSHOT_FORMAT,
        "dims": {"width": state.dims.width, "height": state.dims.height},
        "version": state.version,
        "objects": [
            {"id": obj.id, "glyph": obj.glyph, "x": obj.pos[0], "y": obj.pos[1]}
            for obj in sorted(state.objects.values(), key=lambda o: o.id)
        ],
        "field": [float(v) for v in state.field.values.ravel()],
        "created_from": {
            "dims": {"width": state.created_from.dims.width, "height": state.created_from.dims.height},
            "letters": state.created_from.letters,
            "seed": state.created_from.seed,
            "deposit_amount": state.created_from.deposit_amount,
        },
    }


def load_snapshot(doc: dict) -> HabitatState:
    try:
        if doc["format"] != SNAPSHOT_FORMAT:
            raise MalformedDocumentError(f"unknown snapshot format {doc.get('format')!r}")
        dims = TorusDims(doc["dims"]["width"], doc["dims"]["height"])
        objects = {
            o["id"]: LetterObject(id=o["id"], glyph=o["glyph"], pos=(o["x"], o["y"]))
            for o in doc["objects"]
        }
        values = np.asarray(doc["field"], dtype=np.float64).reshape(dims.height, dims.width)
        created = doc["created_from"]
        descriptor = GenesisDescriptor(
            dims=TorusDims(created["dims"]["width"], created["dims"]["height"]),
            letters=created["letters"],
            seed=created["seed"],
            deposit_amount=created["deposit_amount"],
        )
        return HabitatState(
            dims=dims,
            objects=objects,
            field=PheromoneField(dims, values),
            version=doc["version"],
            created_from=descriptor,
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise MalformedDocumentError(f"bad snapshot document: {exc}") from exc


def state_equal(a: HabitatState, b: HabitatState) -> bool:
    return (
        a.dims == b.dims
        and a.version == b.version
        and a.created_from == b.created_from
        and {oid: (o.glyph, o.pos) for oid, o in a.objects.items()}
        == {oid: (o.glyph, o.pos) for oid, o in b.objects.items()}
        and np.array_equal(a.field.values, b.field.values)
    )


def event_to_record(event: Event) -> dict:
    if isinstance(event, MoveEvent):
        return {
            "event_id": event.event_id,
            "type": "move",
            "user": event.user,
            "object_id": event.object_id,
            "from": list(event.from_pos),
            "to": list(event.to_pos),
            "expected_version": event.expected_version,
            "ts": event.timestamp_ms,
        }
    if isinstance(event, TickEvent):
        return {
            "event_id": event.event_id,
            "type": "tick",
            "rho": event.rho,
            "ts": event.timestamp_ms,
        }
    raise TypeError(f"not an event: {event!r}")


def event_from_record(record: dict) -> Event:
    try:
        kind = record["type"]
        if kind == "move":
            return MoveEvent(
                event_id=int(record["event_id"]),
                user=record["user"],
                object_id=record["object_id"],
                from_pos=tuple(record["from"]),
                to_pos=tuple(record["to"]),
                expected_version=int(record["expected_version"]),
                timestamp_ms=int(record.get("ts", 0)),
            )
        if kind == "tick":
            return TickEvent(
                event_id=int(record["event_id"]),
                rho=float(record["rho"]),
                timestamp_ms=int(record.get("ts", 0)),
            )
        raise CorruptLogError(f"unknown event type {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CorruptLogError):
            raise
        raise CorruptLogError(f"unparseable event record: {record!r}") from exc


@dataclass
class ReplayResult:
    state: HabitatState
    applied: int
    rejected: list[int]  # event_ids of skipped (invalid) moves


def replay(
    events: Iterable[Event], descriptor: GenesisDescriptor, start: HabitatState | None = None
) -> ReplayResult:
    """Fold the ordered event log from genesis (or ``start``).

    Rejected moves are recorded and skipped; gaps in event_id raise
    CorruptLogError. The resulting state is bit-identical to what the
    live single-writer produced, because application is deterministic.
    """
    state = genesis(descriptor) if start is None else start
    expected_id = None
    applied = 0
    rejected: list[int] = []
    for event in events:
        if expected_id is not None and event.event_id != expected_id:
            raise CorruptLogError(
                f"event_id gap: expected {expected_id}, got {event.event_id}"
            )
        expected_id = event.event_id + 1
        try:
            apply_event(state, event)
            applied += 1
        except HabitatError:
            rejected.append(event.event_id)
    return ReplayResult(state=state, applied=applied, rejected=rejected)


def read_event_log(path) -> list[Event]:
    """Parse a JSON-lines event log; unparseable lines raise CorruptLogError."""
    events: list[Event] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptLogError(f"line {lineno}: not JSON: {exc}") from exc
            events.append(event_from_record(record))
    return events
