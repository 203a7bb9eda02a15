"""Decision oracles: the scripted stand-in and the remote JSON client.

An oracle turns a request (serialized topological map, target class, and a
per-heading panorama summary) into a decision: the next topological node to
favor, a preferred heading, and whether the target looks visible. The
scripted oracle is a deterministic pure function used in tests and offline
runs; the remote client speaks a small JSON-over-HTTP protocol and falls
back to the scripted rules when the endpoint misbehaves.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from .errors import OracleInvariantError, OracleProtocolError, OracleTransportError
from .topo_graph import parse_topo_text


@dataclass(frozen=True)
class HeadingSummary:
    """What one panorama heading shows: visible object classes and how much
    free depth lies that way (mean over pixels, missing returns counted at
    the depth ceiling)."""

    heading: int
    classes: tuple
    free_depth: float


@dataclass(eq=False)
class OracleRequest:
    topo_text: str
    target: str
    panorama: list          # HeadingSummary per heading, covering 0..n-1 once
    history: list           # visited node ids, in order

    def __post_init__(self):
        headings = sorted(h.heading for h in self.panorama)
        if headings != list(range(len(self.panorama))):
            raise ValueError("panorama headings must cover 0..n-1 exactly once")
        self.panorama = sorted(self.panorama, key=lambda h: h.heading)

    @property
    def num_headings(self) -> int:
        return len(self.panorama)


@dataclass(frozen=True)
class OracleDecision:
    next_node: int
    direction: int
    found: bool


def _load_room_table() -> dict:
    with resources.files("semnav").joinpath("data/room_classes.json").open("r") as fh:
        return json.load(fh)


ROOM_TABLE = _load_room_table()


def classify_room(panorama, table: dict | None = None) -> str:
    """Majority vote of the visible classes through a class->room lookup.

    Counts repeated sightings across headings; ties break alphabetically;
    no mapped class visible yields "unknown".
    """
    table = ROOM_TABLE if table is None else table
    votes = Counter()
    for heading in panorama:
        for cls in heading.classes:
            room = table.get(cls)
            if room:
                votes[room] += 1
    if not votes:
        return "unknown"
    best = max(votes.values())
    return min(room for room, count in votes.items() if count == best)


def scripted_decide(request: OracleRequest) -> OracleDecision:
    """Deterministic decision rules.

    * found: the target class is visible at any heading.
    * direction: the lowest heading showing the target, else the heading with
      the greatest mean free depth (ties to the lowest index).
    * next node: the current node while it still has frontiers nearby, else
      the node with the most frontiers, preferring unvisited then
      least-recently-visited nodes, then the lowest id.
    """
    target_headings = [h.heading for h in request.panorama if request.target in h.classes]
    found = bool(target_headings)
    if found:
        direction = min(target_headings)
    else:
        direction = max(request.panorama, key=lambda h: (h.free_depth, -h.heading)).heading
    parsed = parse_topo_text(request.topo_text)
    nodes = parsed.nodes
    current = parsed.current
    next_node = current if current is not None else 0
    if nodes:
        current_node = next((n for n in nodes if n.id == current), None)
        if current_node is None or current_node.frontier_count == 0:
            def last_visit(node_id):
                for idx in range(len(request.history) - 1, -1, -1):
                    if request.history[idx] == node_id:
                        return idx
                return -1

            next_node = min(
                nodes, key=lambda n: (-n.frontier_count, last_visit(n.id), n.id)
            ).id
    return OracleDecision(next_node=next_node, direction=direction, found=found)


class ScriptedOracle:
    """Pure-function oracle; same request always yields the same decision."""

    def decide(self, request: OracleRequest) -> OracleDecision:
        return scripted_decide(request)


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    api_key: str = ""
    timeout: float = 30.0
    retries: int = 2

    @staticmethod
    def from_env(environ=None) -> "EndpointConfig":
        env = os.environ if environ is None else environ
        return EndpointConfig(
            url=env.get("SEMNAV_ORACLE_URL", ""),
            api_key=env.get("SEMNAV_ORACLE_API_KEY", ""),
            timeout=float(env.get("SEMNAV_ORACLE_TIMEOUT", "30")),
            retries=int(env.get("SEMNAV_ORACLE_RETRIES", "2")),
        )


def request_to_wire(request: OracleRequest) -> dict:
    """The JSON wire form of a request."""
    return {
        "topo_text": request.topo_text,
        "target": request.target,
        "panorama": [
            {"heading": h.heading, "classes": list(h.classes), "free_depth": h.free_depth}
            for h in request.panorama
        ],
        "history": list(request.history),
    }


def _strict_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise OracleProtocolError(f"reply field {name!r} must be an integer")
    return value


def decision_from_wire(reply: dict, request: OracleRequest) -> OracleDecision:
    """Parse and validate a reply dict against the request invariants."""
    if not isinstance(reply, dict):
        raise OracleProtocolError("reply must be a JSON object")
    try:
        next_node = _strict_int(reply["next_node"], "next_node")
        direction = _strict_int(reply["direction"], "direction")
        found = _strict_int(reply["found"], "found")
    except KeyError as exc:
        raise OracleProtocolError(f"reply missing field {exc.args[0]!r}") from exc
    if found not in (0, 1):
        raise OracleProtocolError("reply field 'found' must be 0 or 1")
    if not 0 <= direction < request.num_headings:
        raise OracleInvariantError(
            f"direction {direction} outside 0..{request.num_headings - 1}"
        )
    node_ids = parse_topo_text(request.topo_text).node_ids()
    if node_ids and next_node not in node_ids:
        raise OracleInvariantError(f"next_node {next_node} not among {node_ids}")
    return OracleDecision(next_node=next_node, direction=direction, found=bool(found))


def remote_decide(request: OracleRequest, endpoint: EndpointConfig) -> OracleDecision:
    """One HTTP POST of the request; raises on transport/protocol failures."""
    payload = json.dumps(request_to_wire(request)).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    try:
        req = urllib.request.Request(endpoint.url, data=payload, headers=headers, method="POST")
        with urllib.request.urlopen(req, timeout=endpoint.timeout) as resp:
            body = resp.read()
    except (urllib.error.URLError, TimeoutError, ConnectionError, OSError, ValueError) as exc:
        raise OracleTransportError(f"oracle endpoint unreachable: {exc}") from exc
    try:
        reply = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise OracleProtocolError(f"malformed oracle reply: {exc}") from exc
    return decision_from_wire(reply, request)


class RemoteOracle:
    """JSON-over-HTTP oracle with retries and a scripted fallback.

    Transport, protocol, and invariant failures are retried up to
    endpoint.retries extra attempts; once exhausted the fallback answers, so
    the composed oracle is total.
    """

    def __init__(self, endpoint: EndpointConfig, fallback=None):
        self.endpoint = endpoint
        self.fallback = ScriptedOracle() if fallback is None else fallback
        self.failures = 0

    def decide(self, request: OracleRequest) -> OracleDecision:
        last_error = None
        for _ in range(self.endpoint.retries + 1):
            try:
                return remote_decide(request, self.endpoint)
            except (OracleTransportError, OracleProtocolError, OracleInvariantError) as exc:
                last_error = exc
        self.failures += 1
        if self.fallback is not None:
            return self.fallback.decide(request)
        raise last_error
