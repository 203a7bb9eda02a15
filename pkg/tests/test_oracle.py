import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from semnav.errors import OracleInvariantError, OracleProtocolError, OracleTransportError
from semnav.oracle import (
    EndpointConfig,
    HeadingSummary,
    OracleDecision,
    OracleRequest,
    RemoteOracle,
    ScriptedOracle,
    classify_room,
    decision_from_wire,
    remote_decide,
    request_to_wire,
    scripted_decide,
)


def heading(idx, classes=(), depth=5.0):
    return HeadingSummary(heading=idx, classes=tuple(classes), free_depth=depth)


def topo_text(nodes, history, current):
    lines = [
        f"NODE {nid} pos=({x:.2f},{y:.2f}) room={room} objects=[] frontiers={f}"
        for nid, x, y, room, f in nodes
    ]
    lines.append("HISTORY " + ",".join(map(str, history)) if history else "HISTORY")
    lines.append(f"CURRENT {current}")
    lines.append("TARGET bed")
    return "\n".join(lines) + "\n"


def request(nodes, history, current, panorama, target="bed"):
    return OracleRequest(
        topo_text=topo_text(nodes, history, current),
        target=target,
        panorama=panorama,
        history=list(history),
    )


class TestScriptedDecide:
    def test_target_visible_sets_found_and_direction(self):
        req = request(
            [(1, 0, 0, "hallway", 2)], [1], 1,
            [heading(i, classes=("bed",) if i == 3 else ()) for i in range(12)],
        )
        decision = scripted_decide(req)
        assert decision.found
        assert decision.direction == 3

    def test_lowest_target_heading_wins(self):
        req = request(
            [(1, 0, 0, "hallway", 2)], [1], 1,
            [heading(i, classes=("bed",) if i in (2, 7) else ()) for i in range(12)],
        )
        assert scripted_decide(req).direction == 2

    def test_max_frontier_node_when_current_exhausted(self):
        req = request(
            [(1, 0, 0, "a", 0), (2, 3, 0, "b", 4)], [1], 1,
            [heading(i) for i in range(12)],
        )
        assert scripted_decide(req).next_node == 2

    def test_current_with_frontiers_is_kept(self):
        req = request(
            [(1, 0, 0, "a", 1), (2, 3, 0, "b", 4)], [1], 1,
            [heading(i) for i in range(12)],
        )
        assert scripted_decide(req).next_node == 1

    def test_no_frontiers_goes_least_recently_visited(self):
        req = request(
            [(1, 0, 0, "a", 0), (2, 3, 0, "b", 0), (3, 6, 0, "c", 0)],
            [1, 3, 2, 3], 3,
            [heading(i) for i in range(12)],
        )
        # all frontier counts zero; node 1 was visited longest ago... but an
        # unvisited node would win outright
        assert scripted_decide(req).next_node == 1

    def test_unvisited_preferred_over_visited(self):
        req = request(
            [(1, 0, 0, "a", 0), (2, 3, 0, "b", 0)], [1], 1,
            [heading(i) for i in range(12)],
        )
        assert scripted_decide(req).next_node == 2

    def test_deepest_heading_when_target_hidden(self):
        pano = [heading(i, depth=2.0) for i in range(12)]
        pano[7] = heading(7, depth=9.0)
        req = request([(1, 0, 0, "a", 1)], [1], 1, pano)
        decision = scripted_decide(req)
        assert not decision.found
        assert decision.direction == 7

    def test_depth_tie_takes_lowest_index(self):
        pano = [heading(i, depth=5.0) for i in range(12)]
        req = request([(1, 0, 0, "a", 1)], [1], 1, pano)
        assert scripted_decide(req).direction == 0

    def test_determinism(self):
        req = request(
            [(1, 0, 0, "a", 1), (2, 1, 1, "b", 3)], [1, 2], 2,
            [heading(i, depth=float(i)) for i in range(12)],
        )
        assert scripted_decide(req) == scripted_decide(req)
        assert ScriptedOracle().decide(req) == scripted_decide(req)

    def test_randomized_against_rule_oracle(self, rng):
        for _ in range(200):
            n_nodes = int(rng.integers(1, 6))
            nodes = [
                (k + 1, float(rng.uniform(0, 5)), float(rng.uniform(0, 5)), "r", int(rng.integers(0, 4)))
                for k in range(n_nodes)
            ]
            history = [int(rng.integers(1, n_nodes + 1)) for _ in range(int(rng.integers(1, 6)))]
            current = history[-1]
            pano = []
            for i in range(8):
                classes = ["bed"] if rng.random() < 0.15 else []
                pano.append(heading(i, classes=classes, depth=float(rng.integers(1, 8))))
            req = request(nodes, history, current, pano)
            got = scripted_decide(req)

            # independent re-implementation of the three rules
            target_headings = [h.heading for h in pano if "bed" in h.classes]
            exp_found = bool(target_headings)
            if exp_found:
                exp_dir = min(target_headings)
            else:
                best, exp_dir = -1.0, 0
                for h in pano:
                    if h.free_depth > best:
                        best, exp_dir = h.free_depth, h.heading
            by_id = {n[0]: n for n in nodes}
            if by_id[current][4] > 0:
                exp_node = current
            else:
                def last_visit(nid):
                    return max((i for i, h in enumerate(history) if h == nid), default=-1)

                exp_node = min(by_id, key=lambda nid: (-by_id[nid][4], last_visit(nid), nid))
            assert got == OracleDecision(next_node=exp_node, direction=exp_dir, found=exp_found)


class TestClassifyRoom:
    def test_lookup_hit(self):
        assert classify_room([heading(0, classes=("bed", "lamp"))]) == "bedroom"

    def test_empty_is_unknown(self):
        assert classify_room([heading(0), heading(1)]) == "unknown"

    def test_majority_across_headings(self):
        pano = [heading(0, classes=("oven", "sofa")), heading(1, classes=("oven",))]
        assert classify_room(pano) == "kitchen"

    def test_tie_breaks_alphabetically(self):
        pano = [heading(0, classes=("oven", "sofa"))]
        # kitchen and living_room tie at one vote each
        assert classify_room(pano) == "kitchen"

    def test_custom_table(self):
        pano = [heading(0, classes=("anvil",))]
        assert classify_room(pano, table={"anvil": "forge"}) == "forge"


class TestWireFormat:
    def test_request_wire_shape(self):
        req = request([(1, 0, 0, "a", 1)], [1], 1, [heading(0, ("bed",), 2.5), heading(1)])
        wire = request_to_wire(req)
        assert set(wire) == {"topo_text", "target", "panorama", "history"}
        assert wire["panorama"][0] == {"heading": 0, "classes": ["bed"], "free_depth": 2.5}
        assert wire["history"] == [1]

    def test_wellformed_reply_parses(self):
        req = request([(1, 0, 0, "a", 1), (2, 1, 1, "b", 0)], [1], 1, [heading(i) for i in range(6)])
        decision = decision_from_wire({"next_node": 2, "direction": 5, "found": 0}, req)
        assert decision == OracleDecision(next_node=2, direction=5, found=False)

    def test_direction_out_of_bounds(self):
        req = request([(1, 0, 0, "a", 1)], [1], 1, [heading(i) for i in range(12)])
        with pytest.raises(OracleInvariantError):
            decision_from_wire({"next_node": 1, "direction": 99, "found": 0}, req)

    def test_unknown_node_id(self):
        req = request([(1, 0, 0, "a", 1)], [1], 1, [heading(i) for i in range(12)])
        with pytest.raises(OracleInvariantError):
            decision_from_wire({"next_node": 7, "direction": 0, "found": 0}, req)

    @pytest.mark.parametrize(
        "reply",
        [
            {"next_node": 1, "direction": 0},
            {"next_node": 1, "direction": 0, "found": 2},
            {"next_node": 1, "direction": 0, "found": True},
            {"next_node": "x", "direction": 0, "found": 0},
            [],
        ],
    )
    def test_malformed_replies(self, reply):
        req = request([(1, 0, 0, "a", 1)], [1], 1, [heading(i) for i in range(12)])
        with pytest.raises(OracleProtocolError):
            decision_from_wire(reply, req)

    def test_heading_coverage_invariant(self):
        with pytest.raises(ValueError):
            OracleRequest(topo_text="", target="bed", panorama=[heading(0), heading(2)], history=[])


class _Handler(BaseHTTPRequestHandler):
    script = []  # list of (status, body bytes or "sleep")

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        status, body = self.script.pop(0) if self.script else (200, b"{}")
        if body == b"sleep":
            time.sleep(1.0)
            body = b"{}"
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_oracle():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", _Handler
    finally:
        server.shutdown()
        _Handler.script = []


def simple_request():
    return request([(1, 0, 0, "a", 1)], [1], 1, [heading(i) for i in range(4)])


class TestRemoteOracle:
    def test_good_reply(self, http_oracle):
        url, handler = http_oracle
        handler.script = [(200, json.dumps({"next_node": 1, "direction": 2, "found": 1}).encode())]
        decision = remote_decide(simple_request(), EndpointConfig(url=url, timeout=5))
        assert decision == OracleDecision(next_node=1, direction=2, found=True)

    def test_truncated_json_is_protocol_error(self, http_oracle):
        url, handler = http_oracle
        handler.script = [(200, b'{"next_node": 1, "direc')]
        with pytest.raises(OracleProtocolError):
            remote_decide(simple_request(), EndpointConfig(url=url, timeout=5))

    def test_unreachable_is_transport_error(self):
        with pytest.raises(OracleTransportError):
            remote_decide(simple_request(), EndpointConfig(url="http://127.0.0.1:1/x", timeout=0.5))

    def test_retries_then_success(self, http_oracle):
        url, handler = http_oracle
        good = json.dumps({"next_node": 1, "direction": 0, "found": 0}).encode()
        handler.script = [(200, b"garbage"), (200, good)]
        oracle = RemoteOracle(EndpointConfig(url=url, timeout=5, retries=2))
        assert oracle.decide(simple_request()) == OracleDecision(1, 0, False)
        assert oracle.failures == 0

    def test_fallback_after_exhausted_retries(self, http_oracle):
        url, handler = http_oracle
        handler.script = [(200, b"bad")] * 3
        oracle = RemoteOracle(EndpointConfig(url=url, timeout=5, retries=2))
        req = simple_request()
        assert oracle.decide(req) == scripted_decide(req)  # fallback totality
        assert oracle.failures == 1

    def test_timeout_falls_back(self, http_oracle):
        url, handler = http_oracle
        handler.script = [(200, b"sleep")]
        oracle = RemoteOracle(EndpointConfig(url=url, timeout=0.2, retries=0))
        req = simple_request()
        assert oracle.decide(req) == scripted_decide(req)


def test_endpoint_from_env():
    env = {
        "SEMNAV_ORACLE_URL": "http://example.test/decide",
        "SEMNAV_ORACLE_API_KEY": "k",
        "SEMNAV_ORACLE_TIMEOUT": "7.5",
        "SEMNAV_ORACLE_RETRIES": "1",
    }
    cfg = EndpointConfig.from_env(env)
    assert cfg == EndpointConfig(url="http://example.test/decide", api_key="k", timeout=7.5, retries=1)
