import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from readi.errors import GatewayError, RenderError
from readi.gateway import (
    DEFAULT_ROLES,
    ROLE_NAMES,
    SENTINEL,
    SHOT_PROFILES,
    Gateway,
    HttpBackend,
    ScriptedBackend,
    Transcript,
    complete,
    load_transcripts,
    render_prompt,
)
from readi.prompts import TEMPLATES

from conftest import AIRPORT, AIRPORT_QUESTION

FEEDBACK = (
    "Error Message\n1. <compound node> in the end. (path from \"France\")\n"
    "Instantiation Context\nInstantiate Paths: France --location.location.adjoin--> compound node\n"
    "Candidate Relations\n['location.adjoining_relationship.country']"
)


def test_default_shot_counts():
    counts = {n: DEFAULT_ROLES[n].shot_count for n in ROLE_NAMES}
    assert counts == {
        "kg_generate": 6, "kg_edit": 5, "kg_reason": 5,
        "table_generate": 7, "table_edit": 2, "table_reason": 7,
    }
    assert SHOT_PROFILES["mqa"]["kg_edit"].shot_count == 3


def test_reason_prompt_contains_evidence():
    prompt = render_prompt(
        DEFAULT_ROLES["kg_reason"],
        {"question": AIRPORT_QUESTION, "candidates": "Germany",
         "triples": "(France, adjoin, compound node)\n(compound node, country, Germany)"},
    )
    assert "(France, adjoin, compound node)" in prompt
    assert prompt.endswith("A:")


def test_edit_prompt_contains_feedback_blocks():
    prompt = render_prompt(
        DEFAULT_ROLES["kg_edit"],
        {"question": AIRPORT_QUESTION, "previous_path": "Path: {}", "feedback": FEEDBACK},
    )
    assert "Error Message" in prompt and "Candidate Relations" in prompt
    assert "Corrected Path" in prompt


@pytest.mark.parametrize("role", ROLE_NAMES)
def test_empty_slots_is_render_error(role):
    with pytest.raises(RenderError, match="missing slot"):
        render_prompt(DEFAULT_ROLES[role], {})


def test_missing_slot_is_named():
    with pytest.raises(RenderError, match="'triples'"):
        render_prompt(DEFAULT_ROLES["kg_reason"], {"question": "q", "candidates": "c"})


@pytest.mark.parametrize("role", ROLE_NAMES)
def test_render_is_deterministic_and_uses_shot_count(role):
    r = DEFAULT_ROLES[role]
    tmpl = TEMPLATES[r.template_id]
    slots = {s: f"<{s}>" for s in tmpl.slots}
    a = render_prompt(r, slots)
    assert a == render_prompt(r, slots)
    assert a.startswith(tmpl.instruction)
    for demo in tmpl.demonstrations[: r.shot_count]:
        assert demo in a
    for s in tmpl.slots:
        assert f"<{s}>" in a


def test_scripted_replay_in_order_and_isolated_by_role():
    t = Transcript({"kg_generate": ["Path: {a}", "Path: {b}"], "kg_reason": ["{x}"]})
    b = ScriptedBackend(t)
    assert b.complete("kg_generate", "ignored", 0.3) == "Path: {a}"
    assert b.complete("kg_reason", "ignored", 0.3) == "{x}"
    assert b.complete("kg_generate", "ignored", 0.9) == "Path: {b}"
    assert t.remaining("kg_generate") == 0


def test_strict_underflow_is_gateway_error():
    with pytest.raises(GatewayError, match="kg_edit"):
        complete(DEFAULT_ROLES["kg_edit"], "p", ScriptedBackend(Transcript({})))


def test_lenient_underflow_returns_sentinel():
    assert ScriptedBackend(Transcript({}, strict=False)).complete("kg_edit", "p", 0.3) == SENTINEL


def test_unknown_role_in_transcript():
    with pytest.raises(ValueError):
        Transcript({"planner": ["x"]})


def test_transcript_round_trips():
    t = Transcript({"kg_generate": ["a"], "kg_reason": ["b"]})
    assert Transcript.from_dict(t.to_dict()).to_dict() == t.to_dict()
    calls = [{"role": "kg_generate", "response": "a"}, {"role": "kg_reason", "response": "b"}]
    assert Transcript.from_calls(calls).to_dict() == t.to_dict()


def test_load_transcripts_layouts():
    shared, per = load_transcripts(AIRPORT / "transcript.json")
    assert shared is not None and per == {}
    shared, per = load_transcripts(AIRPORT.parent / "tableqa" / "transcript.json")
    assert shared is None and set(per) == {"lakes-deeper", "usl-last-year"}


def test_gateway_call_records_prompt_and_response():
    gw = Gateway(ScriptedBackend(Transcript({"kg_reason": ["{Germany}"]})))
    call = gw.call("kg_reason", {"question": "q", "candidates": "c", "triples": "t"})
    assert call.role == "kg_reason" and call.response == "{Germany}"
    assert "Q: q" in call.prompt


class _Stub(BaseHTTPRequestHandler):
    script: list = []
    seen: list = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((self.path, dict(self.headers), body))
        status, payload = type(self).script.pop(0)
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    _Stub.script, _Stub.seen = [], []
    server = HTTPServer(("127.0.0.1", 0), _Stub)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/v1", _Stub
    server.shutdown()
    server.server_close()


def canned(text):
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


def test_http_backend_extracts_first_message(stub_server, monkeypatch):
    url, stub = stub_server
    monkeypatch.setenv("READI_API_KEY", "sekret")
    stub.script = [(200, canned("Path: {\"France\": [France → border]}"))]
    b = HttpBackend(url, model="m1", backoff=0.0)
    assert b.complete("kg_generate", "the prompt", 0.3) == 'Path: {"France": [France → border]}'
    path, headers, body = stub.seen[0]
    assert path == "/v1/chat/completions"
    assert headers["Authorization"] == "Bearer sekret"
    assert body["model"] == "m1" and body["temperature"] == 0.3
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert body["messages"][1]["content"] == "the prompt"


def test_http_backend_retries_transient_failures(stub_server):
    url, stub = stub_server
    stub.script = [(503, {}), (429, {}), (200, canned("ok"))]
    assert HttpBackend(url, api_key="", max_retries=3, backoff=0.0).complete("kg_reason", "p", 0.3) == "ok"
    assert len(stub.seen) == 3


def test_http_backend_gives_up(stub_server):
    url, stub = stub_server
    stub.script = [(500, {}), (500, {})]
    with pytest.raises(GatewayError, match="giving up"):
        HttpBackend(url, api_key="", max_retries=1, backoff=0.0).complete("kg_reason", "p", 0.3)


def test_http_backend_client_error_is_not_retried(stub_server):
    url, stub = stub_server
    stub.script = [(401, {"error": "no"})]
    with pytest.raises(GatewayError, match="401"):
        HttpBackend(url, api_key="", backoff=0.0).complete("kg_reason", "p", 0.3)
    assert len(stub.seen) == 1


def test_http_backend_malformed_body(stub_server):
    url, stub = stub_server
    stub.script = [(200, {"choices": []})]
    with pytest.raises(GatewayError, match="malformed"):
        HttpBackend(url, api_key="", backoff=0.0).complete("kg_reason", "p", 0.3)


def test_http_backend_transport_error():
    b = HttpBackend("http://127.0.0.1:9/v1", api_key="", max_retries=1, backoff=0.0, timeout=1.0)
    with pytest.raises(GatewayError, match="transport error"):
        b.complete("kg_reason", "p", 0.3)
