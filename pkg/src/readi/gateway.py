"""Role-typed access to a language model.

Two backends: :class:`ScriptedBackend` replays canned responses per role in
order (prompt content is ignored), :class:`HttpBackend` posts chat-completion
requests. Both return raw text; parsing happens elsewhere.
"""
from __future__ import annotations

import json
import logging
import os
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol

import httpx

from readi.errors import GatewayError, RenderError
from readi.prompts import TEMPLATES

log = logging.getLogger(__name__)

ROLE_NAMES = ("kg_generate", "kg_edit", "kg_reason", "table_generate", "table_edit", "table_reason")
DEFAULT_TEMPERATURE = 0.3
SENTINEL = "<no scripted response>"
API_KEY_ENV = "READI_API_KEY"


@dataclass(frozen=True)
class Role:
    name: str
    shot_count: int
    template_id: str


def _profile(kg: tuple[int, int, int], table: tuple[int, int, int]) -> dict[str, Role]:
    counts = dict(zip(ROLE_NAMES, kg + table))
    return {n: Role(n, counts[n], f"{n}/v1") for n in ROLE_NAMES}


SHOT_PROFILES: dict[str, dict[str, Role]] = {
    # CWQ/WebQSP-style KG counts, WTQ/WikiSQL-style table counts
    "default": _profile((6, 5, 5), (7, 2, 7)),
    "mqa": _profile((6, 3, 3), (7, 2, 7)),
}
DEFAULT_ROLES = SHOT_PROFILES["default"]


def render_prompt(role: Role, slots: Mapping[str, str]) -> str:
    tmpl = TEMPLATES.get(role.template_id)
    if tmpl is None:
        raise RenderError(f"unknown template {role.template_id!r} for role {role.name}")
    missing = [s for s in tmpl.slots if s not in slots]
    if missing:
        raise RenderError(f"role {role.name}: missing slot {missing[0]!r}")
    if role.shot_count > len(tmpl.demonstrations):
        raise RenderError(
            f"role {role.name}: {role.shot_count} shots requested, "
            f"template has {len(tmpl.demonstrations)}"
        )
    parts = [tmpl.instruction]
    parts += tmpl.demonstrations[: role.shot_count]
    parts.append(tmpl.query.substitute({s: str(slots[s]) for s in tmpl.slots}))
    return "\n\n".join(parts)


class Backend(Protocol):
    def complete(self, role: str, prompt: str, temperature: float) -> str: ...


class Transcript:
    """Per-role FIFO queues of canned responses."""

    def __init__(self, roles: Mapping[str, Iterable[str]] | None = None, strict: bool = True):
        roles = roles or {}
        unknown = set(roles) - set(ROLE_NAMES)
        if unknown:
            raise ValueError(f"unknown roles in transcript: {sorted(unknown)}")
        self._queues = {r: deque(roles.get(r, ())) for r in ROLE_NAMES}
        self.strict = strict

    def pop(self, role: str) -> str:
        q = self._queues[role]
        if q:
            return q.popleft()
        if self.strict:
            raise GatewayError(f"scripted transcript exhausted for role {role}")
        return SENTINEL

    def remaining(self, role: str) -> int:
        return len(self._queues[role])

    def to_dict(self) -> dict:
        return {"roles": {r: list(q) for r, q in self._queues.items() if q}, "strict": self.strict}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Transcript":
        return cls(d.get("roles", {}), d.get("strict", True))

    @classmethod
    def from_calls(cls, calls: Iterable[Mapping], strict: bool = True) -> "Transcript":
        roles: dict[str, list[str]] = {}
        for c in calls:
            roles.setdefault(c["role"], []).append(c["response"])
        return cls(roles, strict)


def load_transcripts(path: str | Path) -> tuple[Transcript | None, dict[str, Transcript]]:
    """Read transcript.json.

    Either a single ``{"roles": ..., "strict": ...}`` object, consumed in order
    across all questions, or ``{"sessions": {question_id: {"roles": ...}}}``
    with one transcript per question.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    strict = data.get("strict", True)
    if "sessions" in data:
        per = {}
        for qid, d in data["sessions"].items():
            per[qid] = Transcript(d.get("roles", {}), d.get("strict", strict))
        return None, per
    return Transcript(data.get("roles", {}), strict), {}


class ScriptedBackend:
    def __init__(self, transcript: Transcript):
        self.transcript = transcript

    def complete(self, role: str, prompt: str, temperature: float) -> str:
        return self.transcript.pop(role)


class HttpBackend:
    """Chat-completion client with exponential backoff on transient failures."""

    SYSTEM_MESSAGE = (
        "You reason over structured data. Follow the output format of the examples exactly."
    )

    def __init__(
        self,
        base_url: str,
        model: str = "gpt-3.5-turbo",
        api_key: str | None = None,
        max_retries: int = 3,
        backoff: float = 1.0,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        url = base_url.rstrip("/")
        if not url.endswith("/chat/completions"):
            url += "/chat/completions"
        self.url = url
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.max_retries = max_retries
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, role: str, prompt: str, temperature: float) -> str:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": self.SYSTEM_MESSAGE},
                {"role": "user", "content": prompt},
            ],
            "temperature": temperature,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.url, json=body, headers=headers)
            except httpx.TransportError as exc:
                last = f"transport error: {exc!r}"
                log.warning("%s: attempt %d failed: %s", role, attempt + 1, last)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("%s: attempt %d failed: %s", role, attempt + 1, last)
                continue
            if resp.status_code != 200:
                raise GatewayError(f"{role}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"{role}: malformed completion body: {exc!r}") from exc
        raise GatewayError(f"{role}: giving up after {self.max_retries + 1} attempts ({last})")

    def close(self) -> None:
        self._client.close()


def complete(role: Role, prompt: str, backend: Backend, temperature: float = DEFAULT_TEMPERATURE) -> str:
    try:
        return backend.complete(role.name, prompt, temperature)
    except GatewayError as exc:
        if role.name in str(exc):
            raise
        raise GatewayError(f"{role.name}: {exc}") from exc


@dataclass
class Call:
    role: str
    prompt: str
    response: str

    def to_dict(self) -> dict:
        return {"role": self.role, "prompt": self.prompt, "response": self.response}


@dataclass
class Gateway:
    """Renders a role's prompt, calls the backend and returns the exchange."""

    backend: Backend
    roles: Mapping[str, Role] = field(default_factory=lambda: DEFAULT_ROLES)
    temperature: float = DEFAULT_TEMPERATURE

    def call(self, role_name: str, slots: Mapping[str, str], temperature: float | None = None) -> Call:
        role = self.roles[role_name]
        prompt = render_prompt(role, slots)
        temp = self.temperature if temperature is None else temperature
        return Call(role_name, prompt, complete(role, prompt, self.backend, temp))
