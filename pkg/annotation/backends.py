from __future__ import annotations

import json
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from corpus.errors import EigenmoodError, UsageError

CANONICAL_ABSTAIN_NOTE = "no clear psychological signal"
DEFAULT_TEMPLATE_ID = "persian_verse_v1"


class BackendTransportError(EigenmoodError):
    """The backend could not produce any text for a request."""


@dataclass(frozen=True)
class AnnotationRequest:
    """One verse per request; no cross-verse context is ever attached."""

    verse_text: str
    prompt_template_id: str = DEFAULT_TEMPLATE_ID


@dataclass
class AnnotationBackend(ABC):
    """
    Text-generation interface used by the annotation gateway.

    Contract:
        - generate() takes one AnnotationRequest and returns the raw response text
        - any exception raised by generate() is treated as a failed attempt
    """

    name: str = field(init=False)
    params: dict[str, Any] = field(default_factory=dict, init=False)

    @abstractmethod
    def generate(self, request: AnnotationRequest) -> str:
        raise NotImplementedError


@dataclass
class ScriptedMockBackend(AnnotationBackend):
    """
    Replays canned responses in order (cycling when `cycle` is set).

    A response given as a dict is sent as JSON, except `{"__raise__": msg}`,
    which simulates a transport failure.
    """

    responses: list[Any] = field(default_factory=list)
    cycle: bool = True

    def __post_init__(self) -> None:
        self.name = "scripted_mock"
        self.params = {"n_responses": len(self.responses), "cycle": self.cycle}
        if not self.responses:
            raise UsageError("ScriptedMockBackend: no responses scripted")
        self._pos = 0
        self._lock = threading.Lock()

    @classmethod
    def from_fixture(cls, path: str | Path, cycle: bool = True) -> "ScriptedMockBackend":
        """Fixture is either a JSON list or JSONL with one response per line."""
        text = Path(path).read_text(encoding="utf-8")
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError:
            loaded = None
        if isinstance(loaded, list):
            return cls(responses=loaded, cycle=cycle)
        responses: list[Any] = []
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                responses.append(json.loads(line))
            except json.JSONDecodeError:
                responses.append(line)  # garbage responses are part of the script
        return cls(responses=responses, cycle=cycle)

    def generate(self, request: AnnotationRequest) -> str:
        with self._lock:
            if self._pos >= len(self.responses):
                if not self.cycle:
                    raise BackendTransportError("ScriptedMockBackend: script exhausted")
                self._pos = 0
            item = self.responses[self._pos]
            self._pos += 1

        if isinstance(item, dict) and "__raise__" in item:
            raise BackendTransportError(str(item["__raise__"]))
        if isinstance(item, str):
            return item
        payload = dict(item) if isinstance(item, dict) else item
        if isinstance(payload, dict):
            payload.setdefault("input_verse", request.verse_text)
        return json.dumps(payload, ensure_ascii=False)


@dataclass
class EchoAbstainBackend(AnnotationBackend):
    """Always abstains with the canonical note."""

    def __post_init__(self) -> None:
        self.name = "echo_abstain"

    def generate(self, request: AnnotationRequest) -> str:
        return json.dumps(
            {
                "input_verse": request.verse_text,
                "labels": [],
                "confidences": {},
                "rationale": {},
                "abstain": True,
                "notes": CANONICAL_ABSTAIN_NOTE,
            },
            ensure_ascii=False,
        )


BACKEND_REGISTRY: dict[str, type[AnnotationBackend]] = {
    "scripted_mock": ScriptedMockBackend,
    "echo_abstain": EchoAbstainBackend,
}


def get_backend_class(name: str) -> type[AnnotationBackend]:
    if name not in BACKEND_REGISTRY:
        raise KeyError(f"Unknown annotation backend: {name}")
    return BACKEND_REGISTRY[name]
