"""Chat-completions gateway with live / record / replay backends.

Requests are fingerprinted over (model, temperature, top_p, prompt); a
cassette is a JSON map from fingerprint to reply text, pretty-printed with
sorted keys so recordings diff cleanly. Replay never touches the network:
a missing fingerprint is a CassetteMiss, not a retry.

Model replies are free text (the prompts ask for explanations), so
prediction extraction is lexical: scan for tokens shaped like LO codes and
keep the ones inside the allowed subset. Everything else is recorded in a
drop list with a reason.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from .taxonomy import LOCode, is_valid_lo_code, parse_lo_code


class GatewayError(Exception):
    pass


class NetworkError(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class CassetteMiss(GatewayError):
    pass


class MalformedResponse(GatewayError):
    pass


LIVE = "live"
RECORD = "record"
REPLAY = "replay"


@dataclass(frozen=True)
class ModelConfig:
    model_name: str
    endpoint_url: str = ""
    api_key_ref: str = ""
    temperature: float = 0.9
    top_p: float = 1.0
    max_retries: int = 3
    timeout: float = 60.0

    def __post_init__(self):
        if not self.model_name:
            raise ValueError("model_name must be nonempty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range [0, 2]: {self.temperature}")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p out of range (0, 1]: {self.top_p}")
        if self.max_retries < 1:
            raise ValueError("max_retries must be at least 1")

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "endpoint_url": self.endpoint_url,
            "api_key_ref": self.api_key_ref,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_retries": self.max_retries,
            "timeout": self.timeout,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


def request_fingerprint(cfg: ModelConfig, prompt: str) -> str:
    """SHA-256 over the canonicalized request: key-sorted JSON, UTF-8 bytes.

    Only fields that influence the completion participate; endpoint, key
    reference and retry policy do not.
    """
    canonical = json.dumps(
        {
            "model": cfg.model_name,
            "prompt": prompt,
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Cassette:
    """On-disk fingerprint -> reply map; writes are serialized and atomic."""

    def __init__(self, path: Union[str, Path, None] = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path is not None and self.path.exists():
            self._entries = json.loads(self.path.read_text(encoding="utf-8"))

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self._entries

    def get(self, fingerprint: str) -> Optional[str]:
        return self._entries.get(fingerprint)

    def put(self, fingerprint: str, reply: str) -> None:
        with self._lock:
            self._entries[fingerprint] = reply
            self._flush_locked()

    def _flush_locked(self) -> None:
        if self.path is None:
            return
        text = json.dumps(self._entries, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
            os.replace(tmp, self.path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


# transport(url, payload, headers, timeout) -> parsed JSON body
Transport = Callable[[str, dict, dict, float], dict]


def _urllib_transport(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            raw = response.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        if exc.code in (401, 403):
            raise AuthError(f"authentication rejected (HTTP {exc.code})") from exc
        if exc.code >= 500:
            raise NetworkError(f"server error (HTTP {exc.code})") from exc
        raise MalformedResponse(f"request rejected (HTTP {exc.code})") from exc
    except urllib.error.URLError as exc:
        raise NetworkError(f"transport failure: {exc.reason}") from exc
    except TimeoutError as exc:
        raise NetworkError("request timed out") from exc
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"reply is not valid JSON: {exc}") from exc


def _extract_reply(body: dict) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"reply missing choices[0].message.content: {body!r}") from exc
    if not isinstance(content, str):
        raise MalformedResponse(f"message content is not text: {content!r}")
    return content


def _call_live(cfg: ModelConfig, prompt: str, transport: Transport, backoff_base: float) -> str:
    if not cfg.endpoint_url:
        raise ValueError("live backend requires endpoint_url")
    headers = {"Content-Type": "application/json"}
    if cfg.api_key_ref:
        key = os.environ.get(cfg.api_key_ref)
        if not key:
            raise AuthError(f"environment variable {cfg.api_key_ref!r} is not set")
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "top_p": cfg.top_p,
        "messages": [{"role": "user", "content": prompt}],
    }
    last_error: Optional[NetworkError] = None
    for attempt in range(cfg.max_retries):
        try:
            body = transport(cfg.endpoint_url, payload, headers, cfg.timeout)
            return _extract_reply(body)
        except NetworkError as exc:
            # only transport-level failures are retried
            last_error = exc
            if attempt + 1 < cfg.max_retries and backoff_base > 0:
                time.sleep(backoff_base * (2**attempt))
    raise NetworkError(f"gave up after {cfg.max_retries} attempts: {last_error}")


def complete(
    prompt: str,
    cfg: ModelConfig,
    backend: str = REPLAY,
    cassette: Optional[Cassette] = None,
    transport: Optional[Transport] = None,
    backoff_base: float = 0.5,
) -> str:
    """Return the model reply for a prompt, via the selected backend.

    ``replay`` resolves from the cassette only (no network, ever);
    ``record`` calls the live endpoint and persists the reply under the
    request fingerprint; ``live`` just calls the endpoint.
    """
    if backend not in (LIVE, RECORD, REPLAY):
        raise ValueError(f"unknown backend: {backend!r}")
    if backend == REPLAY:
        if cassette is None:
            raise ValueError("replay backend requires a cassette")
        fingerprint = request_fingerprint(cfg, prompt)
        reply = cassette.get(fingerprint)
        if reply is None:
            raise CassetteMiss(f"no cassette entry for fingerprint {fingerprint}")
        return reply
    reply = _call_live(cfg, prompt, transport or _urllib_transport, backoff_base)
    if backend == RECORD:
        if cassette is None:
            raise ValueError("record backend requires a cassette")
        cassette.put(request_fingerprint(cfg, prompt), reply)
    return reply


# Candidate tokens: anything code-shaped with hyphen/underscore separators;
# the strict grammar then decides kept vs malformed.
_CANDIDATE_RE = re.compile(r"\b[A-Za-z]+[-_][A-Za-z0-9]+[-_][0-9]+\b")

NOT_IN_SUBSET = "not-in-subset"
MALFORMED = "malformed"


def parse_prediction(
    raw_text: str,
    allowed: Iterable[Union[str, LOCode]],
) -> tuple[tuple[LOCode, ...], list[tuple[str, str]]]:
    """Extract the predicted LO set from free-form model output.

    Scans for code-shaped tokens at word boundaries, keeps those inside the
    allowed subset (deduplicated, first-occurrence order), and records every
    rejected token with a reason. The result is always a subset of
    ``allowed``.
    """
    allowed_map: dict[str, LOCode] = {}
    for raw in allowed:
        code = parse_lo_code(raw) if isinstance(raw, str) else raw
        allowed_map[code.render()] = code
    if not allowed_map:
        raise ValueError("allowed subset must be nonempty")
    predicted: list[LOCode] = []
    seen: set[str] = set()
    dropped: list[tuple[str, str]] = []
    for match in _CANDIDATE_RE.finditer(raw_text):
        token = match.group(0)
        if not is_valid_lo_code(token):
            dropped.append((token, MALFORMED))
            continue
        if token not in allowed_map:
            dropped.append((token, NOT_IN_SUBSET))
            continue
        if token not in seen:
            seen.add(token)
            predicted.append(allowed_map[token])
    return tuple(predicted), dropped


@dataclass(frozen=True)
class PredictionRecord:
    """One model call: raw reply plus the validated prediction."""

    question_id: str
    strategy: str
    format: str
    model_name: str
    fingerprint: str
    raw_text: str
    predicted: tuple[LOCode, ...]
    dropped_codes: tuple[tuple[str, str], ...] = field(default_factory=tuple)
    sample: int = 0
    latency: float = 0.0

    def to_dict(self) -> dict:
        """Canonical persisted form; latency is runtime-only noise and stays out."""
        return {
            "question_id": self.question_id,
            "strategy": self.strategy,
            "format": self.format,
            "model_name": self.model_name,
            "sample": self.sample,
            "fingerprint": self.fingerprint,
            "raw_text": self.raw_text,
            "predicted": [c.render() for c in self.predicted],
            "dropped_codes": [list(pair) for pair in self.dropped_codes],
        }
