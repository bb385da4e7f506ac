"""Endpoint pool for OpenAI-compatible chat completions.

The pool load-balances round-robin over healthy endpoints, enforces a token
bucket and a concurrency cap per endpoint, retries transient failures on other
endpoints and jitters sampling parameters on every request.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Protocol

log = logging.getLogger(__name__)


class UsageKind(str, Enum):
    BELIEF_UPDATE = "belief_update"
    DESIRE_GENERATION = "desire_generation"
    ACTION_DECISION = "action_decision"


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    """A single request failed (network, HTTP status, timeout)."""


class PoolExhausted(GatewayError):
    """No healthy endpoint is left to serve a request."""


@dataclass
class EndpointSpec:
    base_url: str
    model_name: str
    api_key_env: str = ""
    max_concurrent: int = 4
    requests_per_minute: int = 60
    name: str = ""
    usages: Optional[List[str]] = None  # None serves every usage kind

    def __post_init__(self):
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")
        if self.requests_per_minute < 1:
            raise ValueError("requests_per_minute must be >= 1")
        if not self.name:
            self.name = f"{self.model_name}@{self.base_url}"

    def serves(self, usage: UsageKind) -> bool:
        return self.usages is None or UsageKind(usage).value in self.usages


@dataclass
class SamplingPerturbation:
    base_temperature: float = 0.7
    base_top_p: float = 0.9
    temp_jitter_halfwidth: float = 0.1
    top_p_jitter_halfwidth: float = 0.05
    penalty_max: float = 0.5
    min_temperature: float = 0.01

    def draw(self, rng) -> Dict[str, float]:
        """Realized parameters; draws eps_T, eps_p, frequency, presence in that order."""
        eps_t = float(rng.uniform(-self.temp_jitter_halfwidth, self.temp_jitter_halfwidth))
        eps_p = float(rng.uniform(-self.top_p_jitter_halfwidth, self.top_p_jitter_halfwidth))
        freq = float(rng.uniform(0.0, self.penalty_max))
        presence = float(rng.uniform(0.0, self.penalty_max))
        temperature = max(self.min_temperature, self.base_temperature + eps_t)
        top_p = min(1.0, max(1e-3, self.base_top_p + eps_p))
        return {"temperature": temperature, "top_p": top_p,
                "frequency_penalty": freq, "presence_penalty": presence}


@dataclass
class ChatExchange:
    usage: str
    prompt: str
    response: str
    latency_ms: float
    endpoint: str
    sampling: Dict[str, float]
    error: Optional[str] = None
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=True)


@dataclass
class BackendReply:
    text: str
    latency_ms: Optional[float] = None
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None


class Backend(Protocol):
    def send(self, endpoint: EndpointSpec, payload: dict, usage: UsageKind) -> BackendReply:
        ...


def chat_payload(endpoint: EndpointSpec, prompt: str, sampling: Dict[str, float]) -> dict:
    return {
        "model": endpoint.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": sampling["temperature"],
        "top_p": sampling["top_p"],
        "frequency_penalty": sampling["frequency_penalty"],
        "presence_penalty": sampling["presence_penalty"],
    }


class HTTPBackend:
    """POST {base_url}/chat/completions with bearer auth from the named env var."""

    def __init__(self, timeout: float = 120.0, session=None):
        import requests

        self.timeout = timeout
        self._requests = requests
        self.session = session or requests.Session()

    def send(self, endpoint: EndpointSpec, payload: dict, usage: UsageKind) -> BackendReply:
        headers = {"Content-Type": "application/json"}
        if endpoint.api_key_env:
            key = os.environ.get(endpoint.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        url = endpoint.base_url.rstrip("/") + "/chat/completions"
        try:
            resp = self.session.post(url, json=payload, headers=headers, timeout=self.timeout)
        except self._requests.RequestException as exc:
            raise TransportError(f"{endpoint.name}: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"{endpoint.name}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"{endpoint.name}: malformed completion body") from exc
        usage_info = body.get("usage") or {}
        return BackendReply(text, None, usage_info.get("prompt_tokens"), usage_info.get("completion_tokens"))


class TokenBucket:
    """Refills `rate_per_minute` tokens per minute up to a burst of the same size."""

    def __init__(self, rate_per_minute: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = rate_per_minute / 60.0
        self.capacity = float(rate_per_minute)
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.stamp = clock()
        self._lock = threading.Lock()

    def _refill(self) -> None:
        now = self.clock()
        self.tokens = min(self.capacity, self.tokens + (now - self.stamp) * self.rate)
        self.stamp = now

    def acquire(self) -> float:
        """Block until a token is available; returns the seconds waited."""
        waited = 0.0
        while True:
            with self._lock:
                self._refill()
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return waited
                wait = (1.0 - self.tokens) / self.rate
            self.sleep(wait)
            waited += wait


class _EndpointState:
    def __init__(self, spec: EndpointSpec, clock, sleep):
        self.spec = spec
        self.bucket = TokenBucket(spec.requests_per_minute, clock, sleep)
        self.slots = threading.BoundedSemaphore(spec.max_concurrent)
        self.consecutive_failures = 0
        self.unhealthy_until: Optional[float] = None
        self.backoff_level = 0
        self.calls = 0


class EndpointPool:
    """Shared, thread-safe pool. `complete` is the only entry point callers need."""

    FAILURE_THRESHOLD = 3
    BACKOFF_START = 30.0
    BACKOFF_CAP = 480.0

    def __init__(self, endpoints: List[EndpointSpec], backend: Backend,
                 sampling: Optional[SamplingPerturbation] = None, max_retries: int = 2,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep,
                 exchange_log: Optional[str] = None, keep_exchanges: int = 0):
        if not endpoints:
            raise ValueError("endpoint pool needs at least one endpoint")
        self.backend = backend
        self.sampling = sampling or SamplingPerturbation()
        self.max_retries = max_retries
        self.clock = clock
        self._states = [_EndpointState(e, clock, sleep) for e in endpoints]
        self._cursor: Dict[str, int] = {}
        self._lock = threading.Lock()
        self.counters: Counter = Counter()
        self.failures: Counter = Counter()
        self.tokens: Counter = Counter()
        self.exchanges: List[ChatExchange] = []
        self.keep_exchanges = keep_exchanges
        self._log_path = exchange_log
        self._log_lock = threading.Lock()

    @property
    def endpoints(self) -> List[EndpointSpec]:
        return [s.spec for s in self._states]

    def calls_per_endpoint(self) -> Dict[str, int]:
        return {s.spec.name: s.calls for s in self._states}

    def healthy(self, usage: UsageKind) -> List[str]:
        now = self.clock()
        return [s.spec.name for s in self._states if s.spec.serves(usage) and self._eligible(s, now)]

    def _eligible(self, st: _EndpointState, now: float) -> bool:
        return st.unhealthy_until is None or now >= st.unhealthy_until

    def _pick(self, usage: UsageKind, exclude: set) -> _EndpointState:
        with self._lock:
            now = self.clock()
            n = len(self._states)
            start = self._cursor.get(usage.value, 0)
            for off in range(n):
                idx = (start + off) % n
                st = self._states[idx]
                if idx in exclude or not st.spec.serves(usage) or not self._eligible(st, now):
                    continue
                self._cursor[usage.value] = idx + 1
                return st
        raise PoolExhausted(f"no healthy endpoint for {usage.value}")

    def _record(self, st: _EndpointState, ok: bool) -> None:
        with self._lock:
            st.calls += 1
            if ok:
                st.consecutive_failures = 0
                st.unhealthy_until = None
                st.backoff_level = 0
                return
            st.consecutive_failures += 1
            self.failures[st.spec.name] += 1
            if st.consecutive_failures >= self.FAILURE_THRESHOLD:
                delay = min(self.BACKOFF_CAP, self.BACKOFF_START * (2 ** st.backoff_level))
                st.backoff_level += 1
                st.unhealthy_until = self.clock() + delay
                log.warning("endpoint %s marked unhealthy for %.0fs", st.spec.name, delay)

    def _log(self, ex: ChatExchange, sink: Optional[list] = None) -> None:
        if sink is not None:
            sink.append(ex)
            return
        with self._log_lock:
            if self.keep_exchanges:
                self.exchanges.append(ex)
                if len(self.exchanges) > self.keep_exchanges:
                    del self.exchanges[0]
            if self._log_path:
                with open(self._log_path, "a", encoding="utf-8") as fh:
                    fh.write(ex.to_json() + "\n")

    def complete(self, usage: UsageKind, prompt: str, rng, sink: Optional[list] = None) -> str:
        """Send one prompt; `sink`, if given, receives the exchange records instead of the pool log."""
        usage = UsageKind(usage)
        with self._lock:
            self.counters[usage.value] += 1
        sampling = self.sampling.draw(rng)
        tried: set = set()
        last_error: Optional[Exception] = None
        for _ in range(1 + self.max_retries):
            try:
                st = self._pick(usage, tried)
            except PoolExhausted:
                if last_error is None:
                    raise
                break
            tried.add(self._states.index(st))
            payload = chat_payload(st.spec, prompt, sampling)
            st.bucket.acquire()
            st.slots.acquire()
            t0 = time.perf_counter()
            try:
                reply = self.backend.send(st.spec, payload, usage)
            except TransportError as exc:
                latency = (time.perf_counter() - t0) * 1000.0
                self._record(st, False)
                self._log(ChatExchange(usage.value, prompt, "", latency, st.spec.name, sampling, str(exc)), sink)
                last_error = exc
                continue
            finally:
                st.slots.release()
            latency = reply.latency_ms if reply.latency_ms is not None else (time.perf_counter() - t0) * 1000.0
            self._record(st, True)
            if reply.prompt_tokens:
                self.tokens[f"{usage.value}.prompt"] += reply.prompt_tokens
            if reply.completion_tokens:
                self.tokens[f"{usage.value}.completion"] += reply.completion_tokens
            self._log(ChatExchange(usage.value, prompt, reply.text, latency, st.spec.name, sampling, None,
                                   reply.prompt_tokens, reply.completion_tokens), sink)
            return reply.text
        if not self.healthy(usage):
            raise PoolExhausted(f"all endpoints for {usage.value} unhealthy: {last_error}")
        raise GatewayError(f"request failed after {1 + self.max_retries} attempts: {last_error}")
