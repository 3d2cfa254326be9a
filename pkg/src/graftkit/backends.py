"""LLM access for the two capabilities the pipeline needs.

Scoring returns teacher-forced per-token logprobs for a continuation placed
after an instruction prefix; generation returns a free-form completion for a
single-message chat prompt. Both capabilities come in two flavours:

* deterministic in-process mocks, so the whole pipeline runs offline and is
  bit-reproducible, and
* HTTP adapters speaking the de-facto open completion API shape (the exact
  request/response field names are documented in ``tests/fixtures/``).
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from dataclasses import dataclass
from typing import Protocol

import httpx

from .errors import BackendError

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Request/response types

@dataclass(frozen=True)
class ScoringRequest:
    instruction: str
    continuation: str

    def __post_init__(self) -> None:
        if not self.continuation:
            raise ValueError("continuation must be non-empty")


@dataclass(frozen=True)
class ScoredToken:
    surface: str
    logprob: float
    start: int
    end: int


@dataclass(frozen=True)
class GenerationRequest:
    instruction: str
    max_tokens: int = 256
    temperature: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be ≥ 1")
        if self.temperature < 0:
            raise ValueError("temperature must be ≥ 0")


class ScoringBackend(Protocol):
    model: str

    def score(self, req: ScoringRequest) -> list[ScoredToken]: ...


class GenerationBackend(Protocol):
    model: str

    def generate(self, req: GenerationRequest) -> str: ...


def check_tiling(tokens: list[ScoredToken], continuation: str) -> None:
    """Assert that token offsets tile [0, len(continuation)) with no gaps."""
    pos = 0
    for tok in tokens:
        if tok.start != pos or tok.end <= tok.start:
            raise BackendError(
                f"token offsets do not tile the continuation: expected start {pos}, "
                f"got [{tok.start}, {tok.end})"
            )
        pos = tok.end
    if pos != len(continuation):
        raise BackendError(
            f"token offsets stop at {pos} but continuation has length {len(continuation)}"
        )


# ---------------------------------------------------------------------------
# Deterministic mocks
#
# Mock logprobs are the documented pure function of (token, instruction,
# seed): sha256 of "graftkit-mock-v1|{seed}|{instruction}|{token}", first
# 8 bytes as a big-endian integer h, value -(h % 10241) / 1024. Values are
# therefore multiples of 2**-10 in [-10, 0]; sums and differences of such
# values are exact in IEEE doubles, which keeps the oracle and
# shift-invariance tests exact rather than approximate. Changing any of
# these constants invalidates golden files.

MOCK_HASH_TAG = "graftkit-mock-v1"
MOCK_LOGPROB_STEPS = 10241
MOCK_LOGPROB_DENOM = 1024


def _stable_hash(payload: str) -> int:
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def mock_logprob(token: str, instruction: str, seed: int) -> float:
    """Deterministic pseudo-logprob in [-10, 0], identical across platforms."""
    h = _stable_hash(f"{MOCK_HASH_TAG}|{seed}|{instruction}|{token}")
    return -(h % MOCK_LOGPROB_STEPS) / MOCK_LOGPROB_DENOM


def mock_model_tokenize(text: str, piece_len: int = 4) -> list[tuple[int, int]]:
    """Sub-word segmentation for the mock scorer.

    Each token is optional leading whitespace plus either up to ``piece_len``
    alphanumeric characters or exactly one non-alphanumeric character,
    mimicking how BPE pre-tokenizers attach spaces to the following piece
    and split letters from punctuation. Single-character punctuation tokens
    guarantee that every word the corpus tokenizer peels off gets its own
    token. Token spans tile the whole string.
    """
    spans: list[tuple[int, int]] = []
    i, n = 0, len(text)
    while i < n:
        j = i
        while j < n and text[j].isspace():
            j += 1
        if j == n:
            spans.append((i, n))
            break
        k = j + 1
        if text[j].isalnum():
            while k < n and text[k].isalnum() and k - j < piece_len:
                k += 1
        spans.append((i, k))
        i = k
    return spans


@dataclass
class MockScoringBackend:
    """Offline scorer: hash-table logprobs over the mock tokenization."""

    seed: int = 0
    model: str = "mock-scorer"
    piece_len: int = 4

    def score(self, req: ScoringRequest) -> list[ScoredToken]:
        tokens = [
            ScoredToken(
                surface=req.continuation[a:b],
                logprob=mock_logprob(req.continuation[a:b], req.instruction, self.seed),
                start=a,
                end=b,
            )
            for a, b in mock_model_tokenize(req.continuation, self.piece_len)
        ]
        check_tiling(tokens, req.continuation)
        return tokens


MOCK_FILL_VOCAB = (
    "absolutely", "actually", "alive", "amazed", "angry", "anyway", "awake",
    "believe", "better", "bright", "calm", "chance", "crazy", "day", "dream",
    "easy", "energy", "feel", "fine", "forever", "friend", "glad", "gone",
    "happy", "heart", "home", "honestly", "hope", "joy", "life", "luck",
    "moment", "morning", "never", "new", "night", "nobody", "okay", "people",
    "quiet", "real", "shock", "smile", "somehow", "story", "sudden", "sun",
    "things", "time", "today", "true", "turn", "weird", "wild", "wonder",
    "world", "wow", "year",
)

# build_fill_prompt puts the rendered template on the prompt's second line;
# this prefix is how the mock recognizes a fill request. Must match
# synthesis.FILL_INSTRUCTION.
_FILL_PROMPT_PREFIX = "Fill in the blanks in the template"


@dataclass
class MockGenerationBackend:
    """Offline generator, deterministic in (backend seed, request).

    For fill prompts it echoes the template with every mask token replaced by
    a hash-chosen vocabulary word (or ``fill_word`` when set, e.g. "ok" in
    tests); otherwise it composes a short hash-chosen sentence.
    """

    seed: int = 0
    model: str = "mock-writer"
    mask_token: str = "_"
    fill_word: str | None = None

    def generate(self, req: GenerationRequest) -> str:
        key = f"graftkit-mockgen-v1|{self.seed}|{req.seed}|{req.instruction}"
        lines = req.instruction.splitlines()
        if lines and lines[0].startswith(_FILL_PROMPT_PREFIX) and len(lines) >= 2:
            out: list[str] = []
            blank = 0
            for part in lines[1].split(" "):
                if part == self.mask_token:
                    if self.fill_word is not None:
                        out.append(self.fill_word)
                    else:
                        idx = _stable_hash(f"{key}|blank|{blank}") % len(MOCK_FILL_VOCAB)
                        out.append(MOCK_FILL_VOCAB[idx])
                    blank += 1
                else:
                    out.append(part)
            return " ".join(out)
        length = 8 + _stable_hash(f"{key}|len") % 9
        words = [
            MOCK_FILL_VOCAB[_stable_hash(f"{key}|w|{i}") % len(MOCK_FILL_VOCAB)]
            for i in range(length)
        ]
        return " ".join(words)


# ---------------------------------------------------------------------------
# HTTP adapters

class TokenBucket:
    """Thread-safe token bucket limiting requests per second."""

    def __init__(self, rate: float, capacity: float | None = None) -> None:
        if rate <= 0:
            raise ValueError("rate must be > 0")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(rate, 1.0)
        self._tokens = self.capacity
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


@dataclass
class HttpBackendConfig:
    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 60.0
    max_attempts: int = 5
    backoff_base: float = 0.5
    requests_per_second: float | None = None


class _HttpClient:
    def __init__(self, config: HttpBackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self.model = config.model
        headers = {}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        self._client = httpx.Client(
            base_url=config.base_url,
            timeout=config.timeout,
            headers=headers,
            transport=transport,
        )
        self._bucket = (
            TokenBucket(config.requests_per_second)
            if config.requests_per_second
            else None
        )

    def _post_json(self, path: str, payload: dict) -> dict:
        last_error = None
        for attempt in range(1, self.config.max_attempts + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                resp = self._client.post(path, json=payload)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
            else:
                if resp.status_code == 200:
                    return resp.json()
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                else:
                    raise BackendError(
                        f"{path} failed with HTTP {resp.status_code}: {resp.text[:200]}"
                    )
            if attempt < self.config.max_attempts:
                delay = self.config.backoff_base * 2 ** (attempt - 1)
                logger.warning(
                    "retry %d/%d for %s after %s (sleeping %.2fs)",
                    attempt,
                    self.config.max_attempts,
                    path,
                    last_error,
                    delay,
                )
                if delay > 0:
                    time.sleep(delay)
        raise BackendError(
            f"{path} failed after {self.config.max_attempts} attempts: {last_error}"
        )


class CompletionsScoringClient(_HttpClient):
    """Teacher-forced scoring via POST /completions with echo + logprobs.

    The prompt is ``instruction + "\\n" + continuation``; the response's
    per-token ``text_offset`` values locate each token in that prompt, and
    only tokens at or past the continuation start are kept (offsets re-based
    onto the continuation).
    """

    PROMPT_SEP = "\n"

    def score(self, req: ScoringRequest) -> list[ScoredToken]:
        prompt = req.instruction + self.PROMPT_SEP + req.continuation
        payload = {
            "model": self.model,
            "prompt": prompt,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
            "temperature": 0.0,
        }
        data = self._post_json("/completions", payload)
        try:
            lp = data["choices"][0]["logprobs"]
            surfaces = lp["tokens"]
            logprobs = lp["token_logprobs"]
            offsets = lp["text_offset"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(
                "backend response carries no per-token logprobs; the scoring stage "
                "requires a completions endpoint supporting echo=true with logprobs"
            ) from exc
        base = len(req.instruction) + len(self.PROMPT_SEP)
        tokens = [
            ScoredToken(
                surface=surface,
                logprob=0.0 if logprob is None else float(logprob),
                start=offset - base,
                end=offset - base + len(surface),
            )
            for surface, logprob, offset in zip(surfaces, logprobs, offsets)
            if offset >= base
        ]
        check_tiling(tokens, req.continuation)
        return tokens


class ChatGenerationClient(_HttpClient):
    """Free-form generation via POST /chat/completions."""

    def generate(self, req: GenerationRequest) -> str:
        payload: dict = {
            "model": self.model,
            "messages": [{"role": "user", "content": req.instruction}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        if req.seed is not None:
            payload["seed"] = req.seed
        last_error = "empty completion"
        for attempt in range(1, self.config.max_attempts + 1):
            data = self._post_json("/chat/completions", payload)
            try:
                content = data["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed chat completion response: {data!r}") from exc
            if content and content.strip():
                return content
            if attempt < self.config.max_attempts:
                logger.warning(
                    "retry %d/%d for /chat/completions after empty completion",
                    attempt,
                    self.config.max_attempts,
                )
        raise BackendError(
            f"/chat/completions returned {last_error} after {self.config.max_attempts} attempts"
        )
