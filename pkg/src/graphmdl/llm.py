"""Few-shot prompt assembly and a cached client for chat-completion endpoints."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import httpx

from .exceptions import AuthError, ConfigError, NetworkError, ParseError
from .io import SampleSet, get_dialect, parse_script

logger = logging.getLogger(__name__)

RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


@dataclass
class PromptSpec:
    few_shot: list[tuple[str, str]]
    test_input: str
    intra_separator: str = "\n"
    inter_separator: str = "\n\n\n"

    @classmethod
    def from_dict(cls, d: dict) -> "PromptSpec":
        try:
            pairs = [(p["input"], p["graph"]) if isinstance(p, dict) else tuple(p) for p in d["few_shot"]]
            return cls(pairs, d["test_input"], d.get("intra_separator", "\n"),
                       d.get("inter_separator", "\n\n\n"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad prompt spec: {exc}") from exc


@dataclass
class SamplerConfig:
    endpoint: str
    model: str
    temperature: float = 0.9
    t_samples: int = 10
    max_tokens: int = 1024
    cache_dir: str = ".graphmdl-cache"
    api_key_env: str = "OPENAI_API_KEY"
    max_retries: int = 5
    backoff: float = 1.0
    concurrency: int = 4
    timeout: float = 60.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.t_samples < 1:
            raise ConfigError("t_samples must be >= 1")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown sampler fields {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def build_prompt(spec: PromptSpec) -> str:
    """Few-shot prompt: each example is input + intra separator + graph script,
    examples are joined by the inter separator, and the test input follows
    with a trailing intra separator for the model to complete."""
    if not spec.few_shot:
        raise ConfigError("at least one few-shot example is required")
    blocks = [f"{text}{spec.intra_separator}{script}" for text, script in spec.few_shot]
    blocks.append(f"{spec.test_input}{spec.intra_separator}")
    return spec.inter_separator.join(blocks)


def cache_key(prompt: str, model: str, temperature: float) -> str:
    return hashlib.sha256(f"{prompt}|{model}|{temperature}".encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def response_text(raw: bytes) -> str:
    try:
        body = json.loads(raw)
        return body["choices"][0]["message"]["content"] or ""
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ParseError(f"unexpected completion payload: {exc}") from exc


class ChatSampler:
    """Draws T completions for one prompt, cache first.

    Responses are stored verbatim under
    ``{cache_dir}/{sha256(prompt|model|temperature)}/{index}.json``.
    """

    def __init__(self, config: SamplerConfig, client: Optional[httpx.Client] = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._client = client
        self._sleep = sleep
        self.network_calls = 0

    @property
    def client(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(timeout=self.config.timeout)
        return self._client

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "").strip()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _url(self) -> str:
        base = self.config.endpoint.rstrip("/")
        return base if base.endswith("/chat/completions") else base + "/chat/completions"

    def _request(self, prompt: str) -> bytes:
        cfg = self.config
        payload = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
            **cfg.extra,
        }
        for attempt in range(cfg.max_retries + 1):
            reason = None
            try:
                self.network_calls += 1
                resp = self.client.post(self._url(), json=payload, headers=self._headers())
            except httpx.TransportError as exc:
                reason = f"transport error: {exc}"
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
                if resp.status_code == 200:
                    return resp.content
                if resp.status_code not in RETRY_STATUS:
                    raise NetworkError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                reason = f"HTTP {resp.status_code}"
            if attempt == cfg.max_retries:
                raise NetworkError(f"giving up after {cfg.max_retries} retries ({reason})")
            delay = cfg.backoff * 2 ** attempt
            logger.warning("retry %d/%d after %s; sleeping %.2fs", attempt + 1, cfg.max_retries, reason, delay)
            self._sleep(delay)
        raise AssertionError("unreachable")

    def completion(self, prompt: str, index: int) -> bytes:
        cfg = self.config
        path = Path(cfg.cache_dir) / cache_key(prompt, cfg.model, cfg.temperature) / f"{index}.json"
        if path.exists():
            return path.read_bytes()
        raw = self._request(prompt)
        _atomic_write(path, raw)
        return raw

    def completions(self, prompt: str) -> list[bytes]:
        n = self.config.t_samples
        if self.config.concurrency == 1 or n == 1:
            return [self.completion(prompt, i) for i in range(n)]
        with ThreadPoolExecutor(max_workers=self.config.concurrency) as pool:
            return list(pool.map(lambda i: self.completion(prompt, i), range(n)))

    def sample_graphs(self, spec: PromptSpec, dialect=None) -> SampleSet:
        """Sample, parse and collect T graphs; unparseable samples go to ``rejects``.

        Raises
        ------
        ParseError
            When every sample fails, with per-sample diagnostics.
        """
        prompt = build_prompt(spec)
        d = get_dialect(dialect)
        graphs, rejects = [], []
        for i, raw in enumerate(self.completions(prompt)):
            try:
                graphs.append(parse_script(response_text(raw), d))
            except ParseError as exc:
                rejects.append({"index": i, "error": str(exc)})
        if not graphs:
            raise ParseError(f"all {self.config.t_samples} samples failed to parse",
                             diagnostics=[f"sample {r['index']}: {r['error']}" for r in rejects])
        meta = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "prompt_hash": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
            "t_requested": self.config.t_samples,
        }
        return SampleSet(graphs, meta, rejects)


def sample_graphs(spec: PromptSpec, cfg: SamplerConfig, dialect=None, client=None) -> SampleSet:
    return ChatSampler(cfg, client=client).sample_graphs(spec, dialect)


def config_snapshot(cfg: SamplerConfig) -> dict:
    return asdict(cfg)
