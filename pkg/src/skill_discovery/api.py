"""
LLM Clients

Chat-completion client used by the high-level planner, and a deterministic
mock for offline runs.
"""

import base64
import logging
import math
import threading
from typing import Any, Callable, Optional, Protocol, Sequence

import httpx

from .config.types import ResolvedClient
from .exceptions import ClientError, ClientTimeoutError

logger = logging.getLogger(__name__)

# (prompt, metadata) -> response text
MockPolicy = Callable[[str, dict[str, Any]], str]


class LlmClient(Protocol):
    """Anything that turns a prompt (plus optional images) into response text."""

    def send(
        self,
        prompt: str,
        images: Optional[Sequence[bytes]] = None,
        metadata: Optional[dict[str, Any]] = None,
    ) -> str: ...


def _fenced(keys: Sequence[int]) -> str:
    return "```json\n[" + ", ".join(str(k) for k in keys) + "]\n```"


def injected_failure(trial_index: int, error_rate: float) -> bool:
    """True for exactly floor(n * error_rate) of the first n trial indices."""
    return math.floor((trial_index + 1) * error_rate) > math.floor(trial_index * error_rate)


def oracle_policy(error_rate: float = 0.0) -> MockPolicy:
    """
    Answer with the reference plan, dropping its last action on injected failures.

    Reads `answer` and `trial_index` from the request metadata.
    """

    def policy(prompt: str, metadata: dict[str, Any]) -> str:
        answer = list(metadata.get("answer", []))
        if injected_failure(int(metadata.get("trial_index", 0)), error_rate):
            answer = answer[:-1]
        return _fenced(answer)

    return policy


def catalog_size_policy(max_actions: int = 5) -> MockPolicy:
    """Answer correctly only while the catalog holds at most max_actions actions."""

    def policy(prompt: str, metadata: dict[str, Any]) -> str:
        if int(metadata.get("catalog_size", 0)) > max_actions:
            return "I am not sure which of these actions are needed: []"
        return _fenced(metadata.get("answer", []))

    return policy


class MockLlmClient:
    """
    Scriptable offline client.

    A script entry keyed by (template, ingredients) wins; otherwise the policy
    answers; otherwise default_response is returned.
    """

    def __init__(
        self,
        script: Optional[dict[tuple[str, tuple[str, ...]], str]] = None,
        policy: Optional[MockPolicy] = None,
        default_response: str = "[]",
    ):
        self.script = dict(script or {})
        self.policy = policy
        self.default_response = default_response
        self.calls: list[dict[str, Any]] = []
        self._lock = threading.Lock()

    def send(
        self,
        prompt: str,
        images: Optional[Sequence[bytes]] = None,
        metadata: Optional[dict[str, Any]] = None,
    ) -> str:
        metadata = dict(metadata or {})
        with self._lock:
            self.calls.append({"prompt": prompt, "images": len(images or []), **metadata})

        key = (metadata.get("template", ""), tuple(metadata.get("ingredients", ())))
        if key in self.script:
            return self.script[key]
        if self.policy is not None:
            return self.policy(prompt, metadata)
        return self.default_response


def _retryable(status: int) -> bool:
    return status >= 500 or status == 429


class HttpLlmClient:
    """OpenAI-compatible chat-completions client."""

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        api_key: str = "",
        timeout_s: float = 60.0,
        retries: int = 2,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        """
        Initialize the client.

        Args:
            endpoint: Full chat-completions URL
            model_name: Model identifier sent with each request
            api_key: Bearer credential
            timeout_s: Per-request timeout in seconds
            retries: Extra attempts after a failed request
            transport: Optional httpx transport (tests use httpx.MockTransport)
        """
        self.endpoint = endpoint
        self.model_name = model_name
        self.timeout_s = timeout_s
        self.retries = retries
        self.transport = transport
        # Remove ALL whitespace from the key (including internal newlines)
        token = "".join(api_key.split())
        self.headers = {"Content-Type": "application/json"}
        if token:
            self.headers["Authorization"] = f"Bearer {token}"

    def _payload(self, prompt: str, images: Sequence[bytes]) -> dict[str, Any]:
        content: list[dict[str, Any]] = [{"type": "text", "text": prompt}]
        for image in images:
            encoded = base64.b64encode(image).decode("ascii")
            content.append(
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{encoded}"}}
            )
        return {"model": self.model_name, "messages": [{"role": "user", "content": content}]}

    def send(
        self,
        prompt: str,
        images: Optional[Sequence[bytes]] = None,
        metadata: Optional[dict[str, Any]] = None,
    ) -> str:
        """
        Send one user message and return the assistant text.

        Raises:
            ClientTimeoutError: Every attempt timed out
            ClientError: Transport, HTTP status or response-shape failure
        """
        payload = self._payload(prompt, images or [])
        last_error: Optional[Exception] = None

        with httpx.Client(transport=self.transport, timeout=self.timeout_s) as client:
            for attempt in range(self.retries + 1):
                try:
                    response = client.post(self.endpoint, headers=self.headers, json=payload)
                    response.raise_for_status()
                    data = response.json()
                except (httpx.TimeoutException, httpx.HTTPError) as e:
                    # 4xx other than 429 fails on the first attempt
                    if isinstance(e, httpx.HTTPStatusError) and not _retryable(e.response.status_code):
                        raise ClientError(
                            f"LLM request rejected with HTTP {e.response.status_code}", retries=attempt
                        ) from e
                    last_error = e
                    logger.warning("LLM request attempt %d failed: %s", attempt + 1, e)
                    continue
                except ValueError as e:
                    raise ClientError(f"response is not JSON: {e}", retries=attempt) from e

                try:
                    return str(data["choices"][0]["message"]["content"])
                except (KeyError, IndexError, TypeError) as e:
                    raise ClientError(
                        f"unexpected response shape: {e!r}", retries=attempt
                    ) from e

        if isinstance(last_error, httpx.TimeoutException):
            raise ClientTimeoutError(
                f"LLM request timed out after {self.timeout_s}s", retries=self.retries
            ) from last_error
        raise ClientError(f"LLM request failed: {last_error}", retries=self.retries) from last_error


def make_client(resolved: ResolvedClient) -> LlmClient:
    """Build the client described by resolved settings."""
    if resolved.kind == "mock":
        return MockLlmClient(policy=oracle_policy(resolved.mock_error_rate))
    return HttpLlmClient(
        endpoint=resolved.endpoint,
        model_name=resolved.model_name,
        api_key=resolved.api_key,
        timeout_s=resolved.timeout_s,
        retries=resolved.retries,
    )
