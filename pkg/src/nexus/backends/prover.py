"""Focused provers: the toy-language simulator and an HTTP forwarder."""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from typing import Protocol

from ..errors import TransportError
from .toylang import simulate_prove
from .types import ProverBudget, ProverOutcome


class Prover(Protocol):
    concurrent_safe: bool

    def prove(self, goal_text: str, budget: ProverBudget, seed: int = 0) -> ProverOutcome: ...


class SimulatedProver:
    """Decides toy goals by evaluation; ``seed`` is accepted for interface parity."""

    concurrent_safe = True

    def prove(self, goal_text: str, budget: ProverBudget, seed: int = 0) -> ProverOutcome:
        if not goal_text.strip():
            raise ValueError("goal text must be non-empty")
        return simulate_prove(goal_text, budget)


class WireProver:
    """POSTs ``{"goal", "simulations", "timeout_ms", "seed"}`` and expects a ProverOutcome dict back."""

    concurrent_safe = True

    def __init__(self, url: str, token_env: str = "NEXUS_PROVER_TOKEN"):
        self.url = url
        self.token_env = token_env

    def prove(self, goal_text: str, budget: ProverBudget, seed: int = 0) -> ProverOutcome:
        body = json.dumps(
            {"goal": goal_text, "simulations": budget.simulations, "timeout_ms": budget.timeout_ms, "seed": seed}
        ).encode()
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(self.url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=budget.timeout_ms / 1000) as resp:
                payload = json.loads(resp.read().decode())
            return ProverOutcome.from_dict(payload)
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransportError(f"prover endpoint {self.url}: {exc}") from exc
        except (KeyError, ValueError) as exc:
            raise TransportError(f"prover endpoint {self.url}: malformed reply ({exc})") from exc
