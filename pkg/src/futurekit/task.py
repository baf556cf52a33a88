"""TaskSpec (what a backend runs) and FutureOutcome (what comes back)."""
from __future__ import annotations

from dataclasses import dataclass, field

from .backends.spi import BackendSpec
from .exprlang import Expr, decode_env, decode_value, encode_env, encode_value, parse, unparse
from .relay import RelayRecord
from .rng import RngState


@dataclass(eq=False)
class TaskSpec:
    id: str
    body: Expr
    env: dict
    seed: bool = False
    rng_stream: RngState | None = None
    lazy: bool = False
    globals_override: tuple[str, ...] | None = None
    stdout_capture: bool = True
    plan_tail: tuple[BackendSpec, ...] = ()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "body": unparse(self.body),
            "env": encode_env(self.env),
            "seed": self.seed,
            "rng_stream": self.rng_stream.words() if self.rng_stream else None,
            "lazy": self.lazy,
            "globals_override": list(self.globals_override) if self.globals_override is not None else None,
            "stdout_capture": self.stdout_capture,
            "plan_tail": [str(s) for s in self.plan_tail],
        }

    @classmethod
    def from_json(cls, d: dict) -> TaskSpec:
        stream = d.get("rng_stream")
        override = d.get("globals_override")
        return cls(
            id=d["id"],
            body=parse(d["body"]),
            env=decode_env(d["env"]),
            seed=bool(d["seed"]),
            rng_stream=RngState.from_words(stream) if stream is not None else None,
            lazy=bool(d.get("lazy", False)),
            globals_override=tuple(override) if override is not None else None,
            stdout_capture=bool(d.get("stdout_capture", True)),
            plan_tail=tuple(BackendSpec.parse(s) for s in d.get("plan_tail", [])),
        )

    def __eq__(self, other):
        return isinstance(other, TaskSpec) and self.to_json() == other.to_json()


SUCCESS, EVAL_FAILURE, INFRA_FAILURE = "success", "eval_failure", "infra_failure"


@dataclass(eq=False)
class FutureOutcome:
    kind: str
    value: object = None
    message: str | None = None
    condition_class: str | None = None
    retryable: bool = False
    relay: list[RelayRecord] = field(default_factory=list)
    rng_used: bool = False
    wall_time_ms: int = 0

    @classmethod
    def from_kind(cls, kind: tuple, relay, rng_used, wall_time_ms) -> FutureOutcome:
        if kind[0] == SUCCESS:
            return cls(SUCCESS, value=kind[1], relay=relay, rng_used=rng_used, wall_time_ms=wall_time_ms)
        return cls(EVAL_FAILURE, message=kind[1], condition_class=kind[2], relay=relay,
                   rng_used=rng_used, wall_time_ms=wall_time_ms)

    @classmethod
    def infra(cls, message: str, retryable=True) -> FutureOutcome:
        return cls(INFRA_FAILURE, message=message, retryable=retryable)

    @property
    def ok(self) -> bool:
        return self.kind == SUCCESS

    def to_json(self, timing=True) -> dict:
        d = {"kind": self.kind}
        if self.kind == SUCCESS:
            d["value"] = encode_value(self.value, "<result>")
        elif self.kind == EVAL_FAILURE:
            d["message"] = self.message
            d["condition_class"] = self.condition_class
        else:
            d["message"] = self.message
            d["retryable"] = self.retryable
        d["relay"] = [r.to_wire() for r in self.relay]
        d["rng_used"] = self.rng_used
        if timing:
            d["wall_time_ms"] = self.wall_time_ms
        return d

    @classmethod
    def from_json(cls, d: dict) -> FutureOutcome:
        kind = d["kind"]
        relay = [RelayRecord.from_wire(r) for r in d.get("relay", [])]
        common = dict(relay=relay, rng_used=bool(d.get("rng_used", False)),
                      wall_time_ms=int(d.get("wall_time_ms", 0)))
        if kind == SUCCESS:
            return cls(SUCCESS, value=decode_value(d["value"]), **common)
        if kind == EVAL_FAILURE:
            return cls(EVAL_FAILURE, message=d["message"], condition_class=d["condition_class"], **common)
        if kind == INFRA_FAILURE:
            return cls(INFRA_FAILURE, message=d["message"], retryable=bool(d["retryable"]), **common)
        raise ValueError(f"unknown outcome kind {kind!r}")

    def __eq__(self, other):
        return isinstance(other, FutureOutcome) and self.to_json(False) == other.to_json(False)
