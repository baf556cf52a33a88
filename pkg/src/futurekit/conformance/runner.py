"""Run the corpus on a backend and compare against the sequential oracle."""
from __future__ import annotations

import fnmatch
import json
import tempfile
import time
import traceback
from dataclasses import dataclass, field

from ..backends.spi import Plan
from ..core import Session
from .corpus import CORPUS, Check
from .harness import Harness


@dataclass
class CheckResult:
    id: str
    covers: str
    passed: bool
    diff: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self, timing=True) -> dict:
        d = {"id": self.id, "covers": self.covers, "passed": self.passed, "diff": self.diff}
        if timing:
            d["seconds"] = round(self.seconds, 3)
        return d


@dataclass
class Report:
    backend: str
    results: list[CheckResult]
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    @property
    def failed(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def to_dict(self, timing=True) -> dict:
        d = {
            "backend": self.backend,
            "ok": self.ok,
            "passed": sum(r.passed for r in self.results),
            "failed": len(self.failed),
            "checks": [r.to_dict(timing) for r in self.results],
        }
        if timing:
            d["seconds"] = round(self.seconds, 3)
        return d

    def to_json_text(self, timing=True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, ensure_ascii=False) + "\n"

    def table(self) -> str:
        width = max([len(r.id) for r in self.results] + [5])
        lines = [f"conformance on {self.backend}", f"{'check':<{width}}  result  seconds"]
        for r in self.results:
            lines.append(f"{r.id:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.3f}")
            for d in r.diff[:3]:
                lines.append(f"    {d}")
        lines.append(f"{sum(r.passed for r in self.results)}/{len(self.results)} passed "
                     f"in {self.seconds:.1f} s")
        return "\n".join(lines)


def _opener(target):
    """A ``open_session(**opts)`` callable and a label for ``target``."""
    if callable(target) and not isinstance(target, (str, Plan)):
        def open_custom(**opts):
            s = Session(None, **opts)
            s.use_backend(target())
            return s
        return open_custom, getattr(target, "label", getattr(target, "__name__", "custom"))
    plan = Plan.coerce(target)
    return (lambda **opts: Session(plan, **opts)), str(plan)


def fingerprint(check: Check, open_session) -> dict:
    """Run one check program and return what it observed."""
    with tempfile.TemporaryDirectory(prefix="fk-conf-") as tmp:
        h = None
        try:
            h = Harness(lambda **o: open_session(**{**check.session_opts, **o}), tmp)
            check.program(h)
            fp = h.fingerprint()
        except Exception as e:  # a crashing program never passes
            fp = {"crash": f"{type(e).__name__}: {e}", "trace": traceback.format_exc(limit=4)}
            if h is not None:
                fp.update(h.fingerprint())
        finally:
            if h is not None:
                h.close()
    return fp


def diff_fingerprints(expected: dict, actual: dict) -> list[str]:
    out = []
    for side, fp in (("sequential", expected), ("backend", actual)):
        if "crash" in fp:
            out.append(f"{side} crashed: {fp['crash']}")
    es, as_ = expected.get("steps", []), actual.get("steps", [])
    for i in range(max(len(es), len(as_))):
        e = es[i] if i < len(es) else None
        a = as_[i] if i < len(as_) else None
        if e != a:
            out.append(f"step {i}: expected {json.dumps(e, ensure_ascii=False)} got {json.dumps(a, ensure_ascii=False)}")
    er, ar = expected.get("relay", []), actual.get("relay", [])
    if er != ar:
        out.append(f"relay: expected {json.dumps(er, ensure_ascii=False)} got {json.dumps(ar, ensure_ascii=False)}")
    return out


def select_checks(pattern=None, checks=None) -> list[Check]:
    checks = list(CORPUS if checks is None else checks)
    if pattern:
        checks = [c for c in checks if fnmatch.fnmatchcase(c.id, pattern)]
    return checks


def run_conformance(target, pattern=None, checks=None) -> Report:
    """Certify ``target`` (plan text, Plan, BackendSpec, or backend factory).

    Each check runs twice, on the sequential backend and on the target, each
    with its own fresh backend; it passes only on identical fingerprints.
    """
    open_target, label = _opener(target)
    open_seq, _ = _opener("sequential")
    results = []
    start = time.perf_counter()
    for c in select_checks(pattern, checks):
        t0 = time.perf_counter()
        expected = fingerprint(c, open_seq)
        actual = fingerprint(c, open_target)
        diff = diff_fingerprints(expected, actual)
        results.append(CheckResult(c.id, c.covers, not diff, diff, time.perf_counter() - t0))
    return Report(label, results, time.perf_counter() - start)
