"""Backend conformance kit: a corpus of Future API programs and a runner.

A backend conforms when every program yields the same fingerprint (values,
errors and relayed records) as it does on the sequential backend.
"""
from .corpus import CORPUS, Check
from .harness import CONFORMANCE_SEED, Harness
from .runner import CheckResult, Report, diff_fingerprints, fingerprint, run_conformance, select_checks

__all__ = [
    "CORPUS", "Check", "CONFORMANCE_SEED", "Harness",
    "CheckResult", "Report", "diff_fingerprints", "fingerprint", "run_conformance", "select_checks",
]
