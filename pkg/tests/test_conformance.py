import json

import pytest

from futurekit.conformance import CORPUS, run_conformance, select_checks
from futurekit.conformance.faults import dropping_warnings

FEATURES = {
    "capture immutability", "blocking at capacity", "error relay", "stdout/condition ordering",
    "immediateCondition delivery", "missing-global failure", "globals override",
    "non-exportable rejection", "seeded RNG reproducibility", "RNG misuse warning",
    "nested-plan sequential default", "lazy futures", "value idempotence",
    "future_map equivalence", "future_either",
}


def test_corpus_size_and_coverage():
    assert len(CORPUS) >= 25
    assert len({c.id for c in CORPUS}) == len(CORPUS)
    assert FEATURES <= {c.covers for c in CORPUS}


def test_sequential_is_reflexive():
    report = run_conformance("sequential")
    assert report.ok, report.table()


def test_reports_are_deterministic():
    a = run_conformance("sequential", pattern="relay.*")
    b = run_conformance("sequential", pattern="relay.*")
    assert a.to_dict(timing=False) == b.to_dict(timing=False)
    assert json.loads(a.to_json_text())["passed"] == len(a.results)


def test_filter():
    ids = [c.id for c in select_checks("rng.*")]
    assert ids and all(i.startswith("rng.") for i in ids)


def test_dropped_warnings_are_caught():
    report = run_conformance(dropping_warnings("sequential"))
    failed = {r.id for r in report.failed}
    assert failed == {"relay.example_order", "relay.interleaved", "error.relayed_with_output"}
    # value-only checks are unaffected
    assert {"value.arithmetic", "value.real_bits", "future_map.equivalence"}.isdisjoint(failed)


@pytest.mark.slow
def test_pool_passes():
    report = run_conformance("process_pool:2")
    assert report.ok, report.table()


@pytest.mark.slow
def test_cluster_passes(cluster_plan):
    report = run_conformance(cluster_plan)
    assert report.ok, report.table()
