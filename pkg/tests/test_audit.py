import dataclasses
import itertools
import json
import random
from decimal import ROUND_HALF_UP, Decimal

import pytest
from hypothesis import given, settings, strategies as st

from fairnets.audit import (
    ArchitectureManifest,
    EvalError,
    ManifestError,
    Status,
    compare_architecture,
    corpus_accuracy,
    corpus_stats,
    fair_report,
    lcs_length,
    load_manifest,
    percent_half_up,
)
from fairnets.corpus import evaluate_corpus
from fairnets.graph import NETWORK_CLASSES, RECORD_PREDICATES, TYPE, build_graph, descriptor_to_triples, void_graph
from fairnets.inference import NetworkType
from fairnets.rdf import IRI, NNO_DATA, KnowledgeGraph, Literal

from conftest import EVAL_CORPUS, ROBUSTNESS
from strategies import random_descriptors

CREATOR = RECORD_PREDICATES["owner_url"]
LINK = RECORD_PREDICATES["html_url"]


def config(*names) -> str:
    return json.dumps({"class_name": "Sequential", "config": {"name": "s", "layers": [{"class_name": n, "config": {}} for n in names]}})


# ---------------------------------------------------------------- manifests


def test_manifest_examples():
    assert load_manifest(config("Dense", "Dropout", "Dense")).layer_class_names == ("Dense", "Dropout", "Dense")
    assert load_manifest(config()).layer_class_names == ()


def test_manifest_missing_class_name():
    doc = json.loads(config("Dense"))
    del doc["config"]["layers"][0]["class_name"]
    with pytest.raises(ManifestError):
        load_manifest(json.dumps(doc))


@pytest.mark.parametrize("text", ["", "not json", "[]", '{"config": {"layers": []}}', '{"class_name": "Sequential", "config": 3}'])
def test_malformed_manifests_rejected(text):
    with pytest.raises(ManifestError):
        load_manifest(text)


def test_framework_written_manifests_load():
    paths = sorted(EVAL_CORPUS.glob("*/manifests/*.model_config.json"))
    assert len(paths) == 10
    for path in paths:
        assert load_manifest(path.read_bytes()).layer_class_names
    loop = load_manifest((ROBUSTNESS / "loop_range.model_config.json").read_text())
    assert [n for n in loop.layer_class_names if n != "InputLayer"] == ["Dense"] * 3


# ---------------------------------------------------------------- comparison


def brute_lcs(a, b) -> int:
    # longest subsequence of a that is also a subsequence of b, by enumeration
    def is_subsequence(sub, seq):
        it = iter(seq)
        return all(x in it for x in sub)

    for k in range(len(a), -1, -1):
        if any(is_subsequence(c, b) for c in itertools.combinations(a, k)):
            return k
    return 0


names = st.lists(st.sampled_from(["Dense", "Dropout", "Conv2D", "LSTM", "Flatten"]), max_size=7)


@given(names, names)
@settings(max_examples=300)
def test_lcs_matches_enumeration(a, b):
    assert lcs_length(a, b) == brute_lcs(a, b)


def test_compare_examples():
    same = compare_architecture(["Dense", "Dropout", "Dense"], ArchitectureManifest("m", ("Dense", "Dropout", "Dense")))
    assert (same.exact_match, same.lcs_ratio) == (True, 1.0)
    partial = compare_architecture(["Dense", "Dense"], ArchitectureManifest("m", ("Dense", "Dropout", "Dense")))
    assert partial.exact_match is False
    assert partial.lcs_ratio == pytest.approx(brute_lcs(("Dense", "Dense"), ("Dense", "Dropout", "Dense")) / 3)
    assert partial.lcs_ratio == pytest.approx(2 / 3)
    empty = compare_architecture([], ArchitectureManifest("m", ("Dense",)))
    assert (empty.exact_match, empty.lcs_ratio) == (False, 0.0)


def test_implicit_input_layer_ignored():
    c = compare_architecture(["Dense"], ArchitectureManifest("m", ("InputLayer", "Dense")))
    assert c.exact_match and c.lcs_ratio == 1.0


@given(names, names)
def test_ratio_symmetric_and_bounded(a, b):
    ab, ba = compare_architecture(a, b), compare_architecture(b, a)
    assert ab.lcs_ratio == ba.lcs_ratio
    assert 0.0 <= ab.lcs_ratio <= 1.0
    if ab.exact_match:
        assert ab.lcs_ratio == 1.0


# ---------------------------------------------------------------- accuracy


def comparisons(matching: int, total: int):
    hit = compare_architecture(["Dense"], ["Dense"])
    miss = compare_architecture(["Dense"], ["LSTM"])
    return [hit] * matching + [miss] * (total - matching)


def test_accuracy_examples():
    assert corpus_accuracy(comparisons(27, 50)) == pytest.approx(0.54)
    assert corpus_accuracy(comparisons(4, 4)) == 1.0
    with pytest.raises(EvalError):
        corpus_accuracy([])


@given(st.integers(1, 200).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_accuracy_in_unit_interval(mt):
    acc = corpus_accuracy(comparisons(*mt))
    assert 0.0 <= acc <= 1.0 and acc == pytest.approx(mt[0] / mt[1])


def test_eval_corpus_accuracy():
    result = evaluate_corpus(EVAL_CORPUS)
    assert not result.missing and not result.errors
    assert len(result.pairs) == 10
    assert corpus_accuracy([p.comparison for p in result.pairs]) == pytest.approx(0.70)
    for p in result.pairs:
        assert p.comparison.lcs_ratio == pytest.approx(brute_lcs(p.comparison.extracted, p.comparison.expected)
                                                       / max(len(p.comparison.extracted), len(p.comparison.expected)))


# ---------------------------------------------------------------- FAIR metrics


def test_corpus_report_thirteen_pass(corpus_merged):
    report = fair_report(corpus_merged)
    assert report.counts() == {"Pass": 13, "Fail": 0, "NotCheckableOffline": 1}
    assert report["Gen2_FM_F4"].status is Status.NOT_CHECKABLE
    assert len(report.entries) == 14


def first_network(g: KnowledgeGraph) -> IRI:
    return sorted(t.subject for t in g.triples if t.predicate == TYPE and t.object in NETWORK_CLASSES.values())[0]


def test_missing_creator_fails_provenance_only(corpus_merged):
    net = first_network(corpus_merged)
    g = KnowledgeGraph()
    g.update(t for t in corpus_merged.triples if not (t.subject == net and t.predicate == CREATOR))
    report = fair_report(g)
    assert report.failed == ["Gen2_FM_R1.2"]
    assert report["Gen2_FM_R1.2"].evidence["missing_provenance"] == 1


def test_foreign_predicate_fails_vocabulary_only(corpus_merged):
    g = KnowledgeGraph()
    g.update(corpus_merged.triples)
    g.add(first_network(g), "http://example.org/private#popularity", Literal("high"))
    report = fair_report(g)
    assert report.failed == ["Gen2_FM_I2"]
    assert report["Gen2_FM_I2"].evidence["unlisted_predicates"] == ["http://example.org/private#popularity"]


def test_duplicate_identifier_fails_uniqueness_only(corpus_build, corpus_merged):
    d1, d2 = [d for r in corpus_build.repos for d in r.descriptors][:2]
    g = KnowledgeGraph()
    g.update(corpus_merged.triples)
    g.update(descriptor_to_triples(dataclasses.replace(d2, iri=d1.iri)))
    report = fair_report(g)
    assert report.failed == ["Gen2_FM_F1A"]


GENERATIVE = ["Gen2_FM_F1B", "Gen2_FM_F3", "Gen2_FM_A2", "Gen2_FM_I1", "Gen2_FM_I2", "Gen2_FM_R1.2", "Gen2_FM_R1.3"]


@given(st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_well_formed_batches_pass_by_construction(rnd):
    g = build_graph(random_descriptors(rnd))
    report = fair_report(g | void_graph(g))
    for metric in GENERATIVE:
        assert report[metric].status is Status.PASS, (metric, report[metric].evidence)


def test_report_json_shape(corpus_merged):
    doc = fair_report(corpus_merged).to_json()
    assert json.loads(json.dumps(doc))["summary"]["Pass"] == 13
    assert {m["status"] for m in doc["metrics"]} <= {"Pass", "Fail", "NotCheckableOffline"}


# ---------------------------------------------------------------- statistics


def test_corpus_stats_numbers(corpus_graph):
    s = corpus_stats(corpus_graph)
    assert (s.repositories, s.unique_users, s.networks) == (25, 21, 25)
    assert s.per_type == {NetworkType.FFNN: (12, 48), NetworkType.CNN: (9, 36), NetworkType.RNN: (4, 16)}


def test_empty_graph_stats():
    s = corpus_stats(KnowledgeGraph())
    assert (s.repositories, s.unique_users, s.networks, s.untyped) == (0, 0, 0, 0)
    assert all(v == (0, 0) for v in s.per_type.values())


def test_single_network_is_full_share():
    g = KnowledgeGraph()
    net = IRI(NNO_DATA + "a/b")
    g.add(net, TYPE, NETWORK_CLASSES[NetworkType.RNN])
    g.add(net, LINK, IRI("https://github.com/a/b"))
    s = corpus_stats(g)
    assert s.per_type[NetworkType.RNN] == (1, 100)


def test_untyped_nodes_excluded_and_reported(corpus_graph):
    g = KnowledgeGraph()
    g.update(corpus_graph.triples)
    g.add(NNO_DATA + "x/untyped", LINK, IRI("https://github.com/x/untyped"))
    s = corpus_stats(g)
    assert s.networks == 25 and s.untyped == 1


@given(st.lists(st.sampled_from(list(NetworkType)), max_size=60))
def test_partition_and_percentages(types):
    g = KnowledgeGraph()
    for i, t in enumerate(types):
        g.add(f"{NNO_DATA}n{i}", TYPE, NETWORK_CLASSES[t])
    s = corpus_stats(g)
    assert sum(c for c, _ in s.per_type.values()) == s.networks == len(types)
    if types:
        assert abs(sum(p for _, p in s.per_type.values()) - 100) <= 1


@given(st.integers(0, 10_000), st.integers(1, 10_000))
def test_half_up_matches_decimal(part, whole):
    part = min(part, whole)
    expected = int((Decimal(100 * part) / Decimal(whole)).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    assert percent_half_up(part, whole) == expected
