"""Extraction accuracy against model-config manifests, FAIR metric checks, corpus statistics."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .extractor import ExtractedModel
from .graph import CLASS_TO_TYPE, NETWORK_CLASSES, PERSISTENCE_POLICY, RECORD_PREDICATES, REFERENCES, TYPE
from .inference import TYPE_PRECEDENCE, NetworkType
from .rdf import (
    CC,
    DCTERMS,
    DOAP,
    IRI,
    NNO,
    OWL,
    PIM,
    RDF,
    RDFS,
    VOID,
    XSD,
    KnowledgeGraph,
    TurtleSyntaxError,
    parse_turtle,
    serialize_turtle,
)

# names present in saved configs of some framework versions only
IMPLICIT_LAYERS = ("InputLayer",)


class ManifestError(Exception):
    pass


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class ArchitectureManifest:
    source_model: str
    layer_class_names: tuple[str, ...]


def _layer_list(config) -> list:
    if isinstance(config, list):
        return config
    if isinstance(config, dict):
        layers = config.get("layers")
        if isinstance(layers, list):
            return layers
        raise ManifestError("model config has no 'layers' list")
    raise ManifestError("model config must be an object or a layer list")


def load_manifest(text: Union[str, bytes], source_model: str = "") -> ArchitectureManifest:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestError(f"manifest is not JSON: {exc}") from None
    if isinstance(doc, dict) and "model_config" in doc and "class_name" not in doc:
        doc = doc["model_config"]
        if isinstance(doc, str):
            return load_manifest(doc, source_model)
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    if not isinstance(doc.get("class_name"), str) or not doc["class_name"]:
        raise ManifestError("manifest lacks top-level class_name")
    names = []
    for i, layer in enumerate(_layer_list(doc.get("config"))):
        if not isinstance(layer, dict) or not isinstance(layer.get("class_name"), str) or not layer["class_name"].strip():
            raise ManifestError(f"layer {i} lacks class_name")
        names.append(layer["class_name"])
    return ArchitectureManifest(source_model, tuple(names))


def lcs_length(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class ArchComparison:
    exact_match: bool
    lcs_ratio: float
    lcs: int = 0
    extracted: tuple[str, ...] = ()
    expected: tuple[str, ...] = ()


def _names(value, ignore: Iterable[str]) -> tuple[str, ...]:
    if isinstance(value, ExtractedModel):
        names = value.layer_names
    elif isinstance(value, ArchitectureManifest):
        names = value.layer_class_names
    else:
        names = list(value)
    skip = set(ignore)
    return tuple(n for n in names if n not in skip)


def compare_architecture(extracted, manifest, ignore: Iterable[str] = IMPLICIT_LAYERS) -> ArchComparison:
    """Exact ordered match plus LCS ratio; ``ignore`` names are dropped from both sides first."""
    a, b = _names(extracted, ignore), _names(manifest, ignore)
    longest = max(len(a), len(b))
    common = lcs_length(a, b)
    ratio = 1.0 if longest == 0 else common / longest
    return ArchComparison(a == b, ratio, common, a, b)


def corpus_accuracy(comparisons: Sequence[ArchComparison]) -> float:
    if not comparisons:
        raise EvalError("no comparisons to score")
    return sum(1 for c in comparisons if c.exact_match) / len(comparisons)


# --------------------------------------------------------------------------
# FAIR metrics


class Status(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    NOT_CHECKABLE = "NotCheckableOffline"


# metric id, name, published outcome (passed / should-pass / not-passed)
METRICS = (
    ("Gen2_FM_F1A", "Identifier Uniqueness", "passed"),
    ("Gen2_FM_F1B", "Identifier persistence", "passed"),
    ("Gen2_FM_F2", "Machine-readability of metadata", "passed"),
    ("Gen2_FM_F3", "Resource Identifier in Metadata", "passed"),
    ("Gen2_FM_F4", "Indexed in a searchable resource", "not-passed"),
    ("Gen2_FM_A1.1", "Access Protocol", "passed"),
    ("Gen2_FM_A1.2", "Access authorization", "passed"),
    ("Gen2_FM_A2", "Metadata Longevity", "should-pass"),
    ("Gen2_FM_I1", "Use a Knowledge Representation Language", "passed"),
    ("Gen2_FM_I2", "Use FAIR Vocabularies", "passed"),
    ("Gen2_FM_I3", "Use Qualified References", "passed"),
    ("Gen2_FM_R1.1", "Accessible Usage License", "passed"),
    ("Gen2_FM_R1.2", "Detailed Provenance", "should-pass"),
    ("Gen2_FM_R1.3", "Meets Community Standards", "should-pass"),
)

PERSISTENT_PREFIX = "https://w3id.org/nno/"
ALLOWED_NAMESPACES = (NNO, DCTERMS, RDFS, RDF, DOAP, XSD, VOID, CC, OWL, PIM)
# single-valued per network; repeats mean two networks were merged under one IRI
SINGLE_VALUED = (RECORD_PREDICATES["html_url"], RECORD_PREDICATES["created_at"], TYPE)

_ARXIV_ABS = re.compile(r"^https://arxiv\.org/abs/(\d{4}\.\d{4,5}(v\d+)?|[a-z][a-z\-]*(\.[A-Z]{2})?/\d{7}(v\d+)?)$")
_DOI_IRI = re.compile(r"^https://doi\.org/10\.\d{4,9}/\S+$")
_EXAMPLES = 5


@dataclass
class MetricResult:
    metric_id: str
    name: str
    status: Status
    evidence: dict = field(default_factory=dict)
    reference_status: str = ""

    def to_json(self) -> dict:
        return {
            "metric": self.metric_id,
            "name": self.name,
            "status": self.status.value,
            "reference_status": self.reference_status,
            "evidence": self.evidence,
        }


@dataclass
class FairReport:
    entries: list[MetricResult]

    def __getitem__(self, metric_id: str) -> MetricResult:
        for e in self.entries:
            if e.metric_id == metric_id:
                return e
        raise KeyError(metric_id)

    def counts(self) -> dict[str, int]:
        out = {s.value: 0 for s in Status}
        for e in self.entries:
            out[e.status.value] += 1
        return out

    @property
    def failed(self) -> list[str]:
        return [e.metric_id for e in self.entries if e.status is Status.FAIL]

    def to_json(self) -> dict:
        return {"metrics": [e.to_json() for e in self.entries], "summary": self.counts()}


def network_nodes(g: KnowledgeGraph, index: Optional[dict] = None) -> list[IRI]:
    index = index if index is not None else g.by_subject()
    classes = set(NETWORK_CLASSES.values())
    return sorted(s for s, preds in index.items() if classes.intersection(preds.get(TYPE, ())))


def _verdict(ok: bool) -> Status:
    return Status.PASS if ok else Status.FAIL


def fair_report(g: KnowledgeGraph) -> FairReport:
    """Offline FAIR checks over a data graph merged with its VoID description."""
    index = g.by_subject()
    networks = network_nodes(g, index)
    datasets = sorted(s for s, preds in index.items() if IRI(VOID + "Dataset") in preds.get(TYPE, ()))
    results: dict[str, tuple[Status, dict]] = {}

    merged = [n for n in networks if any(len(index[n].get(p, ())) > 1 for p in SINGLE_VALUED)]
    results["Gen2_FM_F1A"] = (_verdict(not merged), {"networks": len(networks), "merged_identifiers": len(merged), "examples": merged[:_EXAMPLES]})

    foreign = [n for n in networks if not n.startswith(PERSISTENT_PREFIX)]
    results["Gen2_FM_F1B"] = (_verdict(not foreign), {"non_persistent": len(foreign), "examples": foreign[:_EXAMPLES]})

    try:
        reparsed = parse_turtle(serialize_turtle(g))
        parses, round_trips, parse_error = True, reparsed == g, None
    except TurtleSyntaxError as exc:
        parses, round_trips, parse_error = False, False, str(exc)
    results["Gen2_FM_F2"] = (_verdict(round_trips and bool(datasets)), {"round_trip": round_trips, "void_datasets": len(datasets)})

    link = RECORD_PREDICATES["html_url"]
    no_link = [n for n in networks if not index[n].get(link)]
    results["Gen2_FM_F3"] = (_verdict(not no_link), {"missing_repository_link": len(no_link), "examples": no_link[:_EXAMPLES]})

    results["Gen2_FM_F4"] = (Status.NOT_CHECKABLE, {"reason": "requires a live search-engine lookup"})

    plain = sorted(s for s in index if not s.startswith("https://"))
    results["Gen2_FM_A1.1"] = (_verdict(not plain), {"subjects": len(index), "non_https": len(plain), "examples": plain[:_EXAMPLES]})

    creator = RECORD_PREDICATES["owner_url"]
    access = [(n, o) for n in networks for p in (link, creator) for o in index[n].get(p, ())]
    insecure = [str(o) for _, o in access if not (isinstance(o, IRI) and o.startswith("https://"))]
    results["Gen2_FM_A1.2"] = (_verdict(not insecure), {"links_checked": len(access), "non_https": len(insecure), "examples": insecure[:_EXAMPLES]})

    policy = IRI(PERSISTENCE_POLICY)
    with_policy = [d for d in datasets if index[d].get(policy)]
    results["Gen2_FM_A2"] = (_verdict(bool(with_policy)), {"datasets_with_policy": len(with_policy)})

    results["Gen2_FM_I1"] = (_verdict(parses), {"format": "text/turtle", "error": parse_error})

    predicates = sorted({t.predicate for t in g.triples})
    unlisted = [p for p in predicates if not p.startswith(ALLOWED_NAMESPACES)]
    results["Gen2_FM_I2"] = (_verdict(not unlisted), {"predicates": len(predicates), "unlisted_predicates": unlisted})

    refs = [t.object for t in g.triples if t.predicate == REFERENCES]
    unqualified = sorted(str(o) for o in refs if not (isinstance(o, IRI) and (_ARXIV_ABS.match(o) or _DOI_IRI.match(o))))
    results["Gen2_FM_I3"] = (_verdict(not unqualified), {"references": len(refs), "unqualified": len(unqualified), "examples": unqualified[:_EXAMPLES]})

    license_p = IRI(DCTERMS + "license")
    licensed_datasets = [d for d in datasets if index[d].get(license_p)]
    licensed_networks = sum(1 for n in networks if index[n].get(license_p))
    results["Gen2_FM_R1.1"] = (_verdict(bool(licensed_datasets)), {"dataset_license": bool(licensed_datasets), "networks_with_license": licensed_networks, "networks": len(networks)})

    created = RECORD_PREDICATES["created_at"]
    lacking = [n for n in networks if not index[n].get(creator) or not index[n].get(created)]
    results["Gen2_FM_R1.2"] = (_verdict(not lacking), {"missing_provenance": len(lacking), "examples": lacking[:_EXAMPLES]})

    label, comment = IRI(RDFS + "label"), IRI(RDFS + "comment")
    described = [d for d in datasets if index[d].get(label) and index[d].get(comment)]
    results["Gen2_FM_R1.3"] = (_verdict(bool(described)), {"datasets": len(datasets), "described_datasets": len(described)})

    entries = [MetricResult(mid, name, *results[mid], reference_status=ref) for mid, name, ref in METRICS]
    return FairReport(entries)


# --------------------------------------------------------------------------
# corpus statistics


def percent_half_up(part: int, whole: int) -> int:
    if whole == 0:
        return 0
    return (200 * part + whole) // (2 * whole)


@dataclass(frozen=True)
class StatsReport:
    repositories: int
    unique_users: int
    networks: int
    per_type: dict  # NetworkType -> (count, percent)
    untyped: int = 0

    def to_json(self) -> dict:
        return {
            "repositories": self.repositories,
            "unique_users": self.unique_users,
            "networks": self.networks,
            "per_type": {t.value: {"count": c, "percent": p} for t, (c, p) in self.per_type.items()},
            "untyped_nodes": self.untyped,
        }


def corpus_stats(g: KnowledgeGraph) -> StatsReport:
    index = g.by_subject()
    networks = network_nodes(g, index)
    link = RECORD_PREDICATES["html_url"]
    creator = RECORD_PREDICATES["owner_url"]
    repositories = {o for s in index for o in index[s].get(link, ())}
    users = {o for s in index for o in index[s].get(creator, ())}
    counts = {t: 0 for t in NetworkType}
    for n in networks:
        types = {CLASS_TO_TYPE[c] for c in index[n].get(TYPE, ()) if c in CLASS_TO_TYPE}
        chosen = next(t for t in TYPE_PRECEDENCE if t in types)
        counts[chosen] += 1
    # resources described like networks but carrying no network type
    typed = set(networks)
    untyped = sum(1 for s, preds in index.items() if preds.get(link) and s not in typed)
    total = len(networks)
    per_type = {t: (counts[t], percent_half_up(counts[t], total)) for t in (NetworkType.FFNN, NetworkType.CNN, NetworkType.RNN)}
    return StatsReport(len(repositories), len(users), total, per_type, untyped)
