"""Network descriptors, IRI minting, triple emission and the VoID description."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import PurePosixPath
from typing import Iterable, Optional
from urllib.parse import quote

from .config import DEFAULT_SETTINGS, Settings
from .extractor import ExtractedModel, render_keywords, render_value
from .inference import NetworkType, infer_intended_use
from .ingest import RefKind, Reference, RepositoryRecord
from .rdf import (
    CC,
    DCTERMS,
    DOAP,
    IRI,
    NNO,
    NNO_DATA,
    OWL,
    PIM,
    RDF_TYPE,
    RDFS,
    STANDARD_PREFIXES,
    VOID,
    KnowledgeGraph,
    Literal,
    Triple,
    serialize_turtle,
    triple_key,
)
from .vocab import LayerClass, ROOT_LAYER, TermKind, Vocabulary, build_vocabulary

CC_BY_4 = IRI("https://creativecommons.org/licenses/by/4.0/")
PERSISTENCE_POLICY = PIM + "persistencePolicy"
PERSISTENCE_STATEMENT = (
    "Dataset and network IRIs are minted under the w3id.org redirection service "
    "and are kept stable across releases; retired networks keep their IRIs."
)


def _p(ns: str, local: str) -> IRI:
    return IRI(ns + local)


RDFS_LABEL = _p(RDFS, "label")
RDFS_COMMENT = _p(RDFS, "comment")
RDFS_SEE_ALSO = _p(RDFS, "seeAlso")
RDFS_SUBCLASS = _p(RDFS, "subClassOf")
RDFS_SUBPROPERTY = _p(RDFS, "subPropertyOf")
TYPE = IRI(RDF_TYPE)

# RepositoryRecord field -> predicate, one per mapped row
RECORD_PREDICATES = {
    "created_at": _p(DCTERMS, "created"),
    "description_sources": _p(DCTERMS, "description"),
    "html_url": _p(NNO, "hasRepositoryLink"),
    "license_iri": _p(DCTERMS, "license"),
    "owner_url": _p(DCTERMS, "creator"),
    "updated_at": _p(DCTERMS, "modified"),
    "watchers_count": _p(NNO, "stars"),
    "name": RDFS_LABEL,
    "topics": _p(DOAP, "category"),
}

HAS_LAYER = _p(NNO, "hasLayer")
HAS_OPTIMIZER = _p(NNO, "hasOptimizer")
HAS_LOSS = _p(NNO, "hasLossFunction")
HAS_KEYWORDS = _p(NNO, "hasLayerKeywords")
HAS_PARAMETER = _p(NNO, "hasLayerParameter")
DATASET = _p(NNO, "dataset")
REFERENCES = _p(DCTERMS, "references")
NETWORK_CLASSES = {t: _p(NNO, t.class_name) for t in NetworkType}
CLASS_TO_TYPE = {iri: t for t, iri in NETWORK_CLASSES.items()}

DEFAULT_DATASET = IRI("https://w3id.org/nno/data")
VOID_PREFIXES = dict(STANDARD_PREFIXES, pim=PIM)


class IriCollision(Exception):
    def __init__(self, iri: str, first: str, second: str):
        super().__init__(f"IRI {iri} minted twice: {first} and {second}")
        self.iri = iri
        self.sources = (first, second)


def mint_network_iri(full_name: str, file_stem: str, model_ordinal: int, models_in_repo: int,
                     namespace: str = NNO_DATA) -> IRI:
    if full_name.count("/") != 1 or not all(full_name.split("/")):
        raise ValueError(f"expected owner/repo, got {full_name!r}")
    local = full_name if models_in_repo == 1 else f"{full_name}_{file_stem}_{model_ordinal}"
    return IRI(namespace + quote(local, safe="/"))


@dataclass(frozen=True)
class NetworkDescriptor:
    iri: IRI
    record: RepositoryRecord
    model: ExtractedModel
    network_type: NetworkType
    references: tuple[Reference, ...] = ()
    dataset: Optional[IRI] = None

    @property
    def source(self) -> str:
        return f"{self.record.full_name}:{self.model.source_file}#{self.model.model_ordinal}"


def assemble_descriptor(record: RepositoryRecord, model: ExtractedModel, refs: Iterable[Reference],
                        network_type: NetworkType, models_in_repo: int = 1, dataset: Optional[str] = None,
                        namespace: str = NNO_DATA) -> NetworkDescriptor:
    stem = PurePosixPath(model.source_file).stem
    iri = mint_network_iri(record.full_name, stem, model.model_ordinal, models_in_repo, namespace)
    return NetworkDescriptor(iri, record, model, network_type, tuple(refs), IRI(dataset) if dataset else None)


def check_collisions(descriptors: Iterable[NetworkDescriptor]) -> None:
    seen: dict[str, str] = {}
    for d in descriptors:
        if d.iri in seen:
            raise IriCollision(d.iri, seen[d.iri], d.source)
        seen[d.iri] = d.source


# --------------------------------------------------------------------------
# triples


def record_triples(iri: IRI, record: RepositoryRecord) -> list[Triple]:
    p = RECORD_PREDICATES
    out = [
        Triple(iri, p["created_at"], Literal.datetime(record.created_at)),
        Triple(iri, p["updated_at"], Literal.datetime(record.updated_at)),
        Triple(iri, p["html_url"], record.html_url),
        Triple(iri, p["owner_url"], record.owner_url),
        Triple(iri, p["watchers_count"], Literal.integer(record.watchers_count)),
        Triple(iri, p["name"], Literal(record.name)),
    ]
    out += [Triple(iri, p["description_sources"], Literal(text)) for text in record.description_sources]
    if record.license_iri:
        out.append(Triple(iri, p["license_iri"], record.license_iri))
    out += [Triple(iri, p["topics"], Literal(topic)) for topic in record.topics]
    return out


def layer_iri(network: IRI, position: int) -> IRI:
    return IRI(f"{network}_layer_{position}")


def model_triples(iri: IRI, model: ExtractedModel, network_type: NetworkType,
                  vocab: Optional[Vocabulary] = None) -> list[Triple]:
    vocab = vocab or build_vocabulary()
    out = [Triple(iri, TYPE, NETWORK_CLASSES[network_type])]
    if model.optimizer and model.optimizer.strip():
        opt = vocab.resolve_optimizer(model.optimizer)
        if opt is not None:
            out.append(Triple(iri, HAS_OPTIMIZER, opt.term.iri))
    if model.loss_function and model.loss_function.strip():
        loss = vocab.loss_term(model.loss_function)
        if loss is not None:
            out.append(Triple(iri, HAS_LOSS, loss.term.iri))
    for layer in model.layers:
        node = layer_iri(iri, layer.position)
        out.append(Triple(iri, HAS_LAYER, node))
        if isinstance(layer.layer_class, LayerClass):
            out.append(Triple(node, TYPE, layer.layer_class.term.iri))
        else:
            out.append(Triple(node, TYPE, vocab.iri(ROOT_LAYER)))
        out.append(Triple(node, RDFS_LABEL, Literal(layer.name)))
        out.append(Triple(node, HAS_KEYWORDS, Literal(render_keywords(layer.keywords))))
        for value in layer.positional_params:
            out.append(Triple(node, HAS_PARAMETER, Literal(render_value(value))))
    return out


def reference_triples(iri: IRI, refs: Iterable[Reference]) -> list[Triple]:
    return [Triple(iri, REFERENCES if r.kind is RefKind.SCHOLARLY else RDFS_SEE_ALSO, r.url) for r in refs]


def descriptor_to_triples(d: NetworkDescriptor, vocab: Optional[Vocabulary] = None) -> list[Triple]:
    triples = set(record_triples(d.iri, d.record))
    triples.update(model_triples(d.iri, d.model, d.network_type, vocab))
    triples.update(reference_triples(d.iri, d.references))
    if d.dataset:
        triples.add(Triple(d.iri, DATASET, d.dataset))
    return sorted(triples, key=triple_key)


def build_graph(descriptors: Iterable[NetworkDescriptor], vocab: Optional[Vocabulary] = None) -> KnowledgeGraph:
    descriptors = list(descriptors)
    check_collisions(descriptors)
    g = KnowledgeGraph()
    for d in descriptors:
        g.triples.update(descriptor_to_triples(d, vocab))
    return g


def descriptor_to_json(d: NetworkDescriptor) -> dict:
    r = d.record
    return {
        "iri": d.iri,
        "source_file": d.model.source_file,
        "model_ordinal": d.model.model_ordinal,
        "network_type": d.network_type.value,
        "intended_use": infer_intended_use(d.model).value,
        "repository": {
            "full_name": r.full_name,
            "name": r.name,
            "html_url": r.html_url,
            "owner_url": r.owner_url,
            "created_at": r.created_at,
            "updated_at": r.updated_at,
            "license": r.license_iri,
            "stars": r.watchers_count,
            "topics": list(r.topics),
            "description": r.description,
            "has_readme": r.readme is not None,
        },
        "optimizer": d.model.optimizer,
        "loss": d.model.loss_function,
        "layers": [
            {
                "position": layer.position,
                "class": layer.name,
                "known": isinstance(layer.layer_class, LayerClass),
                "parameters": [render_value(v) for v in layer.positional_params],
                "keywords": render_keywords(layer.keywords),
            }
            for layer in d.model.layers
        ],
        "references": [{"url": ref.url, "kind": ref.kind.value} for ref in d.references],
        "dataset": d.dataset,
    }


# --------------------------------------------------------------------------
# VoID and vocabulary export


def vocabulary_links() -> list[IRI]:
    return [IRI(NNO.rstrip("#")), IRI(DCTERMS), IRI(DOAP.rstrip("#")), IRI(RDFS.rstrip("#"))]


def void_graph(g: KnowledgeGraph, dataset_iri: str = DEFAULT_DATASET, settings: Settings = DEFAULT_SETTINGS) -> KnowledgeGraph:
    ds = IRI(dataset_iri)
    v = KnowledgeGraph(prefixes=dict(VOID_PREFIXES))
    v.add(ds, TYPE, _p(VOID, "Dataset"))
    v.add(ds, _p(DCTERMS, "title"), Literal(settings.dataset_title))
    v.add(ds, _p(DCTERMS, "description"), Literal(settings.dataset_description))
    v.add(ds, RDFS_LABEL, Literal(settings.dataset_title))
    v.add(ds, RDFS_COMMENT, Literal(settings.dataset_description))
    v.add(ds, _p(DCTERMS, "license"), CC_BY_4)
    v.add(ds, _p(CC, "license"), CC_BY_4)
    v.add(ds, _p(VOID, "triples"), Literal.integer(len(g)))
    v.add(ds, _p(VOID, "distinctSubjects"), Literal.integer(len({t.subject for t in g.triples})))
    v.add(ds, _p(VOID, "uriSpace"), Literal(settings.data_namespace))
    for vocabulary in vocabulary_links():
        v.add(ds, _p(VOID, "vocabulary"), vocabulary)
    v.add(ds, IRI(PERSISTENCE_POLICY), Literal(PERSISTENCE_STATEMENT))
    return v


def emit_void(g: KnowledgeGraph, dataset_iri: str = DEFAULT_DATASET, settings: Settings = DEFAULT_SETTINGS) -> str:
    return serialize_turtle(void_graph(g, dataset_iri, settings))


_KIND_CLASS = {
    TermKind.CLASS: _p(OWL, "Class"),
    TermKind.OBJECT_PROPERTY: _p(OWL, "ObjectProperty"),
    TermKind.DATA_PROPERTY: _p(OWL, "DatatypeProperty"),
    TermKind.INDIVIDUAL: _p(OWL, "NamedIndividual"),
}


def vocabulary_graph(vocab: Optional[Vocabulary] = None) -> KnowledgeGraph:
    """The embedded vocabulary as OWL-flavoured triples."""
    vocab = vocab or build_vocabulary()
    g = KnowledgeGraph(prefixes=dict(STANDARD_PREFIXES, owl=OWL))
    ontology = IRI(vocab.namespace.rstrip("#/"))
    g.add(ontology, TYPE, _p(OWL, "Ontology"))
    g.add(ontology, RDFS_COMMENT, Literal(f"Layer and loss names follow: {vocab.framework_snapshot}"))
    for term in vocab.terms:
        g.add(term.iri, TYPE, _KIND_CLASS[term.kind])
        g.add(term.iri, RDFS_LABEL, Literal(term.label))
        if term.comment:
            g.add(term.iri, RDFS_COMMENT, Literal(term.comment))
        if term.parent is None:
            continue
        if term.kind is TermKind.CLASS:
            g.add(term.iri, RDFS_SUBCLASS, term.parent)
        elif term.kind is TermKind.INDIVIDUAL:
            g.add(term.iri, TYPE, term.parent)
        else:
            g.add(term.iri, RDFS_SUBPROPERTY, term.parent)
    return g
