"""Local filtering of network nodes in a loaded graph."""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from typing import Optional

from .graph import CLASS_TO_TYPE, HAS_LAYER, HAS_LOSS, RDFS_LABEL, RECORD_PREDICATES, TYPE
from .inference import TYPE_PRECEDENCE, IntendedUse, NetworkType
from .ingest import normalize_license
from .audit import network_nodes
from .rdf import IRI, KnowledgeGraph, Literal, is_iri
from .vocab import LayerClass, LossCategory, Vocabulary, build_vocabulary


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class QueryFilter:
    type: Optional[NetworkType] = None
    year_created: Optional[int] = None
    license: Optional[str] = None
    layer: Optional[str] = None
    creator: Optional[str] = None
    intended_use: Optional[IntendedUse] = None

    def is_empty(self) -> bool:
        return all(getattr(self, f.name) is None for f in fields(self))


@dataclass(frozen=True)
class QueryRow:
    iri: IRI
    label: Optional[str]
    type: NetworkType
    created: Optional[str]

    def to_json(self) -> dict:
        return {"iri": self.iri, "label": self.label, "type": self.type.value, "created": self.created}


_YEAR = re.compile(r"^(-?\d{4,})-")


def year_of(lexical: str) -> Optional[int]:
    m = _YEAR.match(lexical)
    return int(m.group(1)) if m else None


def license_target(value: str) -> Optional[IRI]:
    """An IRI given as is, or the canonical IRI of an SPDX identifier."""
    if is_iri(value):
        return IRI(value)
    return normalize_license(value)


def network_type_of(types) -> Optional[NetworkType]:
    present = {CLASS_TO_TYPE[t] for t in types if t in CLASS_TO_TYPE}
    return next((t for t in TYPE_PRECEDENCE if t in present), None)


def use_of(loss_iris, vocab: Vocabulary) -> IntendedUse:
    for iri in loss_iris:
        loss = vocab.loss_by_iri(iri)
        if loss is not None:
            return IntendedUse.CLASSIFICATION if loss.category is LossCategory.CLASSIFICATION else IntendedUse.REGRESSION
    return IntendedUse.UNKNOWN


def query_graph(g: KnowledgeGraph, f: QueryFilter, vocab: Optional[Vocabulary] = None) -> list[QueryRow]:
    if f.is_empty():
        raise QueryError("query needs at least one filter")
    vocab = vocab or build_vocabulary()
    index = g.by_subject()
    created_p = RECORD_PREDICATES["created_at"]
    license_p = RECORD_PREDICATES["license_iri"]
    creator_p = RECORD_PREDICATES["owner_url"]

    wanted_license = license_target(f.license) if f.license is not None else None
    layer_class = None
    if f.layer is not None and f.layer.strip():
        resolved = vocab.resolve_layer_class(f.layer)
        layer_class = resolved.term.iri if isinstance(resolved, LayerClass) else None

    rows = []
    for node in network_nodes(g, index):
        preds = index[node]
        ntype = network_type_of(preds.get(TYPE, ()))
        created = [o.lexical for o in preds.get(created_p, ()) if isinstance(o, Literal)]
        if f.type is not None and ntype is not f.type:
            continue
        if f.year_created is not None and f.year_created not in {year_of(c) for c in created}:
            continue
        if f.license is not None and (wanted_license is None or wanted_license not in preds.get(license_p, ())):
            continue
        if f.creator is not None and f.creator not in preds.get(creator_p, ()):
            continue
        if f.layer is not None:
            hit = False
            for layer in preds.get(HAS_LAYER, ()):
                lp = index.get(layer, {})
                if (layer_class is not None and layer_class in lp.get(TYPE, ())) or Literal(f.layer) in lp.get(RDFS_LABEL, ()):
                    hit = True
                    break
            if not hit:
                continue
        if f.intended_use is not None and use_of(preds.get(HAS_LOSS, ()), vocab) is not f.intended_use:
            continue
        labels = [o.lexical for o in preds.get(RDFS_LABEL, ()) if isinstance(o, Literal)]
        rows.append(QueryRow(node, labels[0] if labels else None, ntype, created[0] if created else None))
    return rows
