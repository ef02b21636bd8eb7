"""Embedded neural-network ontology: layer/loss taxonomies, properties, individuals.

The term set is compiled from ``data/vocabulary.json``, a versioned manifest
holding one record per term.  Everything else in the package names classes
and properties through the :class:`Vocabulary` built here.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional, Union

from .rdf import IRI


class VocabularyError(Exception):
    """The vocabulary manifest is malformed."""


class TermKind(str, enum.Enum):
    CLASS = "Class"
    OBJECT_PROPERTY = "ObjectProperty"
    DATA_PROPERTY = "DataProperty"
    INDIVIDUAL = "Individual"


class LayerFamily(str, enum.Enum):
    CORE = "Core"
    CONVOLUTIONAL = "Convolutional"
    RECURRENT = "Recurrent"
    POOLING = "Pooling"
    NORMALIZATION = "Normalization"
    EMBEDDING = "Embedding"
    MERGE = "Merge"
    ACTIVATION = "Activation"
    OTHER = "Other"


class LossCategory(str, enum.Enum):
    CLASSIFICATION = "Classification"
    REGRESSION = "Regression"


# family -> local name of the superclass every member descends from
FAMILY_SUPERCLASS = {
    LayerFamily.CORE: "CoreLayer",
    LayerFamily.CONVOLUTIONAL: "ConvolutionalLayer",
    LayerFamily.RECURRENT: "RecurrentLayer",
    LayerFamily.POOLING: "PoolingLayer",
    LayerFamily.NORMALIZATION: "NormalizationLayer",
    LayerFamily.EMBEDDING: "EmbeddingLayer",
    LayerFamily.MERGE: "MergeLayer",
    LayerFamily.ACTIVATION: "ActivationLayer",
}
ROOT_LAYER = "Layer"
CATEGORY_CLASS = {LossCategory.CLASSIFICATION: "ClassificationLoss", LossCategory.REGRESSION: "RegressionLoss"}

REQUIRED_OBJECT_PROPERTIES = ("hasLayer", "hasOptimizer", "hasLossFunction", "hasActivationFunction")
REQUIRED_DATA_PROPERTIES = ("hasRepositoryLink", "dataset", "stars", "hasLayerKeywords", "hasLayerParameter")


@dataclass(frozen=True)
class VocabularyTerm:
    iri: IRI
    kind: TermKind
    label: str
    comment: str = ""
    parent: Optional[IRI] = None

    @property
    def local_name(self) -> str:
        return self.iri.rsplit("#", 1)[-1]


@dataclass(frozen=True)
class LayerClass:
    term: VocabularyTerm
    family: LayerFamily
    canonical_name: str


@dataclass(frozen=True)
class UnknownLayer:
    """A layer constructor name absent from the vocabulary; the name is kept for labeling."""

    name: str


@dataclass(frozen=True)
class LossTerm:
    term: VocabularyTerm
    category: LossCategory
    canonical_name: str


@dataclass(frozen=True)
class OptimizerTerm:
    term: VocabularyTerm
    canonical_name: str


def normalize_loss_name(name: str) -> str:
    return name.strip().lower().replace("-", "").replace("_", "")


@dataclass(frozen=True)
class Vocabulary:
    namespace: str
    framework_snapshot: str
    terms: tuple[VocabularyTerm, ...]
    layer_classes: tuple[LayerClass, ...]
    loss_terms: tuple[LossTerm, ...]
    optimizers: tuple[OptimizerTerm, ...]
    _by_iri: dict = field(repr=False, compare=False)
    _layer_lookup: dict = field(repr=False, compare=False)
    _loss_lookup: dict = field(repr=False, compare=False)
    _optimizer_lookup: dict = field(repr=False, compare=False)

    def iri(self, local_name: str) -> IRI:
        return IRI(self.namespace + local_name)

    def term(self, iri: str) -> Optional[VocabularyTerm]:
        return self._by_iri.get(iri)

    def __contains__(self, iri: str) -> bool:
        return iri in self._by_iri

    def resolve_layer_class(self, name: str) -> Union[LayerClass, UnknownLayer]:
        if not name or not name.strip():
            raise ValueError("layer name must be nonempty")
        return self._layer_lookup.get(name.strip(), UnknownLayer(name))

    def loss_term(self, name: str) -> Optional[LossTerm]:
        if not name or not name.strip():
            raise ValueError("loss name must be nonempty")
        return self._loss_lookup.get(normalize_loss_name(name))

    def loss_category(self, name: str) -> Optional[LossCategory]:
        loss = self.loss_term(name)
        return loss.category if loss else None

    def loss_by_iri(self, iri: str) -> Optional[LossTerm]:
        for loss in self.loss_terms:
            if loss.term.iri == iri:
                return loss
        return None

    def resolve_optimizer(self, name: str) -> Optional[OptimizerTerm]:
        if not name or not name.strip():
            raise ValueError("optimizer name must be nonempty")
        return self._optimizer_lookup.get(name.strip().lower())

    def ancestors(self, iri: str) -> list[IRI]:
        """Parent chain of a term, nearest first."""
        chain = []
        seen = {iri}
        term = self._by_iri.get(iri)
        while term is not None and term.parent is not None:
            if term.parent in seen:
                raise VocabularyError(f"cycle in parent chain at {term.parent}")
            seen.add(term.parent)
            chain.append(term.parent)
            term = self._by_iri.get(term.parent)
        return chain

    def counts(self) -> dict[str, int]:
        """Cardinality report of the shipped term set."""
        out = {kind.value: 0 for kind in TermKind}
        for t in self.terms:
            out[t.kind.value] += 1
        out["SubClass"] = sum(1 for t in self.terms if t.kind is TermKind.CLASS and t.parent)
        return out


def _fail(index: int, message: str) -> VocabularyError:
    return VocabularyError(f"vocabulary manifest record {index}: {message}")


def load_vocabulary(text: str) -> Vocabulary:
    """Compile a vocabulary from manifest JSON text, validating every record."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VocabularyError(f"vocabulary manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("terms"), list):
        raise VocabularyError("vocabulary manifest needs a 'terms' list")
    namespace = doc.get("namespace")
    if not isinstance(namespace, str) or not namespace.endswith(("#", "/")):
        raise VocabularyError("vocabulary manifest needs a namespace ending in '#' or '/'")

    terms: list[VocabularyTerm] = []
    by_iri: dict[IRI, VocabularyTerm] = {}
    records = doc["terms"]
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise _fail(i, "not an object")
        try:
            kind = TermKind(rec.get("kind"))
        except ValueError:
            raise _fail(i, f"unknown kind {rec.get('kind')!r}") from None
        local = rec.get("iri")
        label = rec.get("label")
        if not isinstance(local, str) or not local:
            raise _fail(i, "missing iri")
        if not isinstance(label, str) or not label.strip():
            raise _fail(i, f"{local}: label must be nonempty")
        try:
            iri = IRI(namespace + local)
        except ValueError as exc:
            raise _fail(i, str(exc)) from None
        if iri in by_iri:
            raise _fail(i, f"duplicate IRI {iri}")
        parent = rec.get("parent")
        term = VocabularyTerm(
            iri=iri,
            kind=kind,
            label=label,
            comment=rec.get("comment", ""),
            parent=IRI(namespace + parent) if parent else None,
        )
        terms.append(term)
        by_iri[iri] = term

    for i, term in enumerate(terms):
        if term.parent is None:
            continue
        parent = by_iri.get(term.parent)
        if parent is None:
            raise _fail(i, f"{term.local_name}: unknown parent {term.parent}")
        expected = TermKind.CLASS if term.kind in (TermKind.CLASS, TermKind.INDIVIDUAL) else term.kind
        if parent.kind is not expected:
            raise _fail(i, f"{term.local_name}: parent {parent.local_name} is a {parent.kind.value}")

    def ancestors(iri):
        chain, seen = [], {iri}
        term = by_iri[iri]
        while term.parent is not None:
            if term.parent in seen:
                raise VocabularyError(f"cycle in parent chain of {iri}")
            seen.add(term.parent)
            chain.append(term.parent)
            term = by_iri[term.parent]
        return chain

    root_layer = IRI(namespace + ROOT_LAYER)
    layer_classes, losses, optimizers = [], [], []
    layer_lookup: dict[str, LayerClass] = {}
    loss_lookup: dict[str, LossTerm] = {}
    optimizer_lookup: dict[str, OptimizerTerm] = {}

    for i, rec in enumerate(records):
        term = terms[i]
        chain = ancestors(term.iri)
        canonical = rec.get("canonical")
        if "family" in rec:
            try:
                family = LayerFamily(rec["family"])
            except ValueError:
                raise _fail(i, f"unknown family {rec['family']!r}") from None
            if term.kind is not TermKind.CLASS or not canonical:
                raise _fail(i, "layer classes need kind Class and a canonical name")
            if root_layer not in chain:
                raise _fail(i, f"{canonical} does not descend from {ROOT_LAYER}")
            declared = {f for f, sup in FAMILY_SUPERCLASS.items() if IRI(namespace + sup) in chain}
            if family is LayerFamily.OTHER:
                if declared:
                    raise _fail(i, f"{canonical} is Other but descends from a family superclass")
            elif declared != {family}:
                raise _fail(i, f"{canonical}: family {family.value} disagrees with its superclass")
            layer = LayerClass(term, family, canonical)
            layer_classes.append(layer)
            for name in [canonical, *rec.get("aliases", [])]:
                if name in layer_lookup:
                    raise _fail(i, f"layer name {name!r} declared twice")
                layer_lookup[name] = layer
        elif "category" in rec:
            try:
                category = LossCategory(rec["category"])
            except ValueError:
                raise _fail(i, f"unknown loss category {rec['category']!r}") from None
            if not canonical:
                raise _fail(i, "loss terms need a canonical name")
            if term.parent != IRI(namespace + CATEGORY_CLASS[category]):
                raise _fail(i, f"loss {canonical} must be typed to {CATEGORY_CLASS[category]}")
            loss = LossTerm(term, category, canonical)
            losses.append(loss)
            for name in [canonical, *rec.get("aliases", [])]:
                key = normalize_loss_name(name)
                if key in loss_lookup and loss_lookup[key] is not loss:
                    raise _fail(i, f"loss name {name!r} collides after normalization")
                loss_lookup[key] = loss
        elif term.parent == IRI(namespace + "Optimizer") and term.kind is TermKind.INDIVIDUAL:
            if not canonical or canonical != canonical.lower():
                raise _fail(i, "optimizer canonical names must be lowercase")
            if canonical in optimizer_lookup:
                raise _fail(i, f"optimizer {canonical!r} declared twice")
            opt = OptimizerTerm(term, canonical)
            optimizers.append(opt)
            optimizer_lookup[canonical] = opt

    for name in REQUIRED_OBJECT_PROPERTIES + REQUIRED_DATA_PROPERTIES:
        if IRI(namespace + name) not in by_iri:
            raise VocabularyError(f"vocabulary manifest lacks required property {name}")

    return Vocabulary(
        namespace=namespace,
        framework_snapshot=doc.get("framework_snapshot", ""),
        terms=tuple(terms),
        layer_classes=tuple(layer_classes),
        loss_terms=tuple(losses),
        optimizers=tuple(optimizers),
        _by_iri=by_iri,
        _layer_lookup=layer_lookup,
        _loss_lookup=loss_lookup,
        _optimizer_lookup=optimizer_lookup,
    )


def manifest_text() -> str:
    return resources.files("fairnets").joinpath("data/vocabulary.json").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def build_vocabulary() -> Vocabulary:
    """The vocabulary compiled from the manifest shipped with the package."""
    return load_vocabulary(manifest_text())
