import json

import pytest
from hypothesis import given, strategies as st

from fairnets.rdf import IRI
from fairnets.vocab import (
    ROOT_LAYER,
    LayerClass,
    LayerFamily,
    LossCategory,
    TermKind,
    UnknownLayer,
    VocabularyError,
    build_vocabulary,
    load_vocabulary,
    manifest_text,
)

VOCAB = build_vocabulary()

# Keras 2.3.1 documentation, page on which each layer is listed.  Frozen oracle.
DOC_PAGES = {
    LayerFamily.CORE: {
        "Dense", "Activation", "Dropout", "Flatten", "Reshape", "Permute", "RepeatVector",
        "Lambda", "ActivityRegularization", "Masking", "SpatialDropout1D", "SpatialDropout2D", "SpatialDropout3D",
    },
    LayerFamily.CONVOLUTIONAL: {
        "Conv1D", "Conv2D", "SeparableConv1D", "SeparableConv2D", "DepthwiseConv2D", "Conv2DTranspose",
        "Conv3D", "Conv3DTranspose", "Cropping1D", "Cropping2D", "Cropping3D", "UpSampling1D",
        "UpSampling2D", "UpSampling3D", "ZeroPadding1D", "ZeroPadding2D", "ZeroPadding3D",
    },
    LayerFamily.RECURRENT: {
        "RNN", "SimpleRNN", "GRU", "LSTM", "ConvLSTM2D", "SimpleRNNCell", "GRUCell", "LSTMCell",
        "CuDNNGRU", "CuDNNLSTM", "StackedRNNCells",
    },
    LayerFamily.POOLING: {
        "MaxPooling1D", "MaxPooling2D", "MaxPooling3D", "AveragePooling1D", "AveragePooling2D",
        "AveragePooling3D", "GlobalMaxPooling1D", "GlobalAveragePooling1D", "GlobalMaxPooling2D",
        "GlobalAveragePooling2D", "GlobalMaxPooling3D", "GlobalAveragePooling3D",
    },
}

# Keras 2.3.1 losses page, split by the kind of target each loss expects.  Frozen oracle.
LOSS_ORACLE = {
    "binary_crossentropy": LossCategory.CLASSIFICATION,
    "categorical_crossentropy": LossCategory.CLASSIFICATION,
    "sparse_categorical_crossentropy": LossCategory.CLASSIFICATION,
    "hinge": LossCategory.CLASSIFICATION,
    "squared_hinge": LossCategory.CLASSIFICATION,
    "categorical_hinge": LossCategory.CLASSIFICATION,
    "kullback_leibler_divergence": LossCategory.CLASSIFICATION,
    "mean_squared_error": LossCategory.REGRESSION,
    "mean_absolute_error": LossCategory.REGRESSION,
    "mean_absolute_percentage_error": LossCategory.REGRESSION,
    "mean_squared_logarithmic_error": LossCategory.REGRESSION,
    "logcosh": LossCategory.REGRESSION,
    "huber_loss": LossCategory.REGRESSION,
    "poisson": LossCategory.REGRESSION,
    "cosine_proximity": LossCategory.REGRESSION,
}

OPTIMIZER_ORACLE = {"sgd", "rmsprop", "adagrad", "adadelta", "adam", "adamax", "nadam"}


def test_superclasses_for_core_recurrent_convolutional():
    for local in ("CoreLayer", "RecurrentLayer", "ConvolutionalLayer", ROOT_LAYER):
        term = VOCAB.term(VOCAB.iri(local))
        assert term is not None and term.kind is TermKind.CLASS


def test_required_properties_present():
    objects = {t.local_name for t in VOCAB.terms if t.kind is TermKind.OBJECT_PROPERTY}
    data = {t.local_name for t in VOCAB.terms if t.kind is TermKind.DATA_PROPERTY}
    assert objects == {"hasLayer", "hasOptimizer", "hasLossFunction", "hasActivationFunction"}
    assert {"hasRepositoryLink", "dataset", "stars", "hasLayerKeywords", "hasLayerParameter"} <= data


def test_counts_report_own_cardinalities():
    counts = VOCAB.counts()
    assert counts["Class"] == sum(1 for t in VOCAB.terms if t.kind is TermKind.CLASS)
    assert counts["ObjectProperty"] == 4
    assert counts["Individual"] == sum(1 for t in VOCAB.terms if t.kind is TermKind.INDIVIDUAL)


def test_build_is_deterministic():
    a = load_vocabulary(manifest_text())
    b = load_vocabulary(manifest_text())
    assert a.terms == b.terms
    assert [repr(t) for t in a.terms] == [repr(t) for t in b.terms]


@pytest.mark.parametrize("family", sorted(DOC_PAGES, key=lambda f: f.value))
def test_layer_families_match_documentation(family):
    for name in DOC_PAGES[family]:
        resolved = VOCAB.resolve_layer_class(name)
        assert isinstance(resolved, LayerClass), name
        assert resolved.family is family, name


def test_resolve_layer_examples():
    assert VOCAB.resolve_layer_class("Conv2D").family is LayerFamily.CONVOLUTIONAL
    assert VOCAB.resolve_layer_class("LSTM").family is LayerFamily.RECURRENT
    assert VOCAB.resolve_layer_class("MyCustomLayer") == UnknownLayer("MyCustomLayer")
    assert VOCAB.resolve_layer_class("  Dense ").canonical_name == "Dense"


def test_layer_lookup_is_case_sensitive():
    assert isinstance(VOCAB.resolve_layer_class("dense"), UnknownLayer)


def test_loss_categories_match_oracle():
    assert {l.canonical_name: l.category for l in VOCAB.loss_terms} == LOSS_ORACLE
    assert VOCAB.loss_category("my_loss") is None


def test_loss_aliases():
    assert VOCAB.loss_term("mse").canonical_name == "mean_squared_error"
    assert VOCAB.loss_term("MeanSquaredError").canonical_name == "mean_squared_error"
    assert VOCAB.loss_category("binary_crossentropy") is LossCategory.CLASSIFICATION


def test_optimizers():
    assert {o.canonical_name for o in VOCAB.optimizers} == OPTIMIZER_ORACLE
    assert VOCAB.resolve_optimizer("adam").canonical_name == "adam"
    assert VOCAB.resolve_optimizer("SGD").canonical_name == "sgd"
    assert VOCAB.resolve_optimizer("lion") is None


def test_taxonomy_reaches_root_within_four_steps():
    root = VOCAB.iri(ROOT_LAYER)
    for lc in VOCAB.layer_classes:
        seen, node, steps = set(), lc.term.iri, 0
        while node != root:
            assert node not in seen
            seen.add(node)
            node = VOCAB.term(node).parent
            steps += 1
            assert node is not None and steps <= 4, lc.canonical_name


def test_parents_have_matching_kind():
    for t in VOCAB.terms:
        if t.parent is None:
            continue
        parent = VOCAB.term(t.parent)
        assert parent is not None
        if t.kind is TermKind.INDIVIDUAL:
            assert parent.kind is TermKind.CLASS
        else:
            assert parent.kind is t.kind


def test_family_iff_descends_from_family_superclass():
    for lc in VOCAB.layer_classes:
        ancestors = {IRI(a).split("#")[1] for a in VOCAB.ancestors(lc.term.iri)}
        for fam, sup in (
            (LayerFamily.CONVOLUTIONAL, "ConvolutionalLayer"),
            (LayerFamily.RECURRENT, "RecurrentLayer"),
            (LayerFamily.CORE, "CoreLayer"),
        ):
            assert (lc.family is fam) == (sup in ancestors), lc.canonical_name


def test_loss_partition():
    cls = {l.term.iri for l in VOCAB.loss_terms if l.category is LossCategory.CLASSIFICATION}
    reg = {l.term.iri for l in VOCAB.loss_terms if l.category is LossCategory.REGRESSION}
    assert not cls & reg
    assert cls | reg == {l.term.iri for l in VOCAB.loss_terms}


def test_layer_round_trip_and_unique_names():
    names = [lc.canonical_name for lc in VOCAB.layer_classes]
    assert len(names) == len(set(names))
    for lc in VOCAB.layer_classes:
        assert VOCAB.resolve_layer_class(lc.canonical_name) == lc


def test_terms_unique_with_labels():
    iris = [t.iri for t in VOCAB.terms]
    assert len(iris) == len(set(iris))
    assert all(t.label.strip() for t in VOCAB.terms)


@given(st.text(max_size=30))
def test_unknown_names_preserved(name):
    if not name.strip():
        return
    resolved = VOCAB.resolve_layer_class(name)
    if isinstance(resolved, UnknownLayer):
        assert resolved.name == name


def test_duplicate_iri_manifest_rejected():
    doc = json.loads(manifest_text())
    key = next(k for k, v in doc.items() if isinstance(v, list) and v)
    doc[key].append(doc[key][0])
    with pytest.raises(VocabularyError):
        load_vocabulary(json.dumps(doc))


def test_malformed_manifest_rejected():
    with pytest.raises(VocabularyError):
        load_vocabulary("{not json")


def test_names_exist_in_installed_framework():
    keras = pytest.importorskip("keras")
    legacy = {"CuDNNGRU", "CuDNNLSTM", "LocallyConnected1D", "LocallyConnected2D", "ThresholdedReLU", "InputLayer"}
    missing = [lc.canonical_name for lc in VOCAB.layer_classes
               if lc.canonical_name not in legacy and not hasattr(keras.layers, lc.canonical_name)]
    assert missing == []
