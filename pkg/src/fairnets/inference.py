"""Network type and intended use derived from an extracted architecture."""

from __future__ import annotations

import enum
from typing import Iterable, Optional

from .extractor import ExtractedModel
from .vocab import LayerClass, LayerFamily, LossCategory, Vocabulary, build_vocabulary


class NetworkType(str, enum.Enum):
    FFNN = "FFNN"
    CNN = "CNN"
    RNN = "RNN"

    @property
    def class_name(self) -> str:
        return NETWORK_CLASS[self]


NETWORK_CLASS = {
    NetworkType.FFNN: "FeedForwardNeuralNetwork",
    NetworkType.CNN: "ConvolutionalNeuralNetwork",
    NetworkType.RNN: "RecurrentNeuralNetwork",
}
# order of the checks: a convolutional layer outranks a recurrent one
TYPE_PRECEDENCE = (NetworkType.CNN, NetworkType.RNN, NetworkType.FFNN)


class IntendedUse(str, enum.Enum):
    CLASSIFICATION = "Classification"
    REGRESSION = "Regression"
    UNKNOWN = "Unknown"


def type_from_families(families: Iterable[Optional[LayerFamily]]) -> NetworkType:
    present = set(families)
    if LayerFamily.CONVOLUTIONAL in present:
        return NetworkType.CNN
    if LayerFamily.RECURRENT in present:
        return NetworkType.RNN
    return NetworkType.FFNN


def infer_network_type(model: ExtractedModel) -> NetworkType:
    return type_from_families(
        layer.layer_class.family for layer in model.layers if isinstance(layer.layer_class, LayerClass)
    )


def intended_use_for_loss(loss: Optional[str], vocab: Optional[Vocabulary] = None) -> IntendedUse:
    if not loss or not loss.strip():
        return IntendedUse.UNKNOWN
    category = (vocab or build_vocabulary()).loss_category(loss)
    if category is LossCategory.CLASSIFICATION:
        return IntendedUse.CLASSIFICATION
    if category is LossCategory.REGRESSION:
        return IntendedUse.REGRESSION
    return IntendedUse.UNKNOWN


def infer_intended_use(model: ExtractedModel, vocab: Optional[Vocabulary] = None) -> IntendedUse:
    return intended_use_for_loss(model.loss_function, vocab)
