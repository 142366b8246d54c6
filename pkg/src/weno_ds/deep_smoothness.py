"""Smoothness-multiplier networks for WENO-DS.

A trained model holds two small 1-D CNNs, one reading the features of the
positive split flux and one reading the negative split flux. Each maps the
first and second central differences of its flux to one multiplier per node
in (0, 1). Model files are JSON documents that describe their own layers.
"""

import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import autodiff as ad
from .errors import ModelFileError
from .weno_kernel import DEFAULT_C

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
FEATURE_CHANNELS = 2

class Activation(str, Enum):
    """Activation applied after a convolution layer."""
    ELU = "elu"
    SIGMOID = "sigmoid"

@dataclass(frozen=True)
class ConvLayerSpec:
    """Shape and activation of one stride-1 convolution layer."""
    in_channels: int
    out_channels: int
    kernel_size: int
    activation: Activation = Activation.ELU

    def __post_init__(self) -> None:
        object.__setattr__(self, "activation", Activation(self.activation))
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError(f"Channel counts must be positive: {self}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"Kernel size must be odd and positive, got {self.kernel_size}")

    @property
    def radius(self) -> int:
        return (self.kernel_size - 1) // 2

def default_architecture(channels: Sequence[int] = (FEATURE_CHANNELS, 16, 16, 1),
                         kernels: Sequence[int] = (5, 5, 5)) -> List[ConvLayerSpec]:
    """Layer list with ELU hidden activations and a sigmoid output."""
    if len(channels) != len(kernels) + 1:
        raise ValueError("Need exactly one more channel count than kernels")
    last = len(kernels) - 1
    return [ConvLayerSpec(channels[k], channels[k + 1], kernels[k],
                          Activation.SIGMOID if k == last else Activation.ELU)
            for k in range(len(kernels))]

SCALAR_ARCHITECTURE = ((FEATURE_CHANNELS, 16, 16, 1), (5, 5, 5))
EULER_ARCHITECTURE = ((FEATURE_CHANNELS, 32, 32, 1), (5, 5, 3))

@dataclass
class ConvNet:
    """Layer specs plus weight (out x in x kernel) and bias tensors per layer."""
    layers: List[ConvLayerSpec]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self) -> None:
        validate_network(self.layers, self.weights, self.biases)

    @property
    def receptive_radius(self) -> int:
        return sum(layer.radius for layer in self.layers)

    @property
    def params(self) -> List[np.ndarray]:
        """Flat parameter list [w0, b0, w1, b1, ...]."""
        flat: List[np.ndarray] = []
        for weight, bias in zip(self.weights, self.biases):
            flat.extend([weight, bias])
        return flat

    def with_params(self, params: Sequence[np.ndarray]) -> "ConvNet":
        params = [np.array(p, dtype=float) for p in params]
        return ConvNet(self.layers, params[0::2], params[1::2])

    def copy(self) -> "ConvNet":
        return self.with_params(self.params)

def validate_network(layers: Sequence[ConvLayerSpec], weights: Sequence[Any],
                     biases: Sequence[Any]) -> None:
    """Check layer chaining, activations and parameter shapes.

    Raises:
        ValueError: On the first inconsistency found.
    """
    if not layers:
        raise ValueError("Network has no layers")
    if len(weights) != len(layers) or len(biases) != len(layers):
        raise ValueError(f"{len(layers)} layers but {len(weights)} weights and "
                         f"{len(biases)} biases")
    if layers[0].in_channels != FEATURE_CHANNELS:
        raise ValueError(f"First layer must read {FEATURE_CHANNELS} feature channels")
    if layers[-1].out_channels != 1:
        raise ValueError("Last layer must produce a single multiplier channel")
    for k, layer in enumerate(layers):
        last = k == len(layers) - 1
        expected = Activation.SIGMOID if last else Activation.ELU
        if layer.activation is not expected:
            raise ValueError(f"Layer {k} must use {expected.value}, got {layer.activation.value}")
        if k > 0 and layers[k - 1].out_channels != layer.in_channels:
            raise ValueError(f"Layer {k} reads {layer.in_channels} channels, previous "
                             f"layer writes {layers[k - 1].out_channels}")
        shape = (layer.out_channels, layer.in_channels, layer.kernel_size)
        if tuple(np.shape(ad.value_of(weights[k]))) != shape:
            raise ValueError(f"Layer {k} weight has shape {np.shape(ad.value_of(weights[k]))}, "
                             f"expected {shape}")
        if tuple(np.shape(ad.value_of(biases[k]))) != (layer.out_channels,):
            raise ValueError(f"Layer {k} bias has shape {np.shape(ad.value_of(biases[k]))}")
        if not (np.all(np.isfinite(ad.value_of(weights[k])))
                and np.all(np.isfinite(ad.value_of(biases[k])))):
            raise ValueError(f"Layer {k} holds non-finite parameters")

def init_network(layers: Sequence[ConvLayerSpec], rng: np.random.Generator) -> ConvNet:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases."""
    weights, biases = [], []
    for layer in layers:
        bound = 1.0 / np.sqrt(layer.in_channels * layer.kernel_size)
        weights.append(rng.uniform(-bound, bound,
                                   (layer.out_channels, layer.in_channels, layer.kernel_size)))
        biases.append(np.zeros(layer.out_channels))
    return ConvNet(list(layers), weights, biases)

def zero_network(layers: Sequence[ConvLayerSpec]) -> ConvNet:
    """All-zero parameters; every multiplier evaluates to sigmoid(0) = 0.5."""
    return ConvNet(list(layers),
                   [np.zeros((l.out_channels, l.in_channels, l.kernel_size)) for l in layers],
                   [np.zeros(l.out_channels) for l in layers])

def features(split_flux):
    """First and second central differences stacked as channels.

    Input (..., L) gives output (..., 2, L - 2); output node q sits at input
    node q + 1.
    """
    fdiff1 = split_flux[..., 2:] - split_flux[..., :-2]
    fdiff2 = split_flux[..., 2:] - 2.0 * split_flux[..., 1:-1] + split_flux[..., :-2]
    return ad.stack([fdiff1, fdiff2], axis=-2)

def forward(net: ConvNet, x, params: Optional[Sequence[Any]] = None):
    """Multipliers for input of shape (..., 2, L); returns (..., L - 2k).

    Args:
        net: Network specs and default parameters
        x: Feature channels
        params: Optional replacement parameter list (e.g. tape Variables)

    Raises:
        ValueError: If the input is shorter than the receptive field.
    """
    weights = net.weights if params is None else list(params[0::2])
    biases = net.biases if params is None else list(params[1::2])
    if params is not None:
        validate_network(net.layers, weights, biases)
    length = np.shape(ad.value_of(x))[-1]
    if length < 2 * net.receptive_radius + 1:
        raise ValueError(f"Input of length {length} is shorter than the receptive field "
                         f"{2 * net.receptive_radius + 1}")
    for layer, weight, bias in zip(net.layers, weights, biases):
        x = ad.conv1d(x, weight, bias)
        x = ad.elu(x) if layer.activation is Activation.ELU else ad.sigmoid(x)
    return x[..., 0, :]

def shift_multipliers(delta, mirrored: bool = False) -> Tuple[Any, Any, Any]:
    """Per-node triples (delta_{i-1}, delta_i, delta_{i+1}) for interior nodes.

    Input (..., L) gives three arrays of length L - 2. With ``mirrored`` the
    triple is reversed, as the negative branch reads its stencil backwards.
    """
    triple = (delta[..., :-2], delta[..., 1:-1], delta[..., 2:])
    return tuple(reversed(triple)) if mirrored else triple

class MultiplierSource(ABC):
    """Abstract source of node multipliers for WENO-DS.

    ``node_multipliers`` maps a split flux of shape (..., L) to multipliers of
    shape (..., L - 2 - 2*radius); output node q sits at input node
    q + 1 + radius.
    """

    @property
    @abstractmethod
    def radius(self) -> int:
        raise NotImplementedError("Subclasses must implement radius")

    @abstractmethod
    def node_multipliers(self, split_flux, positive: bool):
        """Multipliers for the positive or negative split flux.

        Args:
            split_flux: f+ or f- values, ghost-extended
            positive: Which branch the flux belongs to

        Returns:
            Multiplier field aligned as described on the class
        """
        raise NotImplementedError("Subclasses must implement node_multipliers")

@dataclass
class ConstantMultiplier(MultiplierSource):
    """Same multiplier on every node; 0.9 with C = 0.1 makes DS reproduce Z."""
    value: float = 0.9

    @property
    def radius(self) -> int:
        return 0

    def node_multipliers(self, split_flux, positive: bool):
        shape = np.shape(ad.value_of(split_flux))
        return np.full(shape[:-1] + (shape[-1] - 2,), float(self.value))

@dataclass
class SmoothnessModel(MultiplierSource):
    """Trained network pair plus the offset C it was trained with."""
    positive: ConvNet
    negative: ConvNet
    C: float = DEFAULT_C
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def radius(self) -> int:
        return max(self.positive.receptive_radius, self.negative.receptive_radius)

    def node_multipliers(self, split_flux, positive: bool):
        return _pair_multipliers(self, split_flux, positive, None, None)

    def bind(self, tape: ad.Tape) -> Tuple["BoundModel", List[ad.Variable], List[ad.Variable]]:
        """Register all parameters on ``tape`` as leaves."""
        pos = [tape.variable(p) for p in self.positive.params]
        neg = [tape.variable(p) for p in self.negative.params]
        return BoundModel(self, pos, neg), pos, neg

    def copy(self) -> "SmoothnessModel":
        return SmoothnessModel(self.positive.copy(), self.negative.copy(), self.C,
                               dict(self.metadata))

@dataclass
class BoundModel(MultiplierSource):
    """A SmoothnessModel whose parameters are read from tape Variables."""
    model: SmoothnessModel
    positive_params: List[Any]
    negative_params: List[Any]

    @property
    def radius(self) -> int:
        return self.model.radius

    def node_multipliers(self, split_flux, positive: bool):
        return _pair_multipliers(self.model, split_flux, positive,
                                 self.positive_params, self.negative_params)

def _pair_multipliers(model: SmoothnessModel, split_flux, positive: bool,
                      positive_params, negative_params):
    net = model.positive if positive else model.negative
    params = positive_params if positive else negative_params
    delta = forward(net, features(split_flux), params)
    # Trim the shallower network so both branches align with the model radius
    extra = model.radius - net.receptive_radius
    if extra:
        delta = delta[..., extra:np.shape(ad.value_of(delta))[-1] - extra]
    return delta

def init_model(layers: Sequence[ConvLayerSpec], rng: np.random.Generator,
               C: float = DEFAULT_C) -> SmoothnessModel:
    return SmoothnessModel(init_network(layers, rng), init_network(layers, rng), C)

def network_to_dict(net: ConvNet) -> Dict[str, Any]:
    return {"layers": [
        {"in_channels": layer.in_channels,
         "out_channels": layer.out_channels,
         "kernel_size": layer.kernel_size,
         "activation": layer.activation.value,
         "weight": np.asarray(weight).tolist(),
         "bias": np.asarray(bias).tolist()}
        for layer, weight, bias in zip(net.layers, net.weights, net.biases)]}

def network_from_dict(data: Dict[str, Any]) -> ConvNet:
    """Rebuild a ConvNet from ``network_to_dict`` output.

    Raises:
        ModelFileError: If the document is malformed or inconsistent.
    """
    try:
        entries = data["layers"]
        layers = [ConvLayerSpec(int(e["in_channels"]), int(e["out_channels"]),
                                int(e["kernel_size"]), Activation(e["activation"]))
                  for e in entries]
        weights = [np.array(e["weight"], dtype=float) for e in entries]
        biases = [np.array(e["bias"], dtype=float) for e in entries]
        return ConvNet(layers, weights, biases)
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"Invalid network description: {e}") from e

def model_to_json(model: SmoothnessModel) -> str:
    document = {
        "format_version": MODEL_FORMAT_VERSION,
        "C": model.C,
        "metadata": model.metadata,
        "networks": {
            "positive": network_to_dict(model.positive),
            "negative": network_to_dict(model.negative),
        },
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"

def save_params(model: SmoothnessModel, path: Union[str, Path]) -> Path:
    """Write ``model`` as JSON; floats keep their shortest round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model_to_json(model))
    logger.debug("Saved model to %s", path)
    return path

def load_params(path: Union[str, Path]) -> SmoothnessModel:
    """Load a model file written by ``save_params``.

    Raises:
        FileNotFoundError: If the file does not exist.
        ModelFileError: If it is not a valid model file.
    """
    path = Path(path)
    text = path.read_text()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ModelFileError(f"{path} does not hold a model document")
    version = document.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFileError(f"{path}: unsupported format version {version!r}")
    try:
        networks = document["networks"]
        C = float(document["C"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"{path}: missing field {e}") from e
    if not (np.isfinite(C) and C > 0):
        raise ModelFileError(f"{path}: C must be a positive finite number, got {C}")
    return SmoothnessModel(positive=network_from_dict(networks.get("positive", {})),
                           negative=network_from_dict(networks.get("negative", {})),
                           C=C, metadata=dict(document.get("metadata", {})))
