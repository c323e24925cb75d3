"""Backbone registry: seven classification networks behind one interface.

Five come from torchvision; the lambda/halo hybrids are house variants
(see zoo). ``build_model`` constructs the stock 1000-class network,
optionally loads pretrained weights, and swaps in a freshly initialized
classification head. ``audit_parameters`` checks stock parameter counts
against the registry anchors: exact for resnet18 and densenet121, within
5% (else a logged warning) for the rest, since implementation-variant
backbones differ across providers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable
from urllib.error import URLError

import torch
from torch import nn

from tankloc.errors import ConfigError, RegistryError, UnknownBackboneError, WeightFetchError
from tankloc.modeling import zoo

log = logging.getLogger(__name__)

INPUT_SIDE = 256

EXACT_ANCHOR_NAMES = ("resnet18", "densenet121")
PARAM_WARN_RELATIVE = 0.05


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    expected_params: int  # stock 1000-class reference count
    provider_id: str
    input_side: int = INPUT_SIDE

    def __post_init__(self):
        if self.expected_params <= 0:
            raise ConfigError(f"expected_params must be positive, got {self.expected_params}")


def _tv(name: str):
    import torchvision.models as tvm

    return getattr(tvm, name)


def _build_maxvit_256() -> nn.Module:
    # The stock torchvision builder hardcodes the 224-input partition; the
    # 256-input variant needs partition size 8.
    from torchvision.models.maxvit import MaxVit

    return MaxVit(
        input_size=(INPUT_SIDE, INPUT_SIDE),
        stem_channels=64,
        partition_size=8,
        block_channels=[64, 128, 256, 512],
        block_layers=[2, 2, 5, 2],
        head_dim=32,
        stochastic_depth_prob=0.2,
        num_classes=1000,
    )


@dataclass(frozen=True)
class _Entry:
    spec: BackboneSpec
    build_stock: Callable[[], nn.Module]
    weights: Callable[[], object] | None  # torchvision weights enum, if any
    head_get: Callable[[nn.Module], nn.Linear]
    head_set: Callable[[nn.Module, nn.Linear], None]


def _entries() -> dict[str, _Entry]:
    import torchvision.models as tvm

    return {
        "resnet18": _Entry(
            BackboneSpec("resnet18", 11_689_512, "torchvision/resnet18"),
            lambda: _tv("resnet18")(weights=None),
            lambda: tvm.ResNet18_Weights.DEFAULT,
            lambda m: m.fc,
            lambda m, h: setattr(m, "fc", h),
        ),
        "maxvit": _Entry(
            BackboneSpec("maxvit", 29_148_896, "torchvision/maxvit_t(input_size=256,partition=8)"),
            _build_maxvit_256,
            None,  # published weights target the 224-input partitioning
            lambda m: m.classifier[5],
            lambda m, h: m.classifier.__setitem__(5, h),
        ),
        "lambda_resnet": _Entry(
            BackboneSpec("lambda_resnet", 10_988_688, "builtin/lambda_resnet26"),
            lambda: zoo.lambda_resnet(),
            None,
            lambda m: m.head,
            lambda m, h: setattr(m, "head", h),
        ),
        "lamhalobotnet": _Entry(
            BackboneSpec("lamhalobotnet", 22_569_824, "builtin/lamhalobotnet50"),
            lambda: zoo.lamhalobotnet(),
            None,
            lambda m: m.head,
            lambda m, h: setattr(m, "head", h),
        ),
        "efficientnet_b2": _Entry(
            BackboneSpec("efficientnet_b2", 9_109_994, "torchvision/efficientnet_b2"),
            lambda: _tv("efficientnet_b2")(weights=None),
            lambda: tvm.EfficientNet_B2_Weights.DEFAULT,
            lambda m: m.classifier[1],
            lambda m, h: m.classifier.__setitem__(1, h),
        ),
        "mobilenet_v3": _Entry(
            BackboneSpec("mobilenet_v3", 5_483_032, "torchvision/mobilenet_v3_large"),
            lambda: _tv("mobilenet_v3_large")(weights=None),
            lambda: tvm.MobileNet_V3_Large_Weights.DEFAULT,
            lambda m: m.classifier[3],
            lambda m, h: m.classifier.__setitem__(3, h),
        ),
        "densenet121": _Entry(
            BackboneSpec("densenet121", 7_978_856, "torchvision/densenet121"),
            lambda: _tv("densenet121")(weights=None),
            lambda: tvm.DenseNet121_Weights.DEFAULT,
            lambda m: m.classifier,
            lambda m, h: setattr(m, "classifier", h),
        ),
    }


BACKBONE_NAMES = (
    "resnet18",
    "maxvit",
    "lambda_resnet",
    "lamhalobotnet",
    "efficientnet_b2",
    "mobilenet_v3",
    "densenet121",
)

# Smallest stock parameter count first; the end-to-end smoke path uses this.
def smallest_backbone() -> str:
    return min(BACKBONE_NAMES, key=lambda n: backbone_spec(n).expected_params)


def _entry(name: str) -> _Entry:
    entries = _entries()
    if name not in entries:
        raise UnknownBackboneError(
            f"unknown backbone {name!r}; valid names: {', '.join(BACKBONE_NAMES)}"
        )
    return entries[name]


def backbone_spec(name: str) -> BackboneSpec:
    return _entry(name).spec


def count_parameters(model: nn.Module) -> int:
    """Exact count of trainable scalar parameters."""
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def build_model(name: str, num_classes: int, pretrained: bool = True) -> nn.Module:
    """Stock backbone with a fresh ``num_classes`` classification head.

    With ``pretrained=True`` the provider's published weights initialize
    the backbone (transfer learning); fetch failures raise a typed,
    retriable error. All seven networks accept 256x256x3 input.
    """
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    entry = _entry(name)
    model = entry.build_stock()
    if pretrained:
        if entry.weights is None:
            raise WeightFetchError(
                f"no published pretrained weights match {entry.spec.provider_id}; "
                "build with pretrained=False to train from scratch",
                retriable=False,
            )
        try:
            weights = entry.weights()
            state = weights.get_state_dict(progress=False)
        except (URLError, OSError, RuntimeError) as exc:
            raise WeightFetchError(
                f"fetching pretrained weights for {name!r} failed (retriable): {exc}"
            ) from exc
        model.load_state_dict(state)
    old_head = entry.head_get(model)
    entry.head_set(model, nn.Linear(old_head.in_features, num_classes))
    return model


@dataclass(frozen=True)
class ParamAudit:
    name: str
    counted: int
    expected: int
    relative_deviation: float
    within_tolerance: bool


def audit_parameters(names: tuple[str, ...] = BACKBONE_NAMES) -> list[ParamAudit]:
    """Compare stock 1000-class parameter counts against registry anchors."""
    audits = []
    for name in names:
        entry = _entry(name)
        counted = count_parameters(entry.build_stock())
        expected = entry.spec.expected_params
        dev = abs(counted - expected) / expected
        if name in EXACT_ANCHOR_NAMES and counted != expected:
            raise RegistryError(
                f"{name} stock parameter count {counted} != required anchor {expected}"
            )
        within = dev <= PARAM_WARN_RELATIVE
        if not within:
            log.warning(
                "backbone %s (%s) has %d parameters, %.2f%% from the reference %d",
                name,
                entry.spec.provider_id,
                counted,
                100 * dev,
                expected,
            )
        audits.append(ParamAudit(name, counted, expected, dev, within))
    return audits
