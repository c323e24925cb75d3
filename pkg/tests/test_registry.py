import logging

import pytest
import torch
from torch import nn

from tankloc.errors import ConfigError, UnknownBackboneError, WeightFetchError
from tankloc.modeling.registry import (
    BACKBONE_NAMES,
    audit_parameters,
    backbone_spec,
    build_model,
    count_parameters,
    smallest_backbone,
)

REFERENCE_PARAMS = {
    "resnet18": 11_689_512,
    "maxvit": 29_148_896,
    "lambda_resnet": 10_988_688,
    "lamhalobotnet": 22_569_824,
    "efficientnet_b2": 9_109_994,
    "mobilenet_v3": 5_483_032,
    "densenet121": 7_978_856,
}


def test_registry_names_and_specs():
    assert set(BACKBONE_NAMES) == set(REFERENCE_PARAMS)
    for name, params in REFERENCE_PARAMS.items():
        spec = backbone_spec(name)
        assert spec.expected_params == params
        assert spec.input_side == 256


def test_smallest_backbone_is_mobilenet():
    assert smallest_backbone() == "mobilenet_v3"


def test_count_parameters_affine():
    assert count_parameters(nn.Linear(10, 5)) == 55


def test_build_model_head_size():
    model = build_model("resnet18", 24, pretrained=False)
    with torch.no_grad():
        out = model(torch.zeros(1, 3, 256, 256))
    assert out.shape == (1, 24)


def test_unknown_backbone_lists_valid_names():
    with pytest.raises(UnknownBackboneError) as exc_info:
        build_model("vgg16", 24, pretrained=False)
    assert "resnet18" in str(exc_info.value)


def test_num_classes_validated():
    with pytest.raises(ConfigError):
        build_model("resnet18", 1, pretrained=False)


def test_resnet18_stock_count_exact():
    model = build_model("resnet18", 1000, pretrained=False)
    assert count_parameters(model) == 11_689_512


def test_head_replacement_changes_only_final_affine():
    # Head input width 512 for resnet18: delta = (c1 - c2) * (512 + 1).
    m24 = build_model("resnet18", 24, pretrained=False)
    m10 = build_model("resnet18", 10, pretrained=False)
    assert count_parameters(m24) - count_parameters(m10) == (24 - 10) * (512 + 1)


def test_exact_anchor_audit():
    audits = {a.name: a for a in audit_parameters(("resnet18", "densenet121"))}
    assert audits["resnet18"].counted == 11_689_512
    assert audits["densenet121"].counted == 7_978_856
    assert all(a.within_tolerance for a in audits.values())


def test_builtin_backbones_within_tolerance():
    audits = {a.name: a for a in audit_parameters(("lambda_resnet", "lamhalobotnet"))}
    for audit in audits.values():
        assert audit.within_tolerance, audit


def test_maxvit_variant_deviation_warns(caplog):
    # The pinned 256-input variant differs from the reference count by
    # more than 5%; that is allowed but must be logged.
    with caplog.at_level(logging.WARNING):
        (audit,) = audit_parameters(("maxvit",))
    assert not audit.within_tolerance
    assert any("maxvit" in r.message for r in caplog.records)


def test_pretrained_fetch_failure_is_typed_and_retriable():
    # No network in this environment: the provider fetch must surface as
    # the retriable typed error, not a bare URLError.
    with pytest.raises(WeightFetchError) as exc_info:
        build_model("resnet18", 24, pretrained=True)
    assert exc_info.value.retriable


def test_builtin_pretrained_not_retriable():
    with pytest.raises(WeightFetchError) as exc_info:
        build_model("lambda_resnet", 24, pretrained=True)
    assert not exc_info.value.retriable
