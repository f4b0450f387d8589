import json

import pytest

from supercrit import config
from supercrit.errors import DomainError
from supercrit.growth import power_exp


def test_load_yaml_file(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("model: {family: power_exp, p: 3}\nsolver: {rtol: 1.0e-9}\ntask: {mu: 2.0}\n")
    cfg = config.load(str(p))
    assert config.build_model(cfg["model"]) == power_exp(3.0)
    assert config.build_solver(cfg["solver"]).rtol == 1e-9


def test_load_json_and_inline(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({"task": {"q": 1.5, "k": 3}}))
    assert config.load(str(p))["task"]["k"] == 3
    assert config.load('{"family": "iter_exp", "depth": 2}') == {
        "model": {"family": "iter_exp", "depth": 2}}
    assert config.load("") == {}


@pytest.mark.parametrize("doc", [
    {"model": {"family": "power_exp", "p": 3, "bogus": 1}},
    {"model": {"family": "cubic"}},
    {"solver": {"rtol": -1.0}},
    {"solver": {"precision": "quad"}},
    {"task": {"q": 2.0}},
    {"task": {"points": 1}},
    {"extra": {}},
])
def test_schema_rejects(doc):
    with pytest.raises(DomainError):
        config.validate(doc)


def test_error_names_location():
    with pytest.raises(DomainError, match="solver/rtol"):
        config.validate({"solver": {"rtol": "x"}})


def test_unparseable_and_non_mapping():
    with pytest.raises(DomainError):
        config.load("{not: [valid")
    with pytest.raises(DomainError):
        config.load("[1, 2]")


def test_model_required():
    with pytest.raises(DomainError):
        config.build_model(None)


def test_resolve_fills_defaults():
    out = config.resolve({"model": {"family": "power_exp", "p": 3}})
    assert out["solver"]["precision"] == "double"
    assert out["model_resolved"]["family"] == "power_exp"
    assert out["model_resolved"]["p"] == 3.0
