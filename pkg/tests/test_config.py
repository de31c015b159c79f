import json

import pytest

from nls_ground.config import (
    ConfigError,
    ExperimentConfig,
    config_to_dict,
    load_config,
    parse_config,
    term_from_record,
    term_to_record,
)
from nls_ground.nonlinearity import (
    CouplingProduct,
    NonlinearitySpec,
    SeparablePower,
    SobolevCritical,
)

MINIMAL = {
    "schema": 1,
    "scenario": "solve",
    "dimension": 3,
    "components": 1,
    "terms": [{"tag": "separable_power", "component": 0, "mu": 1, "p": 4}],
}


def _document(**changes):
    document = json.loads(json.dumps(MINIMAL))
    document.update(changes)
    return document


def test_minimal_document():
    config = parse_config(MINIMAL)

    assert config.scenario == "solve"
    assert config.spec.terms == (SeparablePower(0, 1.0, 4.0),)
    assert config.solver.rho == (1.0,)
    assert config.solver.r_max == 20.0
    assert config.solver.n_intervals == 4000
    assert config.refine_levels == 3
    assert config.output is None


def test_solver_rho_defaults_to_the_first_sweep_point():
    config = parse_config(
        _document(scenario="sweep-rho", axes={"rho": [[0.5], [2.0]]})
    )
    assert config.rho_values == ((0.5,), (2.0,))
    assert config.solver.rho == (0.5,)


def test_grid_and_solver_sections():
    config = parse_config(
        _document(
            grid={"r_max": 5.0, "n_intervals": 500, "autoscale": True},
            solver={"rho": [2.0], "n_starts": 2, "seed": 7},
        )
    )
    assert config.solver.r_max == 5.0
    assert config.solver.n_intervals == 500
    assert config.solver.autoscale
    assert config.solver.n_starts == 2
    assert config.with_seed(11).solver.seed == 11
    assert config.with_threads(4).solver.threads == 4


def test_round_trip_through_a_document():
    document = _document(
        scenario="threshold",
        components=2,
        terms=[
            {"tag": "separable_power", "component": 0, "mu": 1, "p": 4},
            {"tag": "coupling", "beta": 2.0, "exponents": [2, 2]},
            {"tag": "sobolev_critical", "theta": [1, 2]},
        ],
        axes={"eps": [0.01, 0.02]},
        output="out",
    )
    config = parse_config(document)
    assert parse_config(json.loads(json.dumps(config_to_dict(config)))) == config


@pytest.mark.parametrize(
    "changes",
    [
        {"schema": 2},
        {"scenario": "explode"},
        {"dimension": 2},
        {"terms": {"tag": "separable_power"}},
        {"terms": [{"tag": "cubic"}]},
        {"terms": [{"tag": "separable_power", "mu": 1, "p": 4}]},
        {"terms": [{"tag": "norm_power", "mu": 1, "p": 4, "q": 1}]},
        {"terms": [{"tag": "separable_power", "component": 0, "mu": 1, "p": 7}]},
        {"solver": {"rho": [1.0, 1.0]}},
        {"solver": {"rho": [-1.0]}},
        {"solver": {"speed": 3}},
        {"grid": {"n_intervals": 4}},
        {"grid": {"width": 4}},
        {"grid": []},
        {"scenario": "sweep-rho"},
        {"scenario": "sweep-rho", "axes": {"rho": [[1.0, 2.0]]}},
        {"scenario": "sweep-beta"},
        {"scenario": "gn"},
        {"scenario": "threshold"},
        {"refine": {"levels": 2}},
    ],
)
def test_invalid_documents(changes):
    with pytest.raises(ConfigError):
        parse_config(_document(**changes))


def test_missing_required_key():
    document = _document()
    del document["dimension"]
    with pytest.raises(ConfigError, match="dimension"):
        parse_config(document)
    with pytest.raises(ConfigError):
        parse_config([MINIMAL])


def test_bubbles_need_three_or_four_dimensions():
    spec = NonlinearitySpec(
        5, 1, (SeparablePower(0, 1.0, 3.0), SobolevCritical((1.0,)))
    )
    with pytest.raises(ConfigError):
        ExperimentConfig("bubbles", spec, eps_values=(0.01, 0.02))


def test_term_records():
    term = CouplingProduct(1.5, (2.0, 2.0))
    record = term_to_record(term)
    assert record == {"tag": "coupling", "beta": 1.5, "exponents": [2.0, 2.0]}
    assert term_from_record(record) == term
    with pytest.raises(ConfigError):
        term_from_record("coupling")
    with pytest.raises(TypeError):
        term_to_record(object())


def test_load_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(MINIMAL))
    assert load_config(path).scenario == "solve"

    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(path)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_config_errors_are_value_errors():
    assert issubclass(ConfigError, ValueError)
