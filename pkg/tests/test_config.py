"""Config defaults, file parsing, overlay precedence, and validation."""

import pytest

from covrl.config import Config, build_config, parse_config_file
from covrl.coverage import ConfigurationError


def test_defaults_validate_out_of_the_box():
    cfg = Config().validate()
    assert cfg.target == "toy"
    assert cfg.map_exponent == 16
    assert cfg.alpha == 0.6
    assert cfg.top_k == 32
    assert cfg.contrastive_alpha == 0.6
    assert cfg.finetune_epochs == 1
    assert cfg.execs == 50000


def test_file_then_flag_precedence(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nexecs = 123\nalpha = 0.2\nmock_adaptive = false\n")
    cfg = build_config(str(f), {"alpha": 0.9, "seed": None})
    assert cfg.execs == 123          # from file
    assert cfg.alpha == 0.9          # flag wins over file
    assert cfg.mock_adaptive is False
    assert cfg.seed == 0             # None overrides are ignored


def test_file_syntax_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    with pytest.raises(ConfigurationError):
        parse_config_file(str(bad))
    bad.write_text("no_such_key = 1\n")
    with pytest.raises(ConfigurationError):
        parse_config_file(str(bad))
    bad.write_text("execs = many\n")
    with pytest.raises(ConfigurationError):
        parse_config_file(str(bad))
    bad.write_text("mock_adaptive = perhaps\n")
    with pytest.raises(ConfigurationError):
        parse_config_file(str(bad))


@pytest.mark.parametrize(
    "field,value",
    [
        ("reward_scheme", "fancy"),
        ("alpha", 1.5),
        ("alpha", -0.1),
        ("error_sample_rate", 2.0),
        ("mask_rate", 0.0),
        ("mask_rate", 1.5),
        ("mask_max_slots", 0),
        ("iter_cycle", 0),
        ("execs", 0),
        ("strategy_mix", "1,1"),
        ("strategy_mix", "0,0,0"),
        ("strategy_mix", "1,-1,1"),
        ("strategy_mix", "a,b,c"),
    ],
)
def test_validation_rejects_bad_values(field, value):
    with pytest.raises(ConfigurationError):
        Config(**{field: value}).validate()


def test_strategy_weights_parsed():
    assert Config(strategy_mix="2,0,1").strategy_weights() == [2.0, 0.0, 1.0]


def test_boolean_coercion_from_file(tmp_path):
    f = tmp_path / "b.cfg"
    f.write_text("uniform_energy = on\nmock_adaptive = 0\n")
    vals = parse_config_file(str(f))
    assert vals == {"uniform_energy": True, "mock_adaptive": False}


def test_unknown_override_rejected():
    with pytest.raises(ConfigurationError):
        build_config(None, {"bogus": 1})
