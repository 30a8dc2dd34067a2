import numpy as np
import pytest

from stablab.errors import ParseError, ValidationError
from stablab.models import ExplicitColumn, SmoothedPowerColumn
from stablab.scenario import (REDUCED_CONFIG_OVERRIDES, ColumnSpec,
                              dumps_scenario, load_scenario, loads_scenario,
                              scenario_to_dict)


def test_builtins_build():
    s1 = load_scenario("builtin:S1")
    model, profile, pert, res = s1.build()
    assert s1.name == "S1" and model.n_max == 2000 and pert is None
    assert profile.alpha == 2.0 and model.unit_points == (0.0,)

    s2 = load_scenario("builtin:S2")
    model2, profile2, _, _ = s2.build()
    assert model2.unit_points == (0.0, np.pi)
    assert profile2.alpha == 1.0 and profile2.m_a == 6.0

    p1 = load_scenario("builtin:S1-P1")
    _, _, pert1, _ = p1.build()
    assert pert1.rank == 1
    assert pert1.beta == 1.0 and pert1.gamma == 1.0
    assert isinstance(pert1.b_columns[0], SmoothedPowerColumn)
    assert pert1.c_columns[0].conj and not pert1.b_columns[0].conj

    with pytest.raises(ParseError):
        load_scenario("builtin:NOPE")


def test_round_trip_is_byte_identical():
    for name in ("S1", "S2", "S1-P1"):
        sc = load_scenario(f"builtin:{name}")
        text = dumps_scenario(sc)
        again = dumps_scenario(loads_scenario(text))
        assert again == text


def test_missing_fields_are_named():
    doc = scenario_to_dict(load_scenario("builtin:S1"))
    del doc["profile"]["alpha"]
    from stablab.scenario import scenario_from_dict

    with pytest.raises(ValidationError, match="alpha"):
        scenario_from_dict(doc)
    doc2 = scenario_to_dict(load_scenario("builtin:S1"))
    del doc2["model"]["n_max"]
    with pytest.raises(ValidationError, match="n_max"):
        scenario_from_dict(doc2)
    with pytest.raises(ValidationError, match="name"):
        scenario_from_dict({"model": {"n_max": 10}, "profile": {}})


def test_parse_errors_carry_position():
    with pytest.raises(ParseError, match="line 2"):
        loads_scenario('{\n  "name": bad\n}')
    with pytest.raises(ParseError, match="object"):
        loads_scenario("[1, 2]")


def test_load_scenario_file_round_trip(tmp_path):
    sc = load_scenario("builtin:S1-P1")
    path = tmp_path / "scenario.json"
    path.write_text(dumps_scenario(sc))
    again = load_scenario(str(path))
    assert dumps_scenario(again) == dumps_scenario(sc)
    with pytest.raises(ParseError, match="cannot read"):
        load_scenario(str(tmp_path / "missing.json"))


def test_invalid_profile_rejected_on_load():
    doc = scenario_to_dict(load_scenario("builtin:S1"))
    doc["profile"]["eps_a"] = 2.0  # crowds the single point past the cap
    from stablab.scenario import scenario_from_dict

    with pytest.raises(ValidationError, match="eps_a"):
        scenario_from_dict(doc)


def test_with_config_overrides():
    sc = load_scenario("builtin:S1")
    red = sc.with_config(**REDUCED_CONFIG_OVERRIDES)
    assert red.config.points_per_decade == 8
    assert red.config.uniform_angles == 180
    assert red.config.orbit_max == 10000
    # source scenario is untouched
    assert sc.config.points_per_decade == 10
    res = red.config.resolution()
    assert res.points_per_decade == 8 and res.uniform_angles == 180


def test_with_scales_folds_into_columns():
    sc = load_scenario("builtin:S1-P1").with_scales(2.0, 3.0)
    _, _, pert, _ = sc.build()
    assert pert.b_columns[0].scale == pytest.approx(0.2)
    assert pert.c_columns[0].scale == pytest.approx(0.3)
    # direct build arguments override the stored factors
    _, _, pert2, _ = sc.build(scale_b=1.0, scale_c=1.0)
    assert pert2.b_columns[0].scale == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        load_scenario("builtin:S1").with_scales(2.0, 2.0)


def test_column_spec_families():
    smoothed = ColumnSpec("smoothed_power",
                          (("scale", (0.5, -0.5)), ("t", 2.0), ("w", 1.0))).build()
    assert isinstance(smoothed, SmoothedPowerColumn)
    assert smoothed.scale == 0.5 - 0.5j and smoothed.t == 2.0
    explicit = ColumnSpec("explicit",
                          (("coords", ((1.0, 0.0), (0.0, -2.0))),)).build()
    assert isinstance(explicit, ExplicitColumn)
    assert explicit.coords == (1.0 + 0j, -2.0j)
    with pytest.raises(ValidationError):
        ColumnSpec("mystery", ()).build()
