import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from starjam.config import (ConfigError, SchemaError, SystemConfig, ValidationError, apply_overrides,
                            config_from_dict, dbm_to_watt, parse_config, serialize_config, validate,
                            watt_to_dbm)


def test_defaults_from_minimal_document():
    cfg = parse_config("K: 30\nN: 2\n")
    a = cfg.algo_params
    assert (cfg.K, cfg.N, cfg.tau) == (30, 2, 1.0)
    assert (a.epsilon, a.omega, a.zeta0, a.xi0) == (0.01, 1.5, 1e-4, 1e-4)
    assert cfg.sigma2 == pytest.approx(1e-12, rel=1e-12)


def test_missing_power_is_an_error_when_required():
    with pytest.raises(ConfigError, match="Pmax"):
        parse_config("K: 30\n", require_power=True)
    with pytest.raises(ConfigError, match="Pmax"):
        parse_config("K: 30\n").power


def test_lambda0_in_db():
    cfg = parse_config("channel:\n  lambda0_dB: -30\n")
    assert cfg.channel_params.lambda0 == pytest.approx(1e-3, rel=1e-12)


def test_noise_in_dbm():
    assert parse_config("sigma2_dBm: -90").sigma2 == pytest.approx(1e-12)


def test_default_config_is_valid():
    assert validate(SystemConfig()) == []


def test_omega_below_one_is_reported():
    out = validate(SystemConfig().replace_algo(omega=0.9))
    assert len(out) == 1 and "omega" in out[0]


def test_user2_on_reflection_side_is_reported():
    from starjam.config import Geometry
    out = validate(SystemConfig(geometry=Geometry(user2=(45.0, -5.0))))
    assert len(out) == 1 and "geometry" in out[0]


def test_unknown_key_and_type_errors():
    with pytest.raises(SchemaError, match="bogus"):
        parse_config("bogus: 1")
    with pytest.raises(SchemaError, match="K"):
        parse_config("K: 2.5")
    with pytest.raises(SchemaError):
        parse_config("Pmax_W: 1\nPmax_dBm: 30")
    with pytest.raises(ValidationError):
        parse_config("algorithm:\n  mu_update: sideways")


def test_violations_are_all_listed_and_sorted():
    cfg = SystemConfig(K=0, tau=-1.0).replace_algo(omega=1.0)
    out = validate(cfg)
    assert [m.split(":")[0] for m in out] == ["K", "omega", "tau"]


def test_overrides_replace_alternative_spelling():
    doc = apply_overrides({"Pmax_W": 1.0}, ["Pmax_dBm=20", "algorithm.epsilon=0.5", "K=4"])
    cfg = config_from_dict(doc)
    assert cfg.power == pytest.approx(0.1)
    assert cfg.algo_params.epsilon == 0.5 and cfg.K == 4
    with pytest.raises(SchemaError):
        apply_overrides({}, ["novalue"])


@given(p=st.floats(-60, 60))
def test_dbm_round_trip(p):
    assert watt_to_dbm(dbm_to_watt(p)) == pytest.approx(p, abs=1e-9)


@given(K=st.integers(1, 64), N=st.integers(1, 8), p=st.one_of(st.none(), st.floats(0, 100)),
       tau=st.floats(0.01, 10), eps=st.floats(1e-6, 1.0), omega=st.floats(1.01, 5.0),
       seed=st.integers(0, 2 ** 32), rank=st.sampled_from(["dc", "printed"]))
def test_serialization_round_trip(K, N, p, tau, eps, omega, seed, rank):
    cfg = SystemConfig(K=K, N=N, Pmax=p, tau=tau, seed=seed).replace_algo(epsilon=eps, omega=omega,
                                                                           rank_surrogate=rank)
    assert parse_config(serialize_config(cfg)) == cfg


def test_with_power_dbm():
    assert SystemConfig().with_power_dbm(30).power == pytest.approx(1.0)
    assert math.isclose(SystemConfig().with_power_dbm(0).power, 1e-3)
