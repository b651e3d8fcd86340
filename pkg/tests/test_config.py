import pytest

from gridpv.config import ConfigError, ScenarioConfig, load_scenario, loads


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.toml"
    p.write_text("")
    cfg = load_scenario(p)
    assert cfg.replace(name="scenario") == ScenarioConfig()


def test_step_bound_names_field():
    with pytest.raises(ConfigError, match=r"plant-sim\.step"):
        loads("[plant-sim]\nstep = 1.0\n")


def test_parse_error_has_line():
    with pytest.raises(ConfigError, match="line 2"):
        loads('name = "x"\n[plant-sim\n')


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        loads("[vsc-control]\nbogus = 1\n")


@pytest.mark.parametrize("text, field", [
    ("[plant-sim]\nduration = 0.01\n", "duration"),
    ("[plant-sim]\nduration = 0.2\n", "settle"),
    ('[mppt]\nmethod = "magic"\n', "method"),
    ("[vsc-control]\nband = -1.0\n", "band"),
    ('[[pv-array.irradiance]]\nt = 0.0\nlevels = [2000.0]\n', "irradiance"),
    ("[[pv-array.irradiance]]\nt = 0.0\nlevels = [1000.0]\n[[pv-array.irradiance]]\nt = 0.0\nlevels = [900.0]\n",
     "irradiance"),
    ('[plant-sim.load]\nphase_disconnect = {phase = "a", t_on = 0.4, t_off = 0.3}\n', "phase_disconnect"),
])
def test_validation_names_field(text, field):
    with pytest.raises(ConfigError, match=field):
        loads(text)


def test_case1_matches_system_parameters():
    cfg = load_scenario("case1")
    assert cfg.grid.v_ll_rms == 415.0 and cfg.grid.freq == 50.0
    assert cfg.plant.vsc_inductance == 2.5e-3
    assert (cfg.plant.filter_resistance, cfg.plant.filter_capacitance) == (5.0, 10e-6)
    assert cfg.control.kp == 4.8 and cfg.control.sample_time == 20e-6
    assert cfg.control.v_dcref == 700.0
    assert cfg.array.module.v_mp == 26.3 and cfg.array.module.i_mp == 7.61
    assert cfg.array.rated_power == pytest.approx(32500.0, rel=0.003)
    assert cfg.load.phase_disconnect is None
    assert cfg.duration == 0.6


def test_case2_and_case3_differences():
    c2, c3 = load_scenario("case2"), load_scenario("case3")
    assert c2.load.phase_disconnect == (0, 0.3, 0.4)
    assert [s.t for s in c3.schedule] == [0.0, 0.3]
    assert c3.array_at(0.35).sections[1].irradiance == 700.0
    assert c3.array_at(0.1).sections[1].irradiance == 1000.0


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_scenario("/nonexistent/x.toml")
