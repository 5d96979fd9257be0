"""Config parsing: defaults, presets, errors with locations, round-trips."""

import pytest

from wsnsim.config import (
    PRESETS,
    ConfigError,
    parse_config,
    parse_text,
    preset_config,
    serialize,
    with_overrides,
)

MINIMAL = "[sim]\nsource = 0\nsink = 1\n"

# independently computed: two-ray received power at 200 m, default radio
P_200 = 1.976423537605237e-12


def test_defaults():
    cfg = parse_text(MINIMAL)
    assert cfg.radio.frequency_hz == 868e6
    assert cfg.radio.tx_power_w == 0.0031622776601683794       # 5 dBm
    assert cfg.radio.rx_threshold_w == 3.9810717055349693e-14  # -104 dBm
    assert cfg.radio.carrier_sense_threshold_w == cfg.radio.rx_threshold_w
    assert cfg.radio.capture_ratio == 10.0
    assert cfg.radio.data_rate_bps == 76800.0
    assert cfg.radio.antenna_height_tx_m == 1.0
    assert cfg.energy.tx_power_w == 0.099
    assert cfg.energy.rx_power_w == 0.042
    assert cfg.energy.initial_energy_j == 20304.0
    assert cfg.packets.data_bytes == 84
    assert cfg.packets.control_bytes == 102
    assert (cfg.topology.rows, cfg.topology.cols) == (3, 3)
    assert cfg.ladder is None
    assert cfg.routing.mode == "newaodv" and cfg.routing.ttl == 30
    assert cfg.routing.jitter_max_s == 0.005
    assert cfg.sim.interval_s == 300.0 and cfg.sim.queue_size == 150
    assert not cfg.sim.zero_cost_discovery and not cfg.sim.lossless_control


def test_range_key_sets_both_thresholds():
    cfg = parse_text("[radio]\nrange_m = 200\n" + MINIMAL)
    assert cfg.radio.rx_threshold_w == P_200
    assert cfg.radio.carrier_sense_threshold_w == P_200


def test_dbm_keys():
    cfg = parse_text("[radio]\ntx_power_dbm = 5\nrx_threshold_dbm = -104\n"
                     "carrier_sense_threshold_dbm = -104\n" + MINIMAL)
    assert cfg.radio.tx_power_w == 0.0031622776601683794
    assert cfg.radio.rx_threshold_w == 3.9810717055349693e-14


def test_comments_and_blank_lines():
    text = ("# header comment\n\n[sim]\n"
            "source = 0  # the origin\n\nsink = 1\n")
    cfg = parse_text(text)
    assert cfg.sim.source == 0 and cfg.sim.sink == 1


def test_error_locations():
    with pytest.raises(ConfigError, match=r"f\.cfg:3: unknown key 'bogus'"):
        parse_text("[sim]\nsource = 0\nbogus = 1\nsink = 1\n", where="f.cfg")
    with pytest.raises(ConfigError, match=r"<config>:1: unknown section"):
        parse_text("[nope]\n")
    with pytest.raises(ConfigError, match=r":2: bad value for seed"):
        parse_text("[sim]\nseed = banana\nsource = 0\nsink = 1\n")
    with pytest.raises(ConfigError, match=r":1: key 'source' appears before"):
        parse_text("source = 0\n")
    with pytest.raises(ConfigError, match=r":1: expected `key = value`"):
        parse_text("just some words\n")
    with pytest.raises(ConfigError, match=r"malformed section header"):
        parse_text("[radio\n")


def test_required_and_cross_checks():
    with pytest.raises(ConfigError, match="missing required keys source and sink"):
        parse_text("[sim]\nseed = 3\n")
    with pytest.raises(ConfigError, match="source and sink must differ"):
        parse_text("[sim]\nsource = 1\nsink = 1\n")
    with pytest.raises(ConfigError, match="source 9 is outside the 3x3"):
        parse_text("[sim]\nsource = 9\nsink = 1\n")
    with pytest.raises(ConfigError, match="override_12_j is outside"):
        parse_text("[topology]\nmin_energy_j = 1\nstep_j = 0\n"
                   "override_12_j = 2\n[sim]\nsource = 0\nsink = 1\n")
    with pytest.raises(ConfigError, match="need both min_energy_j and step_j"):
        parse_text("[topology]\nmin_energy_j = 1\n[sim]\nsource = 0\nsink = 1\n")
    with pytest.raises(ConfigError, match="interval_s must be positive"):
        parse_text("[sim]\nsource = 0\nsink = 1\ninterval_s = 0\n")
    with pytest.raises(ConfigError, match="invalid \\[energy\\]"):
        parse_text("[energy]\nrx_power_w = 0.2\n" + MINIMAL)


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset 'fig9'"):
        preset_config("fig9")
    with pytest.raises(ConfigError, match="unknown preset"):
        parse_text("preset = fig9\n")


def test_preset_fig3():
    cfg = preset_config("fig3")
    assert cfg.topology.kind == "square"
    assert (cfg.topology.rows, cfg.topology.cols) == (3, 3)
    assert cfg.topology.spacing_m == 150.0
    assert cfg.topology.id_layout == "fig3"
    assert cfg.radio.rx_threshold_w == P_200
    assert cfg.ladder.min_energy_j == 0.2 and cfg.ladder.step_j == 0.1
    assert cfg.ladder.ordering == "bottom_to_top_left_to_right"
    assert cfg.ladder.overrides == ()
    assert (cfg.sim.source, cfg.sim.sink) == (7, 5)
    assert cfg.sim.duration_s == 105000.0 and cfg.sim.interval_s == 300.0
    assert cfg.routing.jitter_max_s == 0.05
    assert cfg.energy.idle_power_w == 1e-12


def test_preset_variants():
    case1 = preset_config("case1")
    assert case1.ladder.overrides == ((7, 1.5),)
    case2 = preset_config("case2")
    assert (case2.ladder.min_energy_j, case2.ladder.step_j) == (0.3, 0.08)
    assert case2.ladder.overrides == ((7, 1.41),)
    fig5 = preset_config("fig5")
    assert (fig5.topology.rows, fig5.topology.cols) == (5, 5)
    assert (fig5.sim.source, fig5.sim.sink) == (23, 21)
    assert fig5.ladder.overrides == ((23, 3.9),)
    case3 = preset_config("case3")
    assert (case3.ladder.min_energy_j, case3.ladder.step_j) == (0.02, 0.01)
    assert case3.ladder.overrides == ((23, 0.39),)
    case4 = preset_config("case4")
    assert (case4.sim.source, case4.sim.sink) == (19, 17)
    assert case4.sim.duration_s == 10500.0
    assert (case4.ladder.step_j, case4.ladder.overrides) == (0.2, ((19, 7.5),))
    case5 = preset_config("case5")
    assert (case5.ladder.step_j, case5.ladder.overrides) == (0.06, ((19, 2.46),))


def test_preset_then_override():
    cfg = parse_text("preset = fig3\n[sim]\nseed = 42\n[routing]\nmode = aodv\n")
    base = preset_config("fig3")
    assert cfg.sim.seed == 42
    assert cfg.routing.mode == "aodv"
    assert cfg.radio == base.radio and cfg.topology == base.topology
    # preset after a section is still recognized at top level only
    with pytest.raises(ConfigError, match="unknown key 'preset'"):
        parse_text("[sim]\npreset = fig3\n")


def test_serialize_round_trip():
    for name in sorted(PRESETS):
        cfg = preset_config(name)
        assert parse_text(serialize(cfg)) == cfg
    flags = parse_text("preset = fig3\n[sim]\nzero_cost_discovery = true\n"
                       "lossless_control = true\n[topology]\n"
                       "jitter_offset_m = 2.5\njitter_seed = 9\n")
    assert parse_text(serialize(flags)) == flags
    minimal = parse_text(MINIMAL)
    assert parse_text(serialize(minimal)) == minimal


def test_with_overrides():
    cfg = preset_config("fig3")
    alt = with_overrides(cfg, seed=7, mode="aodv")
    assert alt.sim.seed == 7 and alt.routing.mode == "aodv"
    assert cfg.sim.seed == 0  # original untouched
    assert with_overrides(cfg) == cfg
    with pytest.raises(ConfigError, match="unknown routing mode"):
        with_overrides(cfg, mode="olsr")


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("preset = case1\n[sim]\nseed = 3\n")
    cfg = parse_config(path)
    assert cfg.sim.seed == 3
    assert cfg.ladder.overrides == ((7, 1.5),)
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.cfg")
