import json
import math

import pytest

import retrobeam as rb


def default_pair():
    gen = rb.ArrayGeometry.grid(2, 2, 0.0625, 0.125).translated(rb.Vec3(0.0, 0.0, 0.2))
    rx = rb.ArrayGeometry.grid(2, 2, 0.0625, 0.125)
    return gen, rx


def test_channel_modes():
    gen, rx = default_pair()
    ch = rb.synth_channel(gen, rx)
    assert ch.generator_ports() == 4
    assert ch.receiver_ports() == 4
    ea = rb.eig_analysis(ch)
    assert 0.0 < ea.xi_max() < 1.0
    assert rb.efficiency(ch, ea.a_max()) == pytest.approx(ea.xi_max(), rel=1e-12)


def test_channel_json_roundtrip():
    ch = rb.random_passive_channel(3, 2, seed=5)
    back = rb.channel_from_json(rb.channel_to_json(ch))
    assert back.generator_ports() == 3
    assert back.receiver_ports() == 2
    assert back.max_singular_value() == pytest.approx(ch.max_singular_value(), rel=1e-12)


def test_marginal_gain_tracks_ceiling():
    ch = rb.random_passive_channel(4, 4, seed=1)
    lg = rb.find_marginal_lg(ch, seed=1)
    assert lg == pytest.approx(1.0 / rb.eig_analysis(ch).xi_max(), rel=1e-9)


def test_controller_design():
    plant = rb.PlantParams()
    design = rb.design_gains(1e-6, plant)
    assert design.damping == rb.Damping.Overdamped
    pa = rb.poles(design.params, plant)
    assert pa.p1.real < pa.p2.real < 0.0
    assert rb.ramp_error(design.params, 2.0 * design.params.k_i) == pytest.approx(2.0)


def test_scenario_run_and_determinism():
    cfg = json.loads(rb.scenario_template())
    cfg["duration_s"] = 2e-6
    cfg["seed"] = 3
    text = json.dumps(cfg)
    csv = rb.run_scenario_json(text)
    lines = csv.strip().splitlines()
    header = lines[0].split(",")
    assert header == [
        "t_s",
        "power_dbw",
        "r_db",
        "g_db",
        "efficiency",
        "xi_max",
        "alignment",
        "stability",
    ]
    assert len(lines) > 10
    final = lines[-1].split(",")
    assert math.isclose(float(final[1]), -30.0, abs_tol=0.5)
    assert csv == rb.run_scenario_json(text)


def test_comparison_summary():
    cfg = json.loads(rb.scenario_template())
    cfg["duration_s"] = 2e-6
    summary = rb.run_comparison_json(json.dumps(cfg), ["closed-loop", "position"])
    lines = summary.strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("method,")


def test_errors_surface_as_python_exceptions():
    with pytest.raises(rb.Error):
        rb.random_passive_channel(0, 0, seed=1)
    with pytest.raises(rb.Error):
        rb.run_scenario_json("{not json")
