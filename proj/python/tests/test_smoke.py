import pytest

import hybrist as hy


def small_config(vehicles=20, duration=60.0, seed=3):
    cfg = hy.MobilityConfig()
    cfg.vehicle_count = vehicles
    cfg.duration = duration
    cfg.seed = seed
    return cfg


def test_umm_grid_counts():
    p = hy.TopologyParams()
    p.umm_grid_rows = 3
    p.umm_grid_cols = 3
    net = hy.build_topology(p, hy.ModelKind.UMM)
    assert net.node_count == 9
    assert net.edge_count == 24
    assert net.violations() == 0


def test_network_text_round_trip():
    net = hy.build_topology(hy.TopologyParams(), hy.ModelKind.HMM)
    again = hy.parse_network(net.serialize())
    assert again.serialize() == net.serialize()


def test_mobility_trace_shape_and_ns2_round_trip():
    net = hy.build_topology(hy.TopologyParams(), hy.ModelKind.HWM)
    trace = hy.run_mobility(net, small_config())
    assert trace.vehicle_count == 20
    assert trace.step_count == 61
    assert trace.end_time() == pytest.approx(60.0)
    text = trace.export(hy.TraceFormat.NS2)
    assert hy.parse_trace(text, hy.TraceFormat.NS2).export(hy.TraceFormat.NS2) == text
    for (x0, y0, _), (x1, y1, _) in zip(trace.sample(10), hy.parse_trace(text, hy.TraceFormat.NS2).sample(10)):
        assert x1 == pytest.approx(x0, abs=1e-6)
        assert y1 == pytest.approx(y0, abs=1e-6)


def test_network_sim_conserves_packets():
    net = hy.build_topology(hy.TopologyParams(), hy.ModelKind.UMM)
    trace = hy.run_mobility(net, small_config())
    report = hy.run_network_sim(trace, [(0, 1, 1.0, 50.0), (2, 3, 2.0, 50.0)], tx_range=250.0, seed=3)
    # 50 ms spacing: 49 s and 48 s windows
    assert report["sent"] == 980 + 960
    assert report["sent"] == report["delivered"] + report["dropped"] + report["in_flight"]
    assert 0.0 <= report["pdf"] <= 1.0


def test_config_errors():
    assert hy.validate_config("") == 3 * 3 * 4 * 6 * 5
    with pytest.raises(hy.ValidationError):
        hy.validate_config("cbr_source_counts = 0")
    with pytest.raises(hy.ParseError, match="line 2"):
        hy.validate_config("seeds = 1\nbogus = 2")


def test_tiny_experiment_is_deterministic():
    cfg = "models = HWM\nvehicle_counts = 10\ncbr_source_counts = 2\ntx_ranges = 250\nseeds = 1,2\nduration = 40\n"
    a = hy.run_experiment(cfg)
    b = hy.run_experiment(cfg, jobs=2)
    assert a["all_ok"]
    assert a == b
    assert len(a["results"].splitlines()) == 1 + 2
