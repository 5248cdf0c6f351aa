from pathlib import Path

import pytest

from gen import random_case
from hgum.schema import load_schema, normalize, parse_client_schema
from hgum.sim import (
    CycleModel,
    list_cycles_closed_form,
    optimal_cycles,
    run_loopback,
    sweep,
    sweep_csv,
    sweep_schema,
)
from hgum.wire import WireConfig

DATA = Path(__file__).parent / "data"


def I4(v):
    return v.to_bytes(4, "little")


def test_cycle_model():
    m = CycleModel()
    assert m.data_token_cost(16) == 1 and m.data_token_cost(1) == 1 and m.data_token_cost(0) == 1
    assert m.data_token_cost(17) == 2 and m.data_token_cost(32) == 2
    with pytest.raises(ValueError):
        CycleModel(frame=-1)


def test_listarray_loopback():
    sdef = load_schema((DATA / "listarray.schema.json").read_text(), "Msg")
    client = parse_client_schema((DATA / "listarray.client.json").read_text(), normalize(sdef))
    value = ([[(I4(1), I4(2)), (I4(3), I4(4))]], I4(5))
    rep = run_loopback(value, sdef, client)
    assert rep.round_trip_ok and rep.error is None
    assert rep.optimal_cycles == optimal_cycles(value, sdef, client) == 9
    assert rep.frame_count == 2
    assert rep.wire_bytes == {"sw_to_hw": 28, "hw_to_hw": 68, "hw_to_sw": 28}
    assert set(rep.stage_cycles) == {"des_sw", "ser_hw", "des_hw", "ser_sw"}
    assert rep.bottleneck_cycles == max(rep.stage_cycles.values())
    assert 0 < rep.ratio < 1


def test_array_small_and_large():
    sdef, client = sweep_schema("array")
    rep = run_loopback(([bytes(16)],), sdef, client)
    assert rep.optimal_cycles == 2 and rep.ratio < 1
    rep = run_loopback(([bytes(16)] * 8192,), sdef, client)
    assert rep.round_trip_ok and rep.ratio >= 0.99


def test_list_n1_optimal():
    sdef, client = sweep_schema("list")
    rep = run_loopback(([bytes(16)],), sdef, client)
    assert rep.optimal_cycles == 3


def test_array_marginal_cost_constant():
    rows = sweep("array", range(1, 300))
    diffs = {b[2] - a[2] for a, b in zip(rows, rows[1:])}
    assert diffs == {1}


@pytest.mark.parametrize("frame_phits", [1, 2, 7, 500])
def test_list_closed_form(frame_phits):
    cfg = WireConfig(max_frame_payload_phits=frame_phits)
    ns = [1, 2, 3, 6, 7, 8, 14, 15, 499, 500, 501, 1000, 1001]
    for n, opt, meas, ratio, ok in sweep("list", ns, cfg):
        assert ok and opt == n + 2
        assert meas == list_cycles_closed_form(n, cfg)
        assert ratio < 1


def test_closed_form_with_other_model():
    model = CycleModel(data_per_phit=2, control=3, context=5, frame=7, message=11)
    for n, _, meas, _, ok in sweep("list", [1, 10, 600], WireConfig(), model):
        assert ok and meas == list_cycles_closed_form(n, WireConfig(), model)


def test_sweep_csv_and_determinism():
    rows = sweep("array", [1, 2, 4])
    text = sweep_csv(rows)
    assert text.splitlines()[0] == "n,optimal_cycles,measured_cycles,ratio"
    assert text.splitlines()[1] == "1,2,8,0.250000"
    assert sweep_csv(sweep("array", [1, 2, 4])) == text
    with pytest.raises(ValueError):
        sweep("array", [0])
    with pytest.raises(ValueError):
        sweep("map", [1])


def test_engine_error_gives_failed_report():
    sdef, tree, client, value = random_case(3)
    rep = run_loopback(value, sdef, client, WireConfig(max_depth=1)) if tree.depth() > 1 else None
    if rep is not None:
        assert not rep.round_trip_ok and "ConfigMismatch" in rep.error
    sdef, client = sweep_schema("list")
    rep = run_loopback(([bytes(16)],), sdef, client, WireConfig(phit_bytes=4))
    assert not rep.round_trip_ok and rep.error.startswith("ConfigMismatch")


@pytest.mark.parametrize("seed", range(40))
def test_random_loopback(seed):
    sdef, _, client, value = random_case(seed, budget=200)
    for fp in (1, 2, 500):
        assert run_loopback(value, sdef, client, WireConfig(max_frame_payload_phits=fp)).round_trip_ok
