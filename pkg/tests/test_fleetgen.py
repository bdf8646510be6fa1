import json

import numpy as np
import pytest

from flexmatrix.core import ChargeSession, Horizon, validate_session
from flexmatrix.errors import ArchetypeInfeasible, EmptyFleet, HorizonTooShort
from flexmatrix.fleetgen import (
    FleetArchetype,
    TruncatedNormal,
    empirical_dwell_probability,
    load_archetype,
    sample_fleet,
    slack_distribution,
)

H = Horizon(48, 1.0, 12.0)


def archetype(arrival=(1.0, 0.0, 0.5, 1.5), dwell=(2.0, 0.0, 0.5, 3.0), energy=(20.0, 0.0, 0.0, 21.0), rate=10.0):
    return FleetArchetype("c", TruncatedNormal(*arrival), TruncatedNormal(*dwell), TruncatedNormal(*energy), rate)


def test_truncated_normal_respects_bounds():
    d = TruncatedNormal(0.0, 5.0, -1.0, 2.0)
    x = d.sample(np.random.default_rng(0), 5000)
    assert x.min() >= -1.0 and x.max() <= 2.0
    assert len(np.unique(x)) == 5000


def test_truncated_normal_zero_std_is_clipped_constant():
    assert TruncatedNormal(5.0, 0.0, 0.0, 3.0).sample(np.random.default_rng(0), 3).tolist() == [3.0] * 3


def test_truncated_normal_validates():
    with pytest.raises(ValueError):
        TruncatedNormal(0.0, -1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        TruncatedNormal(0.0, 1.0, 1.0, 1.0)


def test_empty_fleet():
    assert sample_fleet(load_archetype("freight"), 0, H, 0) == []


def test_zero_variance_sessions_are_identical():
    fleet = sample_fleet(archetype(), 5, Horizon(6), 0)
    assert {(s.arrival_slot, s.departure_slot, s.energy_kwh, s.max_rate_kw) for s in fleet} == {(1, 2, 20.0, 10.0)}
    assert [s.vehicle_id for s in fleet] == ["c-0", "c-1", "c-2", "c-3", "c-4"]


def test_clock_hour_maps_onto_a_noon_start_horizon():
    # 01:00 is 13 hours after a 12:00 start.
    fleet = sample_fleet(archetype(), 1, H, 0)
    assert fleet[0].arrival_slot == 13 and fleet[0].departure_slot == 14


def test_sampling_is_deterministic_in_seed():
    arch = load_archetype("transit")
    assert sample_fleet(arch, 50, H, 9) == sample_fleet(arch, 50, H, 9)
    assert sample_fleet(arch, 50, H, 9) != sample_fleet(arch, 50, H, 10)


@pytest.mark.parametrize("name", ["freight", "transit"])
def test_shipped_archetypes_produce_valid_sessions(name):
    arch = load_archetype(name)
    fleet = sample_fleet(arch, 2000, H, 1)
    for s in fleet:
        validate_session(s, H)
    lo = (arch.arrival_hour.min - H.start_hour) % 24
    assert min(s.arrival_slot for s in fleet) >= int(lo)


def test_archetype_json_round_trip(tmp_path):
    arch = load_archetype("freight")
    path = tmp_path / "a.json"
    path.write_text(json.dumps(arch.to_dict()))
    assert load_archetype(path) == arch


def test_malformed_archetype():
    with pytest.raises(ValueError):
        FleetArchetype.from_dict({"name": "x"})


def test_horizon_too_short():
    with pytest.raises(HorizonTooShort):
        sample_fleet(load_archetype("freight"), 3, Horizon(24, 1.0, 12.0), 0)


def test_unsatisfiable_archetype():
    with pytest.raises(ArchetypeInfeasible):
        sample_fleet(archetype(energy=(100.0, 0.0, 50.0, 150.0)), 2, Horizon(6), 0)


def test_rejection_removes_infeasible_draws():
    # Energy up to 40 kWh but at most 30 kWh deliverable in the slotted dwell.
    fleet = sample_fleet(archetype(energy=(25.0, 10.0, 10.0, 40.0)), 500, Horizon(6), 3)
    assert all(s.energy_kwh <= 10.0 * 2 for s in fleet)


def test_dwell_probability_counts_connected_fraction():
    fleet = [ChargeSession("a", 0, 1, 0, 1), ChargeSession("b", 1, 3, 0, 1)]
    assert empirical_dwell_probability(fleet, Horizon(5)).tolist() == [0.5, 1.0, 0.5, 0.5, 0.0]


def test_dwell_probability_integrates_to_mean_dwell():
    fleet = sample_fleet(load_archetype("freight"), 300, Horizon(96, 0.5, 12.0), 4)
    h = Horizon(96, 0.5, 12.0)
    p = empirical_dwell_probability(fleet, h)
    mean_dwell = np.mean([s.dwell_slots * h.slot_duration_hours for s in fleet])
    assert p.sum() * h.slot_duration_hours == pytest.approx(mean_dwell, rel=1e-12)


def test_dwell_probability_of_empty_fleet():
    with pytest.raises(EmptyFleet):
        empirical_dwell_probability([], H)


def test_slack_distribution():
    fleet = [ChargeSession("a", 0, 3, 20, 10), ChargeSession("b", 0, 1, 20, 10), ChargeSession("c", 0, 9, 5, 10)]
    slack = slack_distribution(fleet, Horizon(10))
    assert slack.hours.tolist() == [2.0, 0.0, 9.5]
    assert slack.median == 2.0
    assert np.isnan(slack_distribution([], H).median)
