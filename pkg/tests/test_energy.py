import numpy as np
import pytest

from oracles import assignment_bruteforce
from rabs_backhaul.checks import check_plan
from rabs_backhaul.energy import (
    EnergyParams,
    assignment_hungarian,
    assignment_lp,
    energy_efficiency,
    flight_energy,
    plan_relocations,
)

P = EnergyParams()


def test_flight_energy_examples():
    assert flight_energy((3, 4), (3, 4), P) == 0.0
    assert flight_energy((0, 0), (100, 0), P) == pytest.approx(900.0)
    assert flight_energy((0, 0), (0, 450), P) == pytest.approx(4050.0)


def test_identical_deployments_cost_nothing_after_launch():
    coords = np.array([[0, 0], [10, 0], [20, 0], [30, 0]], float)
    plan = plan_relocations([(1, 2), (1, 2), (2, 1)], coords, P, 2)
    assert plan.transitions[1][0].energy == 0 and plan.transitions[2][1].energy == 0
    assert plan.flight_energy_total == pytest.approx(flight_energy((0, 0), (10, 0), P) + flight_energy((0, 0), (20, 0), P))


def test_keep_shared_site_move_other():
    coords = np.array([[0, 0], [0, 0], [100, 0], [100, 50]], float)  # A=1, B=2, C=3
    plan = plan_relocations([(1, 2), (1, 3)], coords, EnergyParams(depot=None), 2)
    assert plan.flight_energy_total == pytest.approx(flight_energy((100, 0), (100, 50), P))
    assert sorted(plan.moves[1]) == [(1, 1), (2, 3)]


def test_depot_free_identical_epochs_static_only():
    coords = np.random.default_rng(0).uniform(0, 100, (6, 2))
    plan = plan_relocations([(1, 4, 5)] * 3, coords, EnergyParams(depot=None), 4)
    assert plan.flight_energy_total == 0.0
    assert plan.total_energy == pytest.approx(4 * 3 * 20 * 3600)


def test_lp_matches_permutations_and_is_integral(rng):
    for _ in range(200):
        n = int(rng.integers(1, 7))
        c = rng.uniform(0, 1000, (n, n))
        y, v = assignment_lp(c)
        assert np.all(np.abs(y - np.round(y)) <= 1e-9)
        assert v == pytest.approx(assignment_bruteforce(c), abs=1e-7)
        assert assignment_hungarian(c)[1] == pytest.approx(v, abs=1e-7)


def test_plan_feasibility_random(rng):
    coords = rng.uniform(0, 300, (15, 2))
    for _ in range(50):
        N = int(rng.integers(1, 8))
        sets = [tuple(rng.choice(np.arange(1, 15), size=int(rng.integers(0, N + 1)), replace=False)) for _ in range(4)]
        for depot in (0, None):
            params = EnergyParams(depot=depot)
            plan = plan_relocations(sets, coords, params, N)
            assert not check_plan(sets, plan, N, coords, depot, 162.0, 18.0)


def test_ee_examples():
    coords = np.array([[0, 0], [100, 0], [200, 0]], float)
    plan = plan_relocations([(1, 2)], coords, P, 2)
    assert plan.flight_energy_total == pytest.approx(2700.0)
    assert energy_efficiency(0.0, plan, P, 2, 1) == 0.0
    plan.flight_energy_total = 1800.0
    ee = energy_efficiency(3.6e12, plan, P, 2, 1)
    assert ee == pytest.approx(3.6e12 / 145800)
    assert ee == pytest.approx(2.469e7, rel=1e-3)
    assert energy_efficiency(7.2e12, plan, P, 2, 1) == pytest.approx(2 * ee)


def test_plan_csv(tmp_path):
    coords = np.array([[0, 0], [30, 40]], float)
    plan = plan_relocations([(1,)], coords, P, 2)
    plan.write_csv(tmp_path / "plan.csv")
    rows = (tmp_path / "plan.csv").read_text().splitlines()
    assert rows[0] == "transition,rabs_id,from_site,to_site,flight_m,flight_J"
    assert len(rows) == 3
    assert sorted(r.split(",", 2)[2] for r in rows[1:]) == ["0,0,0.0,0.0", "0,1,50.0,450.0"]


def test_plan_rejects_oversized_epoch():
    with pytest.raises(ValueError):
        plan_relocations([(1, 2, 3)], np.zeros((4, 2)), P, 2)


@pytest.mark.parametrize("kw", [dict(flight_speed=0), dict(tx_power=-1), dict(epoch_duration=0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        EnergyParams(**kw)
