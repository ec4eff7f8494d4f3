import numpy as np
import pytest

from rabs_backhaul.traffic import (
    DemandMatrix,
    TrafficConfig,
    generate_demand,
    read_demand_csv,
    write_demand_csv,
)


def test_zero_sigma_is_spatially_uniform():
    cfg = TrafficConfig(epochs=3, base_demand=150e6, spatial_sigma=0.0, temporal_profile=(1.0, 0.4, 2.0))
    D = generate_demand(7, cfg)
    assert np.allclose(D.values, np.tile([150e6, 60e6, 300e6], (7, 1)))


def test_matches_reference_lognormal_sampler():
    cfg = TrafficConfig(epochs=2, spatial_sigma=1.0, temporal_profile=(1.0, 1.0), rng_seed=7, base_demand=1.0)
    D = generate_demand(50, cfg)
    ref = np.random.default_rng(7).lognormal(mean=0.0, sigma=1.0, size=50)
    assert np.allclose(D.values[:, 0], ref, rtol=1e-12)
    assert np.allclose(D.values[:, 1], ref, rtol=1e-12)


def test_half_profile_halves_demand():
    D = generate_demand(9, TrafficConfig(epochs=2, temporal_profile=(1.0, 0.5)))
    assert np.array_equal(D.values[:, 1], D.values[:, 0] * 0.5)


def test_reproducible_and_linear_in_base():
    a = generate_demand(20, TrafficConfig(rng_seed=3))
    b = generate_demand(20, TrafficConfig(rng_seed=3))
    c = generate_demand(20, TrafficConfig(rng_seed=3, base_demand=3 * TrafficConfig().base_demand))
    assert np.array_equal(a.values, b.values)
    assert np.allclose(c.values, 3 * a.values, rtol=1e-15)


def test_empirical_log_std():
    D = generate_demand(20000, TrafficConfig(spatial_sigma=0.8, epochs=1, temporal_profile=(1.0,)))
    assert abs(np.log(D.values[:, 0]).std() - 0.8) < 0.05 * 0.8


def test_default_profile_shape():
    prof = TrafficConfig(epochs=24).profile()
    assert len(prof) == 24 and max(prof) <= 1.0 and min(prof) > 0


@pytest.mark.parametrize("kw", [dict(epochs=0), dict(epoch_duration=0), dict(spatial_sigma=-1),
                                dict(epochs=2, temporal_profile=(1.0,)), dict(epochs=1, temporal_profile=(-1.0,))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        TrafficConfig(**kw)


def test_csv_roundtrip(tmp_path):
    D = generate_demand(5, TrafficConfig(epochs=3))
    p = tmp_path / "d.csv"
    write_demand_csv(D, p)
    assert np.array_equal(read_demand_csv(p, 5, 3).values, D.values)


def test_csv_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("site_id,epoch,demand_bps\n1,0,5\n9,0,1\n")
    with pytest.raises(ValueError, match=":3:"):
        read_demand_csv(p, 5, 1)


def test_demand_matrix_rejects_negative():
    with pytest.raises(ValueError):
        DemandMatrix([[1.0, -2.0]])
    assert DemandMatrix([[1.0, 2.0]]).epoch(1).tolist() == [0.0, 2.0]
