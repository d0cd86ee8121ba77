import numpy as np
import pytest

from blochdd import ConfigError, GridTooCoarse, NoiseRealization, NoiseSpec
from blochdd.noise import (autocovariance, dump, generate, generate_block,
                           load, member_spec)

SPEC = NoiseSpec(B0=0.5, tau_c=4.0, dt=0.5, T_total=64.0, seed=12)


def test_spec_validation():
    with pytest.raises(ConfigError):
        NoiseSpec(-0.1, 4.0, 0.5, 64.0)
    with pytest.raises(ConfigError):
        NoiseSpec(0.1, 0.0, 0.5, 64.0)
    with pytest.raises(ConfigError):
        NoiseSpec(0.1, 4.0, -0.5, 64.0)
    with pytest.raises(ConfigError):
        NoiseSpec(0.1, 4.0, 0.5, 0.0)


def test_grid_must_resolve_the_correlation_time():
    with pytest.raises(GridTooCoarse):
        generate(NoiseSpec(0.5, 1.0, 0.5, 64.0))


def test_generation_is_deterministic():
    a = generate(SPEC)
    b = generate(SPEC)
    assert np.array_equal(a.samples, b.samples)
    c = generate(NoiseSpec(0.5, 4.0, 0.5, 64.0, seed=13))
    assert not np.array_equal(a.samples, c.samples)


def test_components_are_independent_draws():
    real = generate(SPEC)
    assert real.samples.shape == (3, SPEC.n_samples)
    assert not np.array_equal(real.samples[0], real.samples[1])


def test_zero_amplitude_is_exactly_silent():
    real = generate(NoiseSpec(0.0, 4.0, 0.5, 64.0))
    assert np.all(real.samples == 0.0)


def test_member_block_matches_individual_draws():
    block = generate_block(SPEC, range(2, 5))
    assert block.shape == (3, 3, SPEC.n_samples)
    direct = generate(member_spec(SPEC, 3)).samples
    assert np.array_equal(block[1], direct)
    assert member_spec(SPEC, 3).seed == SPEC.seed + 3


def test_interpolation_hits_grid_points():
    real = generate(SPEC)
    t = real.times
    assert np.allclose(real.values_at(t), real.samples)
    mid = real.values_at(np.array([0.25]))[:, 0]
    assert np.allclose(mid, 0.5 * (real.samples[:, 0] + real.samples[:, 1]))


def test_realization_validation():
    with pytest.raises(ConfigError):
        NoiseRealization(SPEC, np.zeros((3, 5)))
    bad = np.zeros((3, SPEC.n_samples))
    bad[0, 0] = np.nan
    with pytest.raises(ConfigError):
        NoiseRealization(SPEC, bad)
    real = generate(SPEC)
    assert not real.samples.flags.writeable


def test_autocovariance_estimate():
    spec = NoiseSpec(0.7, 2.0, 0.5, 4000.0, seed=9)
    real = generate(spec)
    var = autocovariance(real, 0)
    assert var == pytest.approx(np.mean(real.samples[0] ** 2))
    # one long realization: variance within ~15% of B0^2
    assert var == pytest.approx(spec.B0 ** 2, rel=0.15)
    with pytest.raises(ValueError):
        autocovariance(real, 10 ** 9)


def test_sample_variance_tracks_target():
    spec = NoiseSpec(0.4, 4.0, 1.0, 32.0, seed=21)
    block = generate_block(spec, range(300))
    var = float(np.mean(block ** 2))
    assert var == pytest.approx(spec.B0 ** 2, rel=0.1)


def test_dump_and_load_round_trip(tmp_path):
    real = generate(SPEC)
    path = tmp_path / "field.bin"
    dump(real, str(path))
    back = load(str(path))
    assert back.spec == SPEC
    assert np.array_equal(back.samples, real.samples)
