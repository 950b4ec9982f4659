import numpy as np
import pytest

from znnkit import (BoundedRandom, DegenerateGeometry, InsufficientObservers,
                    InvalidInput, Linear, LocalizationResult, Original,
                    Scenario, Scheme, build_tdoa_system, localization_to_csv,
                    localize, simulate_delays)

OBSERVERS = np.array([
    [0.0, 0.0, 0.0],
    [60.0, 0.0, 0.0],
    [0.0, 60.0, 0.0],
    [0.0, 0.0, 60.0],
    [60.0, 60.0, 0.0],
    [60.0, 0.0, 60.0],
])


def static_scenario(target=(20.0, 25.0, 8.0), horizon=10.0, eta=1e-3):
    tgt = np.asarray(target, dtype=float)
    return Scenario(observers=OBSERVERS, target_path=lambda t: tgt,
                    horizon=horizon, eta=eta)


def test_truth_is_exact_solution_of_system():
    s = static_scenario()
    track = simulate_delays(s)
    M, rhs = build_tdoa_system(s, track, 0.0)
    assert M.shape == (5, 4)
    truth = np.concatenate([np.array([20.0, 25.0, 8.0]) - OBSERVERS[0],
                            [track.r1(0.0)]])
    np.testing.assert_allclose(M @ truth, rhs, atol=1e-9)


def test_clean_delays_match_range_differences():
    s = static_scenario(target=(11.0, -4.0, 30.0))
    track = simulate_delays(s)
    r = np.linalg.norm(OBSERVERS - np.array([11.0, -4.0, 30.0]), axis=1)
    np.testing.assert_allclose(track.delays(0.0), (r[1:] - r[0]) / s.v,
                               atol=1e-15)
    assert track.r1(0.0) == pytest.approx(r[0], abs=1e-12)


def test_target_at_reference_observer():
    s = static_scenario(target=(0.0, 0.0, 0.0))
    track = simulate_delays(s)
    expected = np.linalg.norm(OBSERVERS[1:], axis=1) / s.v
    np.testing.assert_allclose(track.delays(0.0), expected, atol=1e-15)
    assert track.r1(0.0) == 0.0


def test_delay_noise_is_additive_and_logged():
    s = static_scenario()
    noise = BoundedRandom(1e-4, seed=11)
    clean = simulate_delays(s)
    noisy = simulate_delays(s, noise=noise)
    from znnkit import sample_noise
    d0 = noisy.delays(0.5, step_index=3) - clean.delays(0.5, step_index=3)
    np.testing.assert_allclose(d0, np.full(5, sample_noise(noise, 0.5, 3)),
                               atol=0)


def test_insufficient_observers():
    with pytest.raises(InsufficientObservers):
        Scenario(observers=OBSERVERS[:4], target_path=lambda t: np.zeros(3),
                 horizon=1.0, eta=1e-3)


def test_observer_shape_validation():
    with pytest.raises(InvalidInput):
        Scenario(observers=np.zeros((6, 2)), target_path=lambda t: np.zeros(3),
                 horizon=1.0, eta=1e-3)
    with pytest.raises(InvalidInput):
        Scenario(observers=OBSERVERS, target_path=lambda t: np.zeros(3),
                 horizon=1.0, eta=0.0)


def test_coplanar_geometry_degenerate():
    flat = OBSERVERS.copy()
    flat[:, 2] = 0.0
    s = Scenario(observers=flat, target_path=lambda t: np.array([5.0, 5.0, 0.0]),
                 horizon=1.0, eta=1e-3)
    track = simulate_delays(s)
    with pytest.raises(DegenerateGeometry):
        build_tdoa_system(s, track, 0.0)


def test_localize_stationary_converges():
    s = static_scenario()
    track = simulate_delays(s)
    result = localize(s, track, Original(gamma=100.0, activation=Linear()),
                      Scheme("euler_forward", 1e-3))
    assert isinstance(result, LocalizationResult)
    assert result.position_error[-1] < 1e-3
    # solved r1 agrees with the geometric distance once converged
    assert result.trajectory.states[-1, 3] == pytest.approx(track.r1(s.horizon),
                                                            abs=1e-3)


def test_localize_moving_target_tracks():
    def path(t):
        return np.array([20.0 + 6.0 * np.sin(0.4 * t),
                         25.0 + 6.0 * np.cos(0.4 * t), 8.0])

    s = Scenario(observers=OBSERVERS, target_path=path, horizon=8.0, eta=1e-3)
    track = simulate_delays(s)
    result = localize(s, track, Original(gamma=1000.0, activation=Linear()),
                      Scheme("euler_forward", 1e-3))
    settled = result.position_error[result.trajectory.times > 2.0]
    assert settled.max() < 0.05


def test_zero_horizon_returns_initial_guess():
    s = static_scenario(horizon=0.0)
    track = simulate_delays(s)
    result = localize(s, track, Original(gamma=10.0, activation=Linear()),
                      Scheme("euler_forward", 1e-3))
    assert len(result.trajectory.times) == 1
    centroid = OBSERVERS.mean(axis=0)
    np.testing.assert_allclose(result.estimates[0], centroid, atol=1e-12)


def test_relabeling_non_reference_observers_is_row_permutation():
    s = static_scenario()
    track = simulate_delays(s)
    M1, r1 = build_tdoa_system(s, track, 0.0)

    perm = [0, 3, 1, 4, 2, 5]
    s2 = Scenario(observers=OBSERVERS[perm], target_path=s.target_path,
                  horizon=s.horizon, eta=s.eta)
    M2, r2 = build_tdoa_system(s2, simulate_delays(s2), 0.0)
    # observer i of s2 is observer perm[i] of s, so rows permute accordingly
    rows = [perm[1:][i] - 1 for i in range(5)]
    np.testing.assert_allclose(M2, M1[rows], atol=1e-12)
    np.testing.assert_allclose(r2, r1[rows], atol=1e-9)


def test_localization_csv_format():
    s = static_scenario(horizon=0.0)
    track = simulate_delays(s)
    result = localize(s, track, Original(gamma=10.0, activation=Linear()),
                      Scheme("euler_forward", 1e-3))
    text = localization_to_csv(result)
    lines = text.split("\n")
    assert lines[0] == "t,pos_error,x,y,z,r1"
    assert len(lines) == 3 and lines[-1] == ""
    row = [float(v) for v in lines[1].split(",")]
    assert row[0] == 0.0
    np.testing.assert_allclose(row[2:5], result.estimates[0], atol=0)
