import numpy as np
import pytest

from znnkit import (ComplexActivationMethod, ComplexTrajectory, InvalidInput,
                    Linear, PowerSigmoid, embed_complex_matrix,
                    embed_complex_vector, solve_complex_linear)


def test_embedding_matches_complex_product():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    real = embed_complex_matrix(A) @ embed_complex_vector(z)
    w = A @ z
    np.testing.assert_allclose(real[:3], w.real, atol=1e-14)
    np.testing.assert_allclose(real[3:], w.imag, atol=1e-14)


def test_embedding_shapes():
    E = embed_complex_matrix(np.eye(2) * (1 + 2j))
    assert E.shape == (4, 4)
    np.testing.assert_array_equal(E[:2, 2:], -2.0 * np.eye(2))


def complex_problem():
    def A(t):
        return np.array([[2.0 + 0.5j * np.sin(t), 0.3j],
                         [0.1, 3.0 + 0.2j * np.cos(t)],
                         ], dtype=complex)

    def b(t):
        return np.array([np.exp(1j * 0.3 * t), 1.0 - 0.4j * t], dtype=complex)

    return A, b


def test_both_methods_converge_to_truth():
    A, b = complex_problem()
    x0 = np.zeros(2, dtype=complex)
    for method in (ComplexActivationMethod.REAL_IMAG,
                   ComplexActivationMethod.MODULUS_ARGUMENT):
        traj = solve_complex_linear(A, b, x0, gamma=200.0,
                                    activation=Linear(), method=method,
                                    eta=1e-4, n_steps=10000)
        assert isinstance(traj, ComplexTrajectory)
        T = traj.times[-1]
        truth = np.linalg.solve(A(T), b(T))
        assert np.linalg.norm(traj.states[-1] - truth) < 1e-6
        assert traj.residual_norms[-1] < 1e-6


def test_methods_identical_under_linear_activation():
    A, b = complex_problem()
    x0 = np.array([0.5 + 0.5j, -0.2j])
    ri = solve_complex_linear(A, b, x0, 10.0, Linear(),
                              ComplexActivationMethod.REAL_IMAG, 1e-3, 500)
    ma = solve_complex_linear(A, b, x0, 10.0, Linear(),
                              ComplexActivationMethod.MODULUS_ARGUMENT,
                              1e-3, 500)
    assert np.abs(ri.states - ma.states).max() < 1e-10
    np.testing.assert_allclose(ri.residual_norms, ma.residual_norms,
                               atol=1e-10)


def test_methods_differ_under_nonlinear_activation():
    A, b = complex_problem()
    x0 = np.zeros(2, dtype=complex)
    ri = solve_complex_linear(A, b, x0, 10.0, PowerSigmoid(),
                              ComplexActivationMethod.REAL_IMAG, 1e-3, 200)
    ma = solve_complex_linear(A, b, x0, 10.0, PowerSigmoid(),
                              ComplexActivationMethod.MODULUS_ARGUMENT,
                              1e-3, 200)
    assert np.abs(ri.states - ma.states).max() > 1e-8
    # but both still head for the same solution
    T = ri.times[-1]
    truth = np.linalg.solve(A(T), b(T))
    assert np.linalg.norm(ri.states[-1] - truth) < 0.1
    assert np.linalg.norm(ma.states[-1] - truth) < 0.1


def test_static_complex_system_exact_rate():
    """Static A, linear activation: residual decays like exp(-gamma t)."""
    A = np.array([[2.0 + 1.0j]])
    b = np.array([1.0 - 1.0j])
    traj = solve_complex_linear(lambda t: A, lambda t: b,
                                np.zeros(1, dtype=complex), 2.0, Linear(),
                                ComplexActivationMethod.MODULUS_ARGUMENT,
                                1e-4, 10000)
    r0 = traj.residual_norms[0]
    expected = r0 * np.exp(-2.0 * traj.times[-1])
    assert traj.residual_norms[-1] == pytest.approx(expected, rel=1e-2)


def test_shape_mismatch_rejected():
    A, b = complex_problem()
    with pytest.raises(InvalidInput):
        solve_complex_linear(A, b, np.zeros(3, dtype=complex), 1.0, Linear(),
                             ComplexActivationMethod.REAL_IMAG, 1e-3, 10)
