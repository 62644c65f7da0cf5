import numpy as np
import pytest

from singular_ode.block_reduction import (BlockSystem, block_residual, block_system_from_tables, reduce,
                                          reduced_field, residual_check, solve_small)
from singular_ode.core import Trajectory
from singular_ode.errors import InsufficientSamples, NonInvertibleB


def decoupled(sigma=0.0):
    return BlockSystem(a11=lambda u: 1.0 + 0.0 * u[0], A21=lambda u, z: [0.0 * u[0], 0.0 * u[0]],
                       A22=lambda u, z: [[u[1] - sigma, 0.0], [0.0, u[1] - sigma]],
                       b=lambda u: [[1.0, 0.0], [0.0, 2.0]], n_par=2, sigma=sigma)


def coupled():
    return BlockSystem(a11=lambda u: 2.0 + u[0], A21=lambda u, z: [1.0 + 0.5 * z[0], u[2]],
                       A22=lambda u, z: [[u[1], 0.3], [0.3, u[1] + u[0]]],
                       b=lambda u: [[1.0 + u[0] * u[0], 0.1], [0.1, 1.5]], n_par=2)


def test_solve_small_matches_numpy(rng):
    M = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    r = rng.standard_normal(3)
    assert np.allclose(solve_small(M.tolist(), r.tolist()), np.linalg.solve(M, r))


def test_decoupled_block_gives_diagonal_field():
    bs = decoupled()
    U = np.array([0.3, 0.2, 1.1, 0.5, -0.4])
    F = reduced_field(bs, U)
    assert F[0] == 0.0
    assert np.allclose(F[1:3], 0.2 * U[3:])
    # z' = b^{-1} A22 z = (zeta z1, zeta z2 / 2) times zeta after multiplication
    assert np.allclose(F[3:], [0.2 * 0.2 * 0.5, 0.2 * 0.2 * -0.4 / 2.0])


def test_zeta_is_shifted_velocity(rng):
    prof = reduce(coupled(), center=[0.0, 0.0, 0.0])
    for _ in range(1000):
        U = rng.uniform(-0.1, 0.1, 5)
        assert prof.spec.zeta_at(U) == U[1]
    prof = reduce(decoupled(sigma=0.3))
    assert prof.spec.zeta_at(np.array([0.0, 0.3, 0.0, 0.0, 0.0])) == 0.0
    assert prof.spec.origin.tolist() == [0.0, 0.3, 0.0, 0.0, 0.0]


def test_field_vanishes_on_constant_states(rng):
    bs = coupled()
    for _ in range(50):
        U = np.concatenate([rng.uniform(-0.1, 0.1, 3), [0.0, 0.0]])
        assert np.all(reduced_field(bs, U) == 0.0)


def test_reduced_field_solves_block_equations(rng):
    # with w = F_hyp / zeta and z' = F_z / zeta the first-order block equations hold
    bs = coupled()
    for _ in range(20):
        U = rng.uniform(-0.1, 0.1, 5)
        U[1] = 0.05 + 0.05 * abs(U[1])
        F = reduced_field(bs, U)
        zeta = U[1]
        u = list(U[:3])
        assert np.allclose(F[1:3], zeta * U[3:])
        du = np.concatenate([[F[0] / zeta], U[3:]])
        d2 = np.concatenate([[0.0], F[3:] / zeta])
        assert np.max(np.abs(block_residual(bs, u, du, d2))) < 1e-13


def test_noninvertible_b_detected():
    bs = BlockSystem(a11=lambda u: 1.0, A21=lambda u, z: [0.0, 0.0], A22=lambda u, z: [[0.0, 0.0], [0.0, 0.0]],
                     b=lambda u: [[1.0, 1.0], [1.0, 1.0]], n_par=2)
    with pytest.raises(NonInvertibleB):
        reduce(bs)


def _traj(x, U):
    n = len(x)
    return Trajectory(t=x, tau=x, U=U, zeta=np.ones(n), rhs_norm=np.zeros(n), termination="horizon_reached")


def test_too_few_samples():
    x = np.linspace(0, 1, 4)
    with pytest.raises(InsufficientSamples):
        residual_check(decoupled(), _traj(x, np.zeros((4, 5))))


def test_constant_profile_has_zero_residual():
    x = np.linspace(0, 1, 11)
    U = np.tile([0.2, 0.5, 1.0, 0.0, 0.0], (11, 1))
    assert residual_check(coupled(), _traj(x, U)) == 0.0


def test_exponential_profile_second_order():
    # at v = 1/2 the decoupled system reduces to e'' = e'/4, solved by exponentials
    bs = decoupled(sigma=0.0)

    def exact(n):
        x = np.linspace(0.0, 1.0, n)
        e = 1.0 + np.exp(x / 4.0)
        U = np.column_stack([np.zeros(n), 0.5 * np.ones(n), e, np.zeros(n), np.exp(x / 4.0) / 4.0])
        return _traj(x, U)

    r = [residual_check(bs, exact(n)) for n in (21, 41, 81)]
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.05)
    assert r[1] / r[2] == pytest.approx(4.0, rel=0.05)


def test_table_system():
    cfg = {"n_par": 1, "sigma": 0.0,
           "a11": [[2.0, [0, 0]]],
           "A21": [[[1.0, [0, 0]], [0.5, [1, 0]]]],
           "A22": [[[[1.0, [0, 1]]]]],
           "b": [[[[3.0, [0, 0]]]]]}
    bs = block_system_from_tables(cfg)
    U = np.array([0.2, 0.4, 0.1])
    # q = (1 + 0.1) z / 2, F = (-q, zeta z, (zeta z - (1.1) q) / 3)
    q = 1.1 * 0.1 / 2.0
    assert np.allclose(reduced_field(bs, U), [-q, 0.4 * 0.1, (0.4 * 0.4 * 0.1 - 1.1 * q) / 3.0])
