"""Acceptance criteria, one test each; the terminal summary prints PASS/FAIL per criterion."""
import math
import time

import numpy as np
import pytest

from conftest import center_example, epsilon_axis, perturbed_slaving
from oracles import fast_blowup_crossing
from singular_ode.examples import analytic_oracle, fast_blowup_time, load_example
from singular_ode.hypotheses import audit, prepare
from singular_ode.integrate import IntegrationOptions, integrate_singular, time_rescale
from singular_ode.block_reduction import residual_check
from singular_ode.manifolds import (center_manifold, decompose_orbit, stable_fiber, uniformly_stable_manifold,
                                    verify_sign_preservation)
from singular_ode.navier_stokes import build_steady_system, compute_profile, hypothesis_report, reduce_ns

pytestmark = pytest.mark.acceptance

FB = load_example("fast_blowup")
LS = load_example("linear_slaving")


def test_1_fast_blowup_singularity_time():
    tr = integrate_singular(FB.spec, [1.0, 1.0], 5.0)
    assert tr.termination == "singularity_reached"
    assert abs(tr.t[-1] - math.log(2.0)) < 1e-3

    rng = np.random.default_rng(1)
    for i in range(20):
        u1 = rng.uniform(0.2, 1.5)
        # 2 u2 > u1^2 with a crossing time below 2
        u2 = 0.5 * u1 * u1 / (1.0 - math.exp(-rng.uniform(0.05, 2.0)))
        t_star = fast_blowup_time([u1, u2])
        if i < 5:
            # the closed form itself, against fixed-step integration
            assert abs(fast_blowup_crossing([u1, u2], h=1e-8, t_max=t_star + 1.0) - t_star) < 1e-3
        tr = integrate_singular(FB.spec, [u1, u2], t_star + 1.0)
        assert tr.termination == "singularity_reached"
        assert abs(tr.t[-1] - t_star) < 1e-3, (u1, u2)


def test_2_linear_slaving_exactness():
    grid = tuple(np.linspace(0.0, 1.0, 101))
    bundle = uniformly_stable_manifold(LS.spec, LS.equilibria, params=[[1.0], [0.1], [0.01], [0.0]])
    for eps in (1.0, 0.1, 0.01):
        U0 = [1.0, 1.0, eps]
        opts = IntegrationOptions(rtol=1e-13, atol=1e-15, t_eval=grid, tol_eq=0.0)
        tr = integrate_singular(LS.spec, U0, 1.0, opts)
        exact = np.array([analytic_oracle("linear_slaving", t, U0) for t in tr.t])
        assert np.max(np.abs(tr.U - exact)) < 1e-6
        dec = decompose_orbit(LS.spec, bundle, tr)
        assert np.max(np.abs(dec.pert.U)) < 1e-12


def test_3_hypothesis_patterns():
    assert audit(load_example("rotation").spec)["h2"].status == "fail"
    assert audit(FB.spec, FB.equilibria)["h4"].status == "fail"
    assert audit(LS.spec, LS.equilibria).all_pass
    rep = hypothesis_report(state=(1.0, 0.0, 1.0), half_width=0.1)
    assert rep.all_pass, rep.pattern()


def test_4_center_manifold_order():
    spec = prepare(center_example())
    cm = center_manifold(spec, order=3)
    sign = np.sign(cm.domain[0, 0]) ** 2 * np.sign(cm.codomain[1, 0])
    assert abs(sign * cm.coefficients[2].ravel()[0] + 1.0) < 1e-10
    radii = 1e-3 * 2.0 ** np.arange(4)
    res = [cm.invariance_residual(spec, r) for r in radii]
    expected = 2.0 ** (cm.order + 1)
    for a, b in zip(res, res[1:]):
        assert expected / 2 <= b / a <= expected * 2


def test_5_sign_preservation():
    rng = np.random.default_rng(5)
    opts = IntegrationOptions(tol_eq=0.0)
    for _ in range(50):
        eps = 10.0 ** rng.uniform(-4, -1)
        # every state with eps > 0 lies on the stable fiber over (0, 0, eps)
        U0 = [rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), eps]
        tr = integrate_singular(LS.spec, U0, 10.0, opts)
        assert tr.termination == "horizon_reached"
        assert verify_sign_preservation(tr).passed

    crossings = 0
    for _ in range(50):
        U0 = [10.0 ** rng.uniform(-4, -1), rng.uniform(-0.1, 0.1)]
        tr = integrate_singular(FB.spec, U0, 10.0)
        crossings += not verify_sign_preservation(tr).passed
    assert crossings >= 1


def test_6_perturbation_scaling():
    spec = prepare(perturbed_slaving())
    eps = 2.0 ** -np.arange(3, 9)
    bundle = uniformly_stable_manifold(spec, epsilon_axis(), params=[[e] for e in eps] + [[0.0]])
    cm = center_manifold(spec)
    grid = tuple(np.linspace(0.0, 4.0, 401))
    peak = []
    for e, fiber in zip(eps, bundle.fibers):
        U0 = fiber.lift(fiber.coords(np.array([0.05, 0.05, e]))[0])
        tr = integrate_singular(spec, U0, 4.0, IntegrationOptions(rtol=1e-12, atol=1e-14, tol_eq=0.0, t_eval=grid))
        peak.append(np.max(np.abs(decompose_orbit(spec, bundle, tr, cm=cm).pert.U)))
    slope = np.polyfit(np.log(eps), np.log(peak), 1)[0]
    print(f"fitted exponent {slope:.4f}")
    assert abs(slope - 1.0) <= 0.2


def test_7_navier_stokes_self_consistency():
    start = time.perf_counter()
    bs = build_steady_system()
    res, vmin = [], math.inf
    for n in (101, 201, 401):
        tr = compute_profile(n_samples=n, length=2.0)
        vmin = min(vmin, float(np.min(tr.U[:, 1])))
        res.append(residual_check(bs, tr))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    print(f"residuals {res}, orders {orders}")
    assert np.all(orders >= 1.8)
    assert vmin > 0
    assert time.perf_counter() - start < 300


def test_8_time_rescale_diffeomorphism():
    for eps in (0.5, 0.05):
        tr = integrate_singular(LS.spec, [0.05, 0.05, eps], 10.0, IntegrationOptions(tol_eq=0.0))
        m = time_rescale(tr)
        assert m.is_strictly_increasing
        assert m.tau[-1] >= 0.99 * tr.t[-1] / eps

    prof = reduce_ns(state=(1.0, 0.1, 1.0), half_width=0.05)
    fiber, _ = stable_fiber(prof.spec, np.array([1.0, 0.1, 1.0, 0.0, 0.0]))
    x0 = np.zeros(fiber.k)
    x0[0] = 1e-3
    tr = integrate_singular(prof.spec, fiber.lift(x0), 20.0, IntegrationOptions(rtol=1e-12, atol=1e-14, tol_eq=0.0))
    assert tr.termination == "horizon_reached"
    m = time_rescale(tr)
    assert m.is_strictly_increasing
    assert m.tau[-1] >= tr.t[-1] / np.max(tr.zeta)
