import math

import numpy as np
import pytest
from scipy.integrate import quad

from singular_ode.core import SystemSpec, Trajectory
from singular_ode.errors import InvalidInitialState, NotDiffeomorphism, StepFailure
from singular_ode.examples import analytic_oracle, load_example
from singular_ode.integrate import IntegrationOptions, integrate_desingularized, integrate_singular, time_rescale

FB = load_example("fast_blowup").spec
LS = load_example("linear_slaving").spec


def test_linear_slaving_short_horizon():
    U0 = [1.0, 1.0, 0.1]
    tr = integrate_singular(LS, U0, 0.2)
    assert tr.termination == "horizon_reached"
    assert tr.t[-1] == pytest.approx(0.2)
    assert np.allclose(tr.U[-1], analytic_oracle("linear_slaving", 0.2, U0), atol=1e-8)


def test_fast_blowup_reaches_equilibrium():
    tr = integrate_singular(FB, [1.0, 0.0], 1.0)
    assert tr.termination == "equilibrium_reached"


def test_fast_blowup_reaches_singularity():
    tr = integrate_singular(FB, [1.0, 1.0], 5.0)
    assert tr.termination == "singularity_reached"
    assert tr.t[-1] == pytest.approx(math.log(2.0), abs=1e-3)
    assert np.all(tr.zeta > 0)


def test_initial_state_must_be_off_s():
    with pytest.raises(InvalidInitialState):
        integrate_singular(FB, [0.0, 1.0], 1.0)
    with pytest.raises(InvalidInitialState):
        integrate_singular(FB, [-0.5, 1.0], 1.0)


def test_time_rescale_constant_zeta():
    tr = integrate_singular(LS, [1.0, 1.0, 0.5], 1.0)
    m = time_rescale(tr)
    assert m.is_strictly_increasing
    assert np.allclose(m.tau, 2.0 * tr.t, rtol=1e-12)
    assert float(m.t_of(1.0)) == pytest.approx(0.5, abs=1e-10)


def test_time_rescale_matches_quadrature():
    U0 = [1.0, 0.2]
    tr = integrate_singular(FB, U0, 0.5, IntegrationOptions(rtol=1e-12, atol=1e-14))
    m = time_rescale(tr)
    ref, _ = quad(lambda t: 1.0 / analytic_oracle("fast_blowup", t, U0)[0], 0.0, 0.5, epsabs=1e-13)
    assert float(m.tau_of(0.5)) == pytest.approx(ref, abs=1e-6)


def test_time_rescale_rejects_nonpositive_zeta():
    tr = Trajectory(t=[0.0, 1.0, 2.0], tau=[0.0, 1.0, 2.0], U=[[1.0], [0.0], [1.0]], zeta=[1.0, 0.0, 1.0],
                    rhs_norm=[0.0] * 3, termination="horizon_reached")
    with pytest.raises(NotDiffeomorphism):
        time_rescale(tr)
    flat = Trajectory(t=[0.0, 1.0, 1.0], tau=[0.0, 1.0, 2.0], U=[[1.0]] * 3, zeta=[1.0] * 3,
                      rhs_norm=[0.0] * 3, termination="horizon_reached")
    with pytest.raises(NotDiffeomorphism):
        time_rescale(flat)


def test_desingularized_time_satisfies_dt_dtau_zeta():
    tr = integrate_desingularized(FB, [1.0, 0.2], 1.0, IntegrationOptions(rtol=1e-12, atol=1e-14,
                                                                         t_eval=tuple(np.linspace(0, 1, 201))))
    dt = np.gradient(tr.t, tr.tau, edge_order=2)
    assert np.max(np.abs(dt - tr.zeta)) < 1e-4


def test_desingularized_crosses_s():
    tr = integrate_desingularized(FB, [1.0, 1.0], 10.0)
    assert tr.termination == "singularity_reached"
    assert tr.zeta[-1] <= 0 < tr.zeta[0]
    # the crossing happens before the blow-up time in t
    assert tr.t[-1] <= math.log(2.0) + 1e-3


def test_desingularized_can_run_through_s():
    tr = integrate_desingularized(FB, [1.0, 1.0], 2.0, stop_on_crossing=False)
    assert tr.termination == "horizon_reached"
    assert np.min(tr.zeta) < 0


def test_fixed_step_convergence_order():
    U0 = [1.0, 0.3]
    exact = analytic_oracle("fast_blowup", 0.5, U0)
    errs = []
    for h in (0.05, 0.025):
        tr = integrate_singular(FB, U0, 0.5, IntegrationOptions(fixed_step=h))
        errs.append(np.max(np.abs(tr.U[-1] - exact)))
    assert 20.0 <= errs[0] / errs[1] <= 45.0


def test_error_tracks_rtol():
    U0 = [1.0, 0.3]
    exact = analytic_oracle("fast_blowup", 2.0, U0)
    for rtol in (1e-6, 1e-9, 1e-12):
        tr = integrate_singular(FB, U0, 2.0, IntegrationOptions(rtol=rtol, atol=rtol * 1e-2, tol_eq=0.0))
        assert np.max(np.abs(tr.U[-1] - exact)) < 100 * rtol


def test_t_eval_samples_exactly():
    grid = tuple(np.linspace(0.0, 1.0, 11))
    tr = integrate_singular(LS, [1.0, 1.0, 0.3], 1.0, IntegrationOptions(t_eval=grid))
    assert np.array_equal(tr.t, np.array(grid))


def test_step_failure_on_nan_field():
    spec = SystemSpec(dim=1, F=lambda U: np.array([U[0] if U[0] < 0.5 else np.nan]), zeta=lambda U: U[0])
    with pytest.raises(StepFailure) as info:
        integrate_singular(spec, [0.1], 5.0)
    assert info.value.trajectory is not None
    assert info.value.trajectory.termination == "step_failure"


def test_linear_slaving_reference_state():
    tr = integrate_singular(LS, [1.0, 1.0, 0.5], 0.2)
    assert np.allclose(tr.U[-1], [math.exp(-1.0), math.exp(-0.4), 0.5], atol=1e-6)
    assert tr.U[-1] == pytest.approx([0.36788, 0.67032, 0.5], abs=1e-5)


def test_fast_blowup_rest_state_is_constant():
    tr = integrate_singular(FB, [1.0, 0.0], 1.0)
    assert np.all(tr.U == np.array([1.0, 0.0]))


def test_time_rescale_on_unit_start_before_blowup():
    U0 = [1.0, 1.0]
    tr = integrate_singular(FB, U0, 0.6, IntegrationOptions(rtol=1e-12, atol=1e-14))
    m = time_rescale(tr)
    for t in (0.2, 0.4, 0.6):
        ref, _ = quad(lambda s: 1.0 / analytic_oracle("fast_blowup", s, U0)[0], 0.0, t, epsabs=1e-13)
        assert float(m.tau_of(t)) == pytest.approx(ref, abs=1e-6)
