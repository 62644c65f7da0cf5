"""Steady and travelling profiles of the 1-D compressible Navier-Stokes system.

With primitive unknowns (rho, v, e), ``c = (gamma-1)/R`` (so theta = c e)
and ``m = v - sigma`` the profile equations read

    m rho' + rho v'                                   = 0
    p_rho rho' + rho m v' + p_e e' - nu' rho' v'       = nu v''
    p v' + rho m e' - nu v'^2 - k' c rho' e'           = k c e''

where primes on nu and k are derivatives in rho. Multiplying the rows by
``diag(p_rho/rho^2, 1/rho, alpha)`` with ``alpha = p_e/(rho p)`` makes the
first-order part symmetric at u' = 0 and gives the blocks

    a11 = p_rho/rho^2
    A21(u, z) = ((p_rho - nu' z1)/rho, -alpha k' c z2)
    A22(u, z) = [[m, p_e/rho], [p_e/rho - alpha nu z1, m p_e/p]]
    b(u) = diag(nu/rho, alpha k c)

with z = (v', e').
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import block_reduction
from .block_reduction import BlockSystem, ProfileODE
from .core import Trajectory
from .errors import (DerivationInconsistency, InvalidInitialState, NonPositiveEnergy, SignViolation)
from .hypotheses import EquilibriumManifold, HypothesisReport, audit
from .integrate import IntegrationOptions, integrate_singular
from .manifolds import stable_fiber


def _const(value):
    return lambda rho: value + 0.0 * rho


@dataclass(frozen=True)
class GasModel:
    """Gas closure. Defaults: polytropic p = (gamma-1) rho e, nu = k = 1."""

    gamma: float = 1.4
    R_gas: float = 1.0
    nu: Callable = _const(1.0)
    dnu: Callable = _const(0.0)
    k_heat: Callable = _const(1.0)
    dk: Callable = _const(0.0)
    pressure: Optional[Callable] = None
    p_rho: Optional[Callable] = None
    p_e: Optional[Callable] = None
    rho_min: float = 0.1

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if not self.R_gas > 0.0:
            raise ValueError("R_gas must be positive")

    @property
    def c_theta(self) -> float:
        return (self.gamma - 1.0) / self.R_gas

    def p(self, rho, e):
        return self.pressure(rho, e) if self.pressure else (self.gamma - 1.0) * rho * e

    def dp_drho(self, rho, e):
        return self.p_rho(rho, e) if self.p_rho else (self.gamma - 1.0) * e

    def dp_de(self, rho, e):
        return self.p_e(rho, e) if self.p_e else (self.gamma - 1.0) * rho


def polytropic_theta(gas: GasModel, e: float) -> float:
    if not e > 0:
        raise NonPositiveEnergy(f"internal energy must be positive, got {e}")
    return e * (gas.gamma - 1.0) / gas.R_gas


def ns_a11(gas: GasModel, rho, e):
    return gas.dp_drho(rho, e) / (rho * rho)


def _primitive_residual(gas: GasModel, sigma: float):
    c = gas.c_theta

    def residual(u, du, d2u):
        rho, v, e = u
        r_, v_, e_ = du
        _, v2, e2 = d2u
        m = v - sigma
        p = gas.p(rho, e)
        nu, k = gas.nu(rho), gas.k_heat(rho)
        mass = m * r_ + rho * v_
        mom = gas.dp_drho(rho, e) * r_ + rho * m * v_ + gas.dp_de(rho, e) * e_ - gas.dnu(rho) * r_ * v_ - nu * v2
        energy = p * v_ + rho * m * e_ - nu * v_ * v_ - gas.dk(rho) * c * r_ * e_ - k * c * e2
        return np.array([mass, mom, energy], dtype=float)

    return residual


def build_steady_system(gas: GasModel = GasModel(), sigma: float = 0.0) -> BlockSystem:
    """Symmetrized block data for profiles moving at speed ``sigma``."""
    c = gas.c_theta

    def parts(u):
        rho, v, e = u[0], u[1], u[2]
        p = gas.p(rho, e)
        pr, pe = gas.dp_drho(rho, e), gas.dp_de(rho, e)
        return rho, v - sigma, e, p, pr, pe, pe / (rho * p)

    def a11(u):
        return ns_a11(gas, u[0], u[2])

    def A21(u, z):
        rho, _, _, _, pr, _, alpha = parts(u)
        return [(pr - gas.dnu(rho) * z[0]) / rho, -alpha * gas.dk(rho) * c * z[1]]

    def A22(u, z):
        rho, m, _, p, _, pe, alpha = parts(u)
        return [[m, pe / rho], [pe / rho - alpha * gas.nu(rho) * z[0], m * pe / p]]

    def b(u):
        rho, _, _, _, _, _, alpha = parts(u)
        return [[gas.nu(rho) / rho, 0.0], [0.0, alpha * gas.k_heat(rho) * c]]

    return BlockSystem(a11=a11, A21=A21, A22=A22, b=b, n_par=2, n_hyp=1, sigma=sigma, zeta_index=1,
                       primitive_residual=_primitive_residual(gas, sigma), name="navier_stokes")


def reduce_ns(gas: GasModel = GasModel(), state=(1.0, 0.0, 1.0), sigma: float = 0.0,
              half_width: float = 0.1) -> ProfileODE:
    """Reduced singular system with its origin at (rho, sigma, e, 0, 0).

    Only rho and e of ``state`` are used for the origin; its velocity is
    replaced by sigma, where zeta vanishes.
    """
    rho, _, e = (float(x) for x in state)
    if rho - half_width < gas.rho_min:
        raise ValueError(f"box reaches below rho_min = {gas.rho_min}")
    return block_reduction.reduce(build_steady_system(gas, sigma), center=[rho, sigma, e], half_width=half_width)


def equilibrium_manifold(origin) -> EquilibriumManifold:
    """Constant states {z = 0} parameterized by (rho, v, e)."""
    origin = np.asarray(origin, dtype=float)
    tangent = np.vstack([np.eye(3), np.zeros((2, 3))])
    return EquilibriumManifold(param=lambda s: np.concatenate([np.asarray(s, dtype=float), np.zeros(2)]),
                               dim=3, origin_param=origin[:3].copy(), tangent=lambda s: tangent)


def hypothesis_report(gas: GasModel = GasModel(), state=(1.0, 0.0, 1.0), sigma: float = 0.0,
                      half_width: float = 0.1, order: int = 3) -> HypothesisReport:
    prof = reduce_ns(gas, state, sigma, half_width)
    return audit(prof.spec, equilibrium_manifold(prof.spec.origin), half_width=half_width, order=order)


def compute_profile(gas: GasModel = GasModel(), left_state=(1.0, 0.1, 1.0), sigma: float = 0.0,
                    length: float = 2.0, amplitude: float = 1e-3, n_samples: int = 201, order: int = 3,
                    rtol: float = 1e-13, atol: float = 1e-15) -> Trajectory:
    """Profile leaving the constant state ``left_state`` along its stable fiber.

    The orbit starts on the stable fiber of the equilibrium (rho, v, e, 0, 0)
    at distance ``amplitude`` in fiber coordinates and converges back to
    that equilibrium as x grows; ``length`` is the x-extent sampled on a
    uniform grid of ``n_samples`` points.
    """
    rho, v, e = (float(x) for x in left_state)
    if not v - sigma > 0:
        raise InvalidInitialState("the anchor state must have v > sigma")
    if e <= 0:
        raise NonPositiveEnergy("internal energy must be positive")
    prof = reduce_ns(gas, (rho, v, e), sigma, half_width=min(0.1, rho - gas.rho_min - 1e-9))
    spec = prof.spec
    p = np.array([rho, v, e, 0.0, 0.0])
    fiber, _ = stable_fiber(spec, p, order)
    x0 = np.zeros(fiber.k)
    x0[0] = amplitude
    U0 = fiber.lift(x0)
    grid = tuple(np.linspace(0.0, length, n_samples))
    opts = IntegrationOptions(rtol=rtol, atol=atol, t_eval=grid, tol_eq=0.0)
    traj = integrate_singular(spec, U0, length, opts)
    m = traj.U[:, 1] - sigma
    if traj.termination == "singularity_reached" or np.any(m <= 0):
        i = int(np.argmax(m <= 0)) if np.any(m <= 0) else len(traj) - 1
        raise SignViolation(f"v - sigma left the positive side at x = {traj.t[i]:.6g}")
    return traj


def audit_derivation(gas: GasModel = GasModel(), sigma: float = 0.0, left_state=(1.0, 0.1, 1.0),
                     tol: float = 1e-4, grids=(101, 201, 401)) -> list:
    """Primitive-equation defect of test profiles on refining grids.

    Raises :class:`DerivationInconsistency` when the defect exceeds ``tol``
    on every grid.
    """
    bs = build_steady_system(gas, sigma)
    res = [block_reduction.residual_check(bs, compute_profile(gas, left_state, sigma, n_samples=n)) for n in grids]
    if min(res) > tol:
        raise DerivationInconsistency(f"profile residuals {res} exceed {tol}")
    return res
