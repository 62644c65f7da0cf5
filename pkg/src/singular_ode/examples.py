"""Built-in analytic systems with closed-form solutions.

``fast_blowup``
    du1/dt = -u2/u1, du2/dt = -u2. zeta = u1, F = (-u2, -u2*u1).
    zeta reaches 0 in finite time when 2*u2(0) > u1(0)**2 > 0.
``linear_slaving``
    du1/dt = -5 u1, du2/dt = -u2/eps, deps/dt = 0 with eps carried as the
    third state. zeta = eps, F = (-5 u1 eps, -u2, 0).
``rotation``
    du1/dt = u2/eps, du2/dt = -u1/eps, deps/dt = 0. zeta = eps,
    F = (u2, -u1, 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import SystemSpec
from .errors import BlowupReached, UnknownName
from .hypotheses import EquilibriumManifold

NAMES = ("fast_blowup", "linear_slaving", "rotation")


@dataclass(frozen=True)
class NamedSystem:
    name: str
    spec: SystemSpec
    analytic_solution: Optional[Callable] = None
    expected_hypotheses: dict = field(default_factory=dict)
    equilibria: Optional[EquilibriumManifold] = None
    notes: str = ""


def _fast_blowup() -> NamedSystem:
    spec = SystemSpec(
        dim=2,
        F=lambda U: np.array([-U[1], -U[1] * U[0]]),
        zeta=lambda U: U[0],
        jac_F=lambda U: np.array([[0.0, -1.0], [-U[1], -U[0]]]),
        grad_zeta=lambda U: np.array([1.0, 0.0]),
        hess_zeta=lambda U: np.zeros((2, 2)),
        name="fast_blowup",
    )
    eq = EquilibriumManifold(param=lambda s: np.array([s[0], 0.0]), dim=1, origin_param=np.zeros(1),
                             tangent=lambda s: np.array([[1.0], [0.0]]))
    return NamedSystem(
        name="fast_blowup",
        spec=spec,
        analytic_solution=fast_blowup_solution,
        expected_hypotheses={"h1": "pass", "h3": "pass", "h4": "fail"},
        equilibria=eq,
        notes="H2 is computed to fail as well: the linearization at 0 is nilpotent, "
              "so the center space is the whole plane and F(0, u2) = (-u2, 0) on S.",
    )


def _linear_slaving() -> NamedSystem:
    spec = SystemSpec(
        dim=3,
        F=lambda U: np.array([-5.0 * U[0] * U[2], -U[1], 0.0 * U[2]]),
        zeta=lambda U: U[2],
        jac_F=lambda U: np.array([[-5.0 * U[2], 0.0, -5.0 * U[0]], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]]),
        grad_zeta=lambda U: np.array([0.0, 0.0, 1.0]),
        hess_zeta=lambda U: np.zeros((3, 3)),
        name="linear_slaving",
    )
    eq = EquilibriumManifold(param=lambda s: np.array([0.0, 0.0, s[0]]), dim=1, origin_param=np.zeros(1),
                             tangent=lambda s: np.array([[0.0], [0.0], [1.0]]))
    return NamedSystem(
        name="linear_slaving",
        spec=spec,
        analytic_solution=linear_slaving_solution,
        expected_hypotheses={f"h{i}": "pass" for i in range(1, 6)},
        equilibria=eq,
    )


def _rotation() -> NamedSystem:
    spec = SystemSpec(
        dim=3,
        F=lambda U: np.array([U[1], -U[0], 0.0 * U[2]]),
        zeta=lambda U: U[2],
        jac_F=lambda U: np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        grad_zeta=lambda U: np.array([0.0, 0.0, 1.0]),
        hess_zeta=lambda U: np.zeros((3, 3)),
        name="rotation",
    )
    eq = EquilibriumManifold(param=lambda s: np.array([0.0, 0.0, s[0]]), dim=1, origin_param=np.zeros(1),
                             tangent=lambda s: np.array([[0.0], [0.0], [1.0]]))
    return NamedSystem(
        name="rotation",
        spec=spec,
        analytic_solution=rotation_solution,
        expected_hypotheses={"h2": "fail"},
        equilibria=eq,
    )


_REGISTRY = {
    "fast_blowup": _fast_blowup,
    "linear_slaving": _linear_slaving,
    "rotation": _rotation,
}
_CACHE: dict = {}


def load_example(name: str) -> NamedSystem:
    if name not in _REGISTRY:
        raise UnknownName(f"unknown system {name!r}; choose one of {', '.join(NAMES)}")
    if name not in _CACHE:
        _CACHE[name] = _REGISTRY[name]()
    return _CACHE[name]


def fast_blowup_time(U0) -> float:
    """First t with u1(t) = 0, or inf.

    From d(u1**2)/dt = -2 u2 and u2 = u2(0) e^{-t}:
    u1(t)**2 = u1(0)**2 + 2 u2(0) (e^{-t} - 1).
    """
    u1, u2 = float(U0[0]), float(U0[1])
    if u1 == 0.0:
        return 0.0
    if 2.0 * u2 <= u1 * u1:
        return math.inf
    return math.log(2.0 * u2 / (2.0 * u2 - u1 * u1))


def fast_blowup_solution(t, U0) -> np.ndarray:
    u1, u2 = float(U0[0]), float(U0[1])
    if t >= fast_blowup_time(U0):
        raise BlowupReached(f"u1 vanishes at t* = {fast_blowup_time(U0):.12g} <= t = {t}")
    et = math.exp(-t)
    return np.array([math.copysign(math.sqrt(u1 * u1 + 2.0 * u2 * (et - 1.0)), u1), u2 * et])


def linear_slaving_solution(t, U0) -> np.ndarray:
    u1, u2, eps = (float(x) for x in U0)
    if eps == 0.0:
        if u2 == 0.0:
            return np.array([u1 * math.exp(-5.0 * t), 0.0, 0.0])
        raise BlowupReached("eps = 0 with u2 != 0 has no classical solution")
    return np.array([u1 * math.exp(-5.0 * t), u2 * math.exp(-t / eps), eps])


def rotation_solution(t, U0) -> np.ndarray:
    u1, u2, eps = (float(x) for x in U0)
    if eps == 0.0:
        if u1 == 0.0 and u2 == 0.0:
            return np.array([0.0, 0.0, 0.0])
        raise BlowupReached("eps = 0 off the axis has no classical solution")
    c, s = math.cos(t / eps), math.sin(t / eps)
    return np.array([u1 * c + u2 * s, -u1 * s + u2 * c, eps])


def analytic_oracle(name: str, t: float, U0) -> np.ndarray:
    system = load_example(name)
    return system.analytic_solution(t, U0)
