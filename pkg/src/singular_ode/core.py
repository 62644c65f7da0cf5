"""Singular systems dU/dt = F(U) / zeta(U) and their orbits."""
from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import taylor
from .errors import InvalidSystem, SingularEvaluation

EPS_ZETA = 1e-12
TOL_EQ = 1e-10

TERMINATIONS = ("horizon_reached", "singularity_reached", "equilibrium_reached", "step_failure")


def fd_step(U) -> float:
    """Central-difference step: cube root of machine epsilon scaled by 1+|U|."""
    return np.finfo(float).eps ** (1.0 / 3.0) * (1.0 + np.linalg.norm(U))


def fd_jacobian(func, U, h=None) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    h = fd_step(U) if h is None else h
    cols = []
    for i in range(U.size):
        e = np.zeros_like(U)
        e[i] = h
        cols.append((np.asarray(func(U + e), dtype=float) - np.asarray(func(U - e), dtype=float)) / (2 * h))
    return np.array(cols).T


def fd_gradient(func, U, h=None) -> np.ndarray:
    return fd_jacobian(lambda x: np.atleast_1d(func(x)), U, h)[0]


def fd_hessian(func, U, h=None) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    h = fd_step(U) if h is None else h
    H = fd_jacobian(lambda x: fd_gradient(func, x, h), U, h)
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class SystemSpec:
    """A singular ODE dU/dt = F(U)/zeta(U) near a point where F and zeta vanish.

    Derivative evaluators are optional. Missing ones fall back to central
    finite differences (see :func:`fd_step`).

    Evaluators should be written with plain arithmetic on the entries of
    ``U`` so that they also accept arrays of :class:`~singular_ode.taylor.Jet`;
    the manifold solvers rely on that to get exact Taylor coefficients.
    """

    dim: int
    F: Callable[[np.ndarray], np.ndarray]
    zeta: Callable[[np.ndarray], float]
    jac_F: Optional[Callable] = None
    grad_zeta: Optional[Callable] = None
    hess_zeta: Optional[Callable] = None
    origin: Optional[np.ndarray] = None
    name: str = "system"
    tol_eq: float = TOL_EQ
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidSystem("dim must be a positive integer")
        o = np.zeros(self.dim) if self.origin is None else np.asarray(self.origin, dtype=float)
        if o.shape != (self.dim,):
            raise InvalidSystem(f"origin has shape {o.shape}, expected ({self.dim},)")
        object.__setattr__(self, "origin", o)
        if self.validate:
            f0 = np.linalg.norm(self.field(o))
            z0 = abs(self.zeta_at(o))
            if f0 > self.tol_eq or z0 > self.tol_eq:
                raise InvalidSystem(f"{self.name}: need F(origin)=0 and zeta(origin)=0, got |F|={f0:.3g}, |zeta|={z0:.3g}")

    def field(self, U) -> np.ndarray:
        return np.asarray(self.F(np.asarray(U, dtype=float)), dtype=float)

    def zeta_at(self, U) -> float:
        return float(self.zeta(np.asarray(U, dtype=float)))

    def jacobian(self, U) -> np.ndarray:
        if self.jac_F is not None:
            return np.asarray(self.jac_F(np.asarray(U, dtype=float)), dtype=float)
        return fd_jacobian(self.field, U)

    def zeta_gradient(self, U) -> np.ndarray:
        if self.grad_zeta is not None:
            return np.asarray(self.grad_zeta(np.asarray(U, dtype=float)), dtype=float)
        return fd_gradient(self.zeta_at, U)

    def zeta_hessian(self, U) -> np.ndarray:
        if self.hess_zeta is not None:
            return np.asarray(self.hess_zeta(np.asarray(U, dtype=float)), dtype=float)
        return fd_hessian(self.zeta_at, U)

    def transversal_flux(self, U) -> float:
        """grad zeta(U) . F(U)."""
        return float(self.zeta_gradient(U) @ self.field(U))

    def transversal_flux_gradient(self, U) -> np.ndarray:
        """Gradient of U -> grad zeta(U) . F(U)."""
        return self.zeta_hessian(U) @ self.field(U) + self.jacobian(U).T @ self.zeta_gradient(U)


def with_ad_derivatives(spec: SystemSpec) -> SystemSpec:
    """Copy of ``spec`` whose missing derivatives come from forward-mode jets."""
    kw = dict(dim=spec.dim, F=spec.F, zeta=spec.zeta, origin=spec.origin, name=spec.name,
              tol_eq=spec.tol_eq, jac_F=spec.jac_F, grad_zeta=spec.grad_zeta,
              hess_zeta=spec.hess_zeta)
    if kw["jac_F"] is None:
        kw["jac_F"] = lambda U: taylor.jacobian(spec.F, U)
    if kw["grad_zeta"] is None:
        kw["grad_zeta"] = lambda U: taylor.gradient(spec.zeta, U)
    if kw["hess_zeta"] is None:
        kw["hess_zeta"] = lambda U: taylor.hessian(spec.zeta, U)
    return SystemSpec(**kw)


def eval_singular_rhs(spec: SystemSpec, U, eps_zeta: float = EPS_ZETA) -> np.ndarray:
    """F(U)/zeta(U); raises :class:`SingularEvaluation` on the singular set."""
    z = spec.zeta_at(U)
    if abs(z) <= eps_zeta:
        raise SingularEvaluation(f"|zeta(U)| = {abs(z):.3g} <= {eps_zeta:.3g}")
    return spec.field(U) / z


def desingularized_rhs(spec: SystemSpec, U) -> np.ndarray:
    """The regular field dU/dtau = F(U)."""
    return spec.field(U)


@dataclass
class Trajectory:
    """Samples (t, tau, U, zeta) of one orbit plus how the integration ended."""

    t: np.ndarray
    tau: np.ndarray
    U: np.ndarray
    zeta: np.ndarray
    rhs_norm: np.ndarray
    termination: str = "horizon_reached"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        self.zeta = np.asarray(self.zeta, dtype=float)
        self.rhs_norm = np.asarray(self.rhs_norm, dtype=float)
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination {self.termination!r}")

    def __len__(self):
        return self.t.size

    @property
    def dim(self) -> int:
        return self.U.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.U[-1]

    def header(self) -> list[str]:
        return ["t", "tau"] + [f"u_{i}" for i in range(self.dim)] + ["zeta", "rhs_norm"]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for i in range(len(self)):
            row = [self.t[i], self.tau[i], *self.U[i], self.zeta[i], self.rhs_norm[i]]
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        buf.write(f"# termination={self.termination}\n")
        return buf.getvalue()

    def to_csv(self, path) -> None:
        atomic_write(path, self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path) as fh:
            lines = fh.read().splitlines()
        termination = "horizon_reached"
        rows = []
        for line in lines[1:]:
            if line.startswith("# termination="):
                termination = line.split("=", 1)[1].strip()
            elif line and not line.startswith("#"):
                rows.append([float(x) for x in line.split(",")])
        a = np.array(rows)
        return cls(t=a[:, 0], tau=a[:, 1], U=a[:, 2:-2], zeta=a[:, -2], rhs_norm=a[:, -1],
                   termination=termination)


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
