"""Reduction of block-structured profile equations to singular form.

Steady or travelling profiles of a mixed hyperbolic-parabolic system whose
viscosity acts only on the parabolic unknowns can be written as

    a11(u) zeta w + A21(u, 0)^T z = 0
    A21(u, z) w  + A22(u, z) z   = b(u) z'

with ``w`` the derivative of the hyperbolic unknown, ``z`` the derivative of
the parabolic unknowns and ``zeta = u[zeta_index] - sigma``. For a travelling
wave the blocks are those of ``A - sigma E``. Eliminating ``w`` and
multiplying by ``zeta`` gives dU/dx = F(U)/zeta(U) for U = (u, z) with

    F_hyp = -A21(u, 0)^T z / a11
    F_par = zeta z
    F_z   = b^{-1} [zeta A22 - A21(u, z) A21(u, 0)^T / a11] z.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import SystemSpec, Trajectory
from .errors import InsufficientSamples, InvalidSystem, NonInvertibleB

COND_MAX = 1e8


def _dot(a, b):
    acc = 0.0
    for x, y in zip(a, b):
        acc = acc + x * y
    return acc


def _matvec(M, v):
    return [_dot(row, v) for row in M]


def _to_float(x) -> float:
    return float(getattr(x, "value", x))


def solve_small(M, r):
    """Gauss-Jordan elimination that also works on arrays of jets."""
    n = len(r)
    A = [list(M[i]) + [r[i]] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(_to_float(A[i][col])))
        if _to_float(A[piv][col]) == 0.0:
            raise NonInvertibleB("singular parabolic block")
        A[col], A[piv] = A[piv], A[col]
        inv = 1.0 / A[col][col]
        A[col] = [a * inv for a in A[col]]
        for i in range(n):
            if i != col:
                f = A[i][col]
                A[i] = [a - f * c for a, c in zip(A[i], A[col])]
    return [A[i][n] for i in range(n)]


@dataclass(frozen=True)
class BlockSystem:
    """Block data of a profile equation; see the module docstring.

    ``u`` is the full unknown (hyperbolic components first); the maps
    receive plain sequences so they can be evaluated on jets. The optional
    ``primitive_residual(u, du, d2u)`` returns the defect of the original
    second-order equations and is preferred by :func:`residual_check`.
    """

    a11: Callable
    A21: Callable
    A22: Callable
    b: Callable
    n_par: int
    n_hyp: int = 1
    sigma: float = 0.0
    zeta_index: int = 1
    primitive_residual: Optional[Callable] = None
    name: str = "block"

    @property
    def n_u(self) -> int:
        return self.n_hyp + self.n_par

    @property
    def dim(self) -> int:
        return self.n_u + self.n_par

    def zeta(self, u):
        return u[self.zeta_index] - self.sigma

    def full_matrix(self, u, z=None) -> np.ndarray:
        """A(u, z) - sigma E in the (w, z) ordering, for n_hyp = 1."""
        p = self.n_par
        z = [0.0] * p if z is None else z
        A = np.zeros((1 + p, 1 + p))
        A[0, 0] = self.a11(u) * self.zeta(u)
        A[0, 1:] = np.asarray(self.A21(u, [0.0] * p), dtype=float)
        A[1:, 0] = np.asarray(self.A21(u, z), dtype=float)
        A[1:, 1:] = np.asarray(self.A22(u, z), dtype=float)
        return A

    def symmetry_defect(self, u) -> float:
        A = self.full_matrix(u)
        return float(np.max(np.abs(A - A.T)))


@dataclass(frozen=True)
class ProfileODE:
    spec: SystemSpec
    block: BlockSystem

    @property
    def u_slice(self) -> slice:
        return slice(0, self.block.n_u)

    @property
    def z_slice(self) -> slice:
        return slice(self.block.n_u, self.block.dim)

    @property
    def zeta_index(self) -> int:
        return self.block.zeta_index


def reduced_field(bs: BlockSystem, U):
    n_u, p = bs.n_u, bs.n_par
    u = list(U[:n_u])
    z = list(U[n_u:])
    zeta = bs.zeta(u)
    a = bs.a11(u)
    A21_0 = list(bs.A21(u, [0.0] * p))
    A21_z = list(bs.A21(u, z))
    q = _dot(A21_0, z) / a
    A22z = _matvec(bs.A22(u, z), z)
    rhs = [zeta * A22z[i] - A21_z[i] * q for i in range(p)]
    Fz = solve_small(bs.b(u), rhs)
    out = np.empty(bs.dim, dtype=object)
    out[:] = [-q] + [zeta * zi for zi in z] + Fz
    if all(isinstance(v, (float, int, np.floating)) for v in out):
        return out.astype(float)
    return out


def audit_b(bs: BlockSystem, center, half_width=0.1, n: int = 64, seed: int = 0) -> float:
    """Largest condition number of b over a random sample of the box."""
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    worst = 0.0
    for _ in range(n):
        u = center + rng.uniform(-half_width, half_width, size=center.size)
        c = np.linalg.cond(np.asarray(bs.b(list(u)), dtype=float))
        worst = max(worst, c)
        if not np.isfinite(c) or c >= COND_MAX:
            raise NonInvertibleB(f"cond(b) = {c:.3g} at u = {u.tolist()}")
        if abs(bs.a11(list(u))) < 1e-12:
            raise InvalidSystem(f"a11 vanishes at u = {u.tolist()}")
    return worst


def reduce(bs: BlockSystem, center=None, half_width=0.1) -> ProfileODE:
    """Singular system dU/dx = F(U)/zeta(U) for U = (u, z).

    ``center`` is the constant state the origin is placed at (default: the
    zero state shifted so that zeta vanishes). b is audited on the box.
    """
    if bs.n_hyp != 1:
        raise InvalidSystem("only a scalar hyperbolic block is supported")
    if center is None:
        center = np.zeros(bs.n_u)
        center[bs.zeta_index] = bs.sigma
    center = np.asarray(center, dtype=float)
    audit_b(bs, center, half_width)
    origin = np.concatenate([center, np.zeros(bs.n_par)])
    spec = SystemSpec(
        dim=bs.dim,
        F=lambda U: reduced_field(bs, U),
        zeta=lambda U: bs.zeta(U),
        origin=origin,
        name=bs.name,
    )
    return ProfileODE(spec=spec, block=bs)


def block_residual(bs: BlockSystem, u, du, d2u) -> np.ndarray:
    p = bs.n_par
    w = du[0]
    z = list(du[bs.n_hyp:])
    zx = np.asarray(d2u[bs.n_hyp:], dtype=float)
    r1 = bs.a11(u) * bs.zeta(u) * w + _dot(bs.A21(u, [0.0] * p), z)
    r2 = (np.asarray(bs.A21(u, z), dtype=float) * w + np.asarray(bs.A22(u, z), dtype=float) @ np.asarray(z)
          - np.asarray(bs.b(u), dtype=float) @ zx)
    return np.concatenate([[r1], r2])


def residual_check(bs: BlockSystem, profile: Trajectory) -> float:
    """Max defect of the second-order profile equations along a sampled profile.

    Derivatives come from second-order central differences on the uniform
    grid ``profile.t``; the defect is evaluated at interior samples.
    """
    n = len(profile)
    if n < 5:
        raise InsufficientSamples(f"need at least 5 samples, got {n}")
    x = profile.t
    h = (x[-1] - x[0]) / (n - 1)
    if not np.allclose(np.diff(x), h, rtol=1e-6, atol=0.0):
        raise ValueError("residual_check needs a uniform grid")
    u = profile.U[:, :bs.n_u]
    du = (u[2:] - u[:-2]) / (2.0 * h)
    d2u = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
    res = bs.primitive_residual or (lambda a, b, c: block_residual(bs, a, b, c))
    worst = 0.0
    for i in range(n - 2):
        r = np.asarray(res(list(u[i + 1]), list(du[i]), list(d2u[i])), dtype=float)
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


def polynomial_map(table, n_vars: int):
    """Callable for a polynomial given as ``[[coeff, [exponents...]], ...]``."""
    terms = [(float(c), [int(e) for e in exps]) for c, exps in table]
    for _, exps in terms:
        if len(exps) != n_vars:
            raise InvalidSystem(f"monomial {exps} has {len(exps)} exponents, expected {n_vars}")

    def f(x):
        acc = 0.0
        for c, exps in terms:
            t = c
            for xi, e in zip(x, exps):
                if e:
                    t = t * xi ** e
            acc = acc + t
        return acc

    return f


def block_system_from_tables(cfg: dict) -> BlockSystem:
    """BlockSystem whose entries are polynomials in u (see :func:`polynomial_map`).

    ``cfg`` holds ``n_par``, optional ``sigma`` and ``zeta_index`` and the
    tables ``a11`` (one polynomial), ``A21`` (n_par), ``A22`` and ``b``
    (n_par x n_par). Entries do not depend on z.
    """
    p = int(cfg["n_par"])
    n_u = 1 + p
    a11 = polynomial_map(cfg["a11"], n_u)
    A21 = [polynomial_map(t, n_u) for t in cfg["A21"]]
    A22 = [[polynomial_map(t, n_u) for t in row] for row in cfg["A22"]]
    b = [[polynomial_map(t, n_u) for t in row] for row in cfg["b"]]
    return BlockSystem(
        a11=a11,
        A21=lambda u, z: [f(u) for f in A21],
        A22=lambda u, z: [[f(u) for f in row] for row in A22],
        b=lambda u: [[f(u) for f in row] for row in b],
        n_par=p,
        sigma=float(cfg.get("sigma", 0.0)),
        zeta_index=int(cfg.get("zeta_index", 1)),
        name=cfg.get("name", "table"),
    )
