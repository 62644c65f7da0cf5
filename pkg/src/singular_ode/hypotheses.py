"""Numerical audit of the structural hypotheses on dU/dt = F(U)/zeta(U).

H1  grad zeta(0) != 0, so S = {zeta = 0} is locally a hypersurface.
H2  on any center manifold of dU/dtau = F, points of M^c on S are equilibria.
H3  there is a manifold of equilibria through 0 transversal to S.
H4  grad zeta . F = 0 on S.
H5  G = (grad zeta . F)/zeta, extended to S by continuity, vanishes at the
    equilibria lying on S.

Each check returns a :class:`Verdict` whose ``margin`` is the measured
statistic (always nonnegative) and, on failure, the worst sample as witness.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import taylor
from .core import SystemSpec, fd_jacobian, with_ad_derivatives
from .errors import ExtensionUndefined, NoCenterDirections, NoIntersection, ResolutionFailure, SeedingFailed

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True)
class Tolerances:
    tol_S: float = 1e-10
    tol_grad: float = 1e-8
    tol_h4: float = 1e-8
    tol_h5: float = 1e-8
    tol_eq: float = 1e-10
    tol_rank: float = 1e-8
    tol_dir: float = 1e-7


@dataclass
class Verdict:
    status: str
    margin: float
    witness: Optional[np.ndarray] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "verdict": self.status,
            "margin": float(self.margin),
            "witness": None if self.witness is None else [float(x) for x in self.witness],
            "detail": self.detail,
        }


@dataclass
class HypothesisReport:
    verdicts: dict
    s_samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __getitem__(self, key) -> Verdict:
        return self.verdicts[key]

    @property
    def all_pass(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def pattern(self) -> dict:
        return {k: v.status for k, v in self.verdicts.items()}

    def to_dict(self) -> dict:
        out = {k: self.verdicts[k].to_dict() for k in sorted(self.verdicts)}
        out["all_pass"] = self.all_pass
        out["s_samples"] = [[float(x) for x in row] for row in self.s_samples]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class EquilibriumManifold:
    """Parameterized family of equilibria of F through the origin."""

    param: Callable[[np.ndarray], np.ndarray]
    dim: int
    origin_param: np.ndarray
    tangent: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def point(self, s) -> np.ndarray:
        return np.asarray(self.param(np.atleast_1d(np.asarray(s, dtype=float))), dtype=float)

    def tangent_basis(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.tangent is not None:
            return np.asarray(self.tangent(s), dtype=float).reshape(-1, self.dim)
        return fd_jacobian(self.point, s).reshape(-1, self.dim)


def prepare(spec: SystemSpec) -> SystemSpec:
    """Fill in missing derivatives with exact jets when the evaluators allow it."""
    if spec.jac_F is not None and spec.grad_zeta is not None and spec.hess_zeta is not None:
        return spec
    if taylor.supports_jets(spec.F, spec.origin) and taylor.supports_jets(
            lambda x: np.array([spec.zeta(x)], dtype=object), spec.origin):
        return with_ad_derivatives(spec)
    return spec


def _box(spec, half_width):
    hw = np.broadcast_to(np.asarray(half_width, dtype=float), (spec.dim,))
    return spec.origin - hw, spec.origin + hw


def _grid(lo, hi, n, surface=False):
    d = lo.size
    # on a hypersurface the projected grid keeps about m**(d-1) distinct points
    m = max(2, math.ceil(n ** (1.0 / max(d - 1 if surface else d, 1))))
    if m % 2 == 0:
        m += 1
    axes = [np.linspace(a, b, m) for a, b in zip(lo, hi)]
    return np.array(list(itertools.product(*axes)))


def _sorted_unique(points, decimals=12):
    if len(points) == 0:
        return np.zeros((0, 0))
    pts = np.unique(np.round(np.asarray(points), decimals), axis=0)
    return pts[np.lexsort(pts.T[::-1])]


def sample_singular_set(spec: SystemSpec, half_width=0.1, n: int = 64, tol_S: float = 1e-10,
                        max_iter: int = 60) -> np.ndarray:
    """Points of S = {zeta = 0} in the box origin +- half_width.

    Seeds on a uniform grid are pushed onto S by Newton steps along grad zeta.
    The grid has about n**(1/(d-1)) points per axis so that at least ``n``
    distinct points survive the projection when S is a graph over the box.
    """
    lo, hi = _box(spec, half_width)
    slack = 1e-9 * (1.0 + np.abs(hi - lo))
    found = []
    for U in _grid(lo, hi, n, surface=True):
        for _ in range(max_iter):
            z = spec.zeta_at(U)
            if abs(z) <= tol_S:
                break
            g = spec.zeta_gradient(U)
            gg = g @ g
            if gg == 0.0 or not np.isfinite(gg):
                break
            U = U - z * g / gg
        if abs(spec.zeta_at(U)) <= tol_S and np.all(U >= lo - slack) and np.all(U <= hi + slack):
            found.append(U)
    if not found:
        raise SeedingFailed("Newton projection onto S failed for every seed")
    return _sorted_unique(found)


def check_h1(spec: SystemSpec, tol: Tolerances = Tolerances()) -> Verdict:
    g = np.linalg.norm(spec.zeta_gradient(spec.origin))
    if g > tol.tol_grad:
        return Verdict(PASS, float(g))
    return Verdict(FAIL, float(g), witness=spec.origin.copy(), detail="grad zeta vanishes at the origin")


def _worst(values, samples):
    i = int(np.argmax(values))
    return float(values[i]), samples[i].copy()


def check_h4(spec: SystemSpec, s_samples, tol: Tolerances = Tolerances()) -> Verdict:
    vals = np.array([abs(spec.transversal_flux(U)) / (1.0 + np.linalg.norm(spec.field(U))) for U in s_samples])
    stat, witness = _worst(vals, s_samples)
    if stat <= tol.tol_h4:
        return Verdict(PASS, stat)
    return Verdict(FAIL, stat, witness=witness, detail="grad zeta . F does not vanish on S")


def extended_G(spec: SystemSpec, U, tol: Tolerances = Tolerances(), n_dirs: int = 8, seed: int = 0) -> float:
    """G(U) = (grad zeta . F)/zeta, continued onto S through the transverse quotient.

    On S the value is d_v(grad zeta . F) / d_v zeta with v = grad zeta. The
    quotient along ``n_dirs`` random transverse directions must agree with
    it; otherwise the extension does not exist and
    :class:`ExtensionUndefined` is raised.
    """
    U = np.asarray(U, dtype=float)
    z = spec.zeta_at(U)
    g = spec.transversal_flux(U)
    if abs(z) > tol.tol_S:
        return g / z
    if abs(g) > tol.tol_h4 * (1.0 + np.linalg.norm(spec.field(U))):
        raise ExtensionUndefined(f"grad zeta . F = {g:.3g} on S: the quotient has a pole")
    v = spec.zeta_gradient(U)
    dg = spec.transversal_flux_gradient(U)
    value = (dg @ v) / (v @ v)
    rng = np.random.default_rng(seed)
    scale = 1.0 + np.linalg.norm(dg)
    for _ in range(n_dirs):
        w = rng.standard_normal(U.size)
        vw = v @ w
        if abs(vw) < 0.1 * np.linalg.norm(v) * np.linalg.norm(w):
            continue
        q = (dg @ w) / vw
        if abs(q - value) > tol.tol_dir * scale:
            raise ExtensionUndefined(f"directional quotients disagree ({q:.6g} vs {value:.6g})")
    return float(value)


def equilibria_on_S(spec: SystemSpec, s_samples, tol: Tolerances = Tolerances(), max_iter: int = 30,
                    half_width=None) -> np.ndarray:
    """Equilibria of F lying on S, found by minimum-norm Gauss-Newton from the S samples."""
    pts = [spec.origin.copy()]
    for U in s_samples:
        U = np.array(U, dtype=float)
        for _ in range(max_iter):
            r = np.append(spec.field(U), spec.zeta_at(U))
            if np.linalg.norm(r) <= tol.tol_eq:
                break
            Jac = np.vstack([spec.jacobian(U), spec.zeta_gradient(U)])
            step = np.linalg.lstsq(Jac, -r, rcond=None)[0]
            U = U + step
            if not np.all(np.isfinite(U)):
                break
        r = np.append(spec.field(U), spec.zeta_at(U))
        if np.all(np.isfinite(U)) and np.linalg.norm(r) <= tol.tol_eq:
            if half_width is None or np.all(np.abs(U - spec.origin) <= np.asarray(half_width) * (1 + 1e-9)):
                pts.append(U)
    return _sorted_unique(pts)


def check_h5(spec: SystemSpec, s_samples, tol: Tolerances = Tolerances(), half_width=None, seed: int = 0) -> Verdict:
    eqs = equilibria_on_S(spec, s_samples, tol, half_width=half_width)
    vals = np.array([abs(extended_G(spec, U, tol, seed=seed)) for U in eqs])
    stat, witness = _worst(vals, eqs)
    if stat <= tol.tol_h5:
        return Verdict(PASS, stat, detail=f"{len(eqs)} equilibria on S tested")
    return Verdict(FAIL, stat, witness=witness, detail="extended G does not vanish at an equilibrium on S")


def _null_space(row):
    _, _, vt = np.linalg.svd(np.atleast_2d(row))
    return vt[1:].T


def intersection_points(spec: SystemSpec, eq: EquilibriumManifold, half_width=0.1, n: int = 9,
                        tol: Tolerances = Tolerances(), max_iter: int = 50) -> list:
    """Parameters s with zeta(eq(s)) = 0, from a grid of seeds around the origin parameter."""
    s0 = np.asarray(eq.origin_param, dtype=float)
    hw = float(np.max(np.atleast_1d(half_width)))
    out = []
    for s in _grid(s0 - hw, s0 + hw, n):
        for _ in range(max_iter):
            U = eq.point(s)
            z = spec.zeta_at(U)
            if abs(z) <= tol.tol_S:
                break
            gs = spec.zeta_gradient(U) @ eq.tangent_basis(s)
            gg = gs @ gs
            if gg == 0.0:
                break
            s = s - z * gs / gg
        if abs(spec.zeta_at(eq.point(s))) <= tol.tol_S and np.all(np.abs(s - s0) <= 2 * hw):
            out.append(s)
    return [np.asarray(s) for s in _sorted_unique(out)] if out else []


def check_h3(spec: SystemSpec, eq: Optional[EquilibriumManifold], s_samples=None, half_width=0.1,
             tol: Tolerances = Tolerances()) -> Verdict:
    """Transversality of M^eq and S at sampled intersection points (SVD rank test)."""
    if eq is None:
        return Verdict(INCONCLUSIVE, 0.0, detail="no equilibrium manifold available")
    params = intersection_points(spec, eq, half_width, tol=tol)
    if not params:
        raise NoIntersection("M^eq does not meet S in the box")
    ratios, pts = [], []
    for s in params:
        U = eq.point(s)
        if np.linalg.norm(spec.field(U)) > max(tol.tol_eq, 1e-8):
            return Verdict(FAIL, 0.0, witness=U, detail="parameterization is not made of equilibria")
        stacked = np.hstack([eq.tangent_basis(s), _null_space(spec.zeta_gradient(U))])
        sv = np.linalg.svd(stacked, compute_uv=False)
        full = sv.size >= spec.dim
        ratios.append(sv[spec.dim - 1] / sv[0] if full else 0.0)
        pts.append(U)
    ratios = np.array(ratios)
    i = int(np.argmin(ratios))
    stat = float(ratios[i])
    if stat > tol.tol_rank:
        return Verdict(PASS, stat, detail=f"{len(params)} intersection points tested")
    return Verdict(FAIL, stat, witness=pts[i], detail="tangent spaces of M^eq and S do not span the state space")


def manifold_singular_points(spec: SystemSpec, cm, half_width=0.1, n: int = 64, tol: Tolerances = Tolerances(),
                             max_iter: int = 60) -> np.ndarray:
    """Points of M^c on S: Newton on zeta restricted to the manifold graph."""
    k = cm.k
    if k == 0:
        return np.array([cm.base.copy()])
    hw = float(np.max(np.atleast_1d(half_width)))
    out = []
    for x in _grid(-hw * np.ones(k), hw * np.ones(k), n):
        for _ in range(max_iter):
            U = cm.lift(x)
            z = spec.zeta_at(U)
            if abs(z) <= tol.tol_S:
                break
            gx = spec.zeta_gradient(U) @ cm.lift_derivative(x)
            gg = gx @ gx
            if gg == 0.0:
                break
            x = x - z * gx / gg
        U = cm.lift(x)
        if abs(spec.zeta_at(U)) <= tol.tol_S and np.all(np.abs(x) <= hw * (1 + 1e-9)):
            out.append(U)
    return _sorted_unique(out) if out else np.zeros((0, spec.dim))


def check_h2(spec: SystemSpec, cm, s_samples=None, half_width=0.1, tol: Tolerances = Tolerances()) -> Verdict:
    """F must vanish on M^c intersected with S.

    ``cm`` is a center manifold from :func:`singular_ode.manifolds.center_manifold`,
    or ``None`` when there are no center directions (then M^c = {0} and the
    check passes vacuously). The threshold is ``tol_eq`` plus ten times the
    invariance defect of the truncated manifold on the sampling radius.
    """
    if cm is None:
        return Verdict(PASS, 0.0, detail="no center directions: M^c is the origin")
    pts = manifold_singular_points(spec, cm, half_width, tol=tol)
    if len(pts) == 0:
        return Verdict(INCONCLUSIVE, 0.0, detail="could not sample M^c on S")
    hw = float(np.max(np.atleast_1d(half_width)))
    threshold = tol.tol_eq + 10.0 * cm.invariance_residual(spec, hw)
    vals = np.array([np.linalg.norm(spec.field(U)) for U in pts])
    stat, witness = _worst(vals, pts)
    if stat <= threshold:
        return Verdict(PASS, stat, detail=f"{len(pts)} points of M^c on S tested")
    return Verdict(FAIL, stat, witness=witness, detail="F does not vanish on M^c intersected with S")


def estimate_equilibrium_manifold(spec: SystemSpec, tol: Tolerances = Tolerances(),
                                  probe: float = 0.05) -> Optional[EquilibriumManifold]:
    """Local equilibrium manifold as a graph over ker DF(0), when it exists.

    Returns ``None`` when Newton continuation off the kernel fails, e.g.
    when the equilibria near 0 form a union of manifolds.
    """
    J = spec.jacobian(spec.origin)
    _, sv, vt = np.linalg.svd(J)
    rank = int(np.sum(sv > 1e-8 * max(sv[0], 1.0)))
    K = vt[rank:].T
    C = vt[:rank].T
    n_eq = K.shape[1]
    if n_eq == 0:
        return None

    def param(s):
        U = spec.origin + K @ np.atleast_1d(s)
        for _ in range(40):
            r = spec.field(U)
            if np.linalg.norm(r) <= 1e-14:
                break
            y = np.linalg.lstsq(spec.jacobian(U) @ C, -r, rcond=None)[0] if rank else np.zeros(0)
            U = U + C @ y
        return U

    probes = [np.zeros(n_eq)] + [probe * sgn * np.eye(n_eq)[i] for i in range(n_eq) for sgn in (1, -1)]
    for s in probes:
        if np.linalg.norm(spec.field(param(s))) > tol.tol_eq:
            return None
    return EquilibriumManifold(param=param, dim=n_eq, origin_param=np.zeros(n_eq))


def audit(spec: SystemSpec, eq: Optional[EquilibriumManifold] = None, half_width=0.1, n: int = 64,
          order: int = 3, tol: Tolerances = Tolerances(), seed: int = 0) -> HypothesisReport:
    """Run H1..H5 and collect the verdicts.

    ``seed`` drives the random transverse directions used for the extension of G.
    """
    from .manifolds import center_manifold

    spec = prepare(spec)
    v = {"h1": check_h1(spec, tol)}
    try:
        samples = sample_singular_set(spec, half_width, n, tol.tol_S)
    except SeedingFailed as exc:
        samples = np.zeros((0, spec.dim))
        v["h4"] = v["h5"] = Verdict(INCONCLUSIVE, 0.0, detail=str(exc))
    if len(samples):
        v["h4"] = check_h4(spec, samples, tol)
        if v["h4"].passed:
            try:
                v["h5"] = check_h5(spec, samples, tol, half_width=half_width, seed=seed)
            except ExtensionUndefined as exc:
                v["h5"] = Verdict(FAIL, math.inf, detail=str(exc))
        else:
            v["h5"] = Verdict(INCONCLUSIVE, 0.0, detail="G has no continuous extension since H4 fails")

    if eq is None:
        eq = estimate_equilibrium_manifold(spec, tol)
    try:
        v["h3"] = check_h3(spec, eq, samples, half_width, tol)
    except NoIntersection as exc:
        v["h3"] = Verdict(FAIL, 0.0, detail=str(exc))

    try:
        cm = center_manifold(spec, order)
    except NoCenterDirections:
        cm = None
    except ResolutionFailure as exc:
        v["h2"] = Verdict(INCONCLUSIVE, 0.0, detail=str(exc))
    if "h2" not in v:
        v["h2"] = check_h2(spec, cm, samples, half_width, tol)
    return HypothesisReport(verdicts={k: v[k] for k in sorted(v)}, s_samples=samples)
