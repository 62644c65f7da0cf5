"""Center and uniformly stable manifolds of the desingularized field dU/dtau = F(U).

Invariant manifolds are represented as polynomial graphs over an invariant
subspace of the linearization. Writing ``U = base + V_dom x + V_cod y`` and
``g = [V_dom V_cod]^{-1} F(U)``, the graph ``y = h(x)`` is invariant iff

    Dh(x) g_x(x, h(x)) = g_y(x, h(x)).

The coefficients of ``h`` are found degree by degree. At degree m the unknown
part enters linearly through ``C M_m - A_cod C``, where ``M_m`` represents
``x -> A_dom x`` acting on degree-m monomials, so each degree is one small
linear solve. The lower-degree remainder is computed exactly with jets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from . import taylor
from .core import SystemSpec, Trajectory
from .errors import (DivisionDefect, IllConditioned, InvalidSystem, NoAsymptoticEquilibrium,
                     NoCenterDirections, NoStableDirections, NotOnManifold, ResolutionFailure,
                     ValidationFailure)
from .hypotheses import EquilibriumManifold, Tolerances, manifold_singular_points, prepare

TOL_CENTER = 1e-8
RESIDUAL_CAP = 1e-6
SLACK = 0.2


# --------------------------------------------------------------------------
# spectral splitting

@dataclass
class SpectralSplit:
    stable: np.ndarray
    center: np.ndarray
    unstable: np.ndarray
    eigenvalues: np.ndarray

    def complement(self, *names) -> np.ndarray:
        """Orthonormal basis of the sum of the named subspaces."""
        blocks = [getattr(self, n) for n in names]
        M = np.hstack(blocks) if blocks else np.zeros((self.stable.shape[0], 0))
        if M.shape[1] == 0:
            return M
        q, _ = np.linalg.qr(M)
        return q


def _invariant_basis(A, select, expected):
    if expected == 0:
        return np.zeros((A.shape[0], 0))
    try:
        _, Z, sdim = linalg.schur(A, output="real", sort=select)
    except (linalg.LinAlgError, ValueError) as exc:
        raise IllConditioned(f"Schur reordering failed: {exc}") from exc
    if sdim != expected:
        raise IllConditioned("eigenvalue classification is unstable under reordering")
    return Z[:, :sdim]


def spectral_split(A, tol_center: float = TOL_CENTER, cond_tol: float = 1e-8) -> SpectralSplit:
    """Invariant subspaces of A for Re < -tol, |Re| <= tol and Re > tol."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    lam = np.linalg.eigvals(A)
    ns = int(np.sum(lam.real < -tol_center))
    nu = int(np.sum(lam.real > tol_center))
    nc = A.shape[0] - ns - nu
    Vs = _invariant_basis(A, lambda re, im: re < -tol_center, ns)
    Vu = _invariant_basis(A, lambda re, im: re > tol_center, nu)
    Vc = _invariant_basis(A, lambda re, im: abs(re) <= tol_center, nc)
    sv = np.linalg.svd(np.hstack([Vs, Vc, Vu]), compute_uv=False)
    if sv[-1] < cond_tol * sv[0]:
        raise IllConditioned(f"invariant subspaces nearly parallel (sigma_min = {sv[-1]:.2e})")
    return SpectralSplit(stable=Vs, center=Vc, unstable=Vu, eigenvalues=lam)


# --------------------------------------------------------------------------
# polynomial graphs

def _monomials(x, exps):
    x = np.asarray(x, dtype=float)
    return np.prod(x[None, :] ** exps, axis=1)


def _monomial_jacobian(x, exps):
    """d phi_j / d x_v for every monomial j, shape (N, k)."""
    x = np.asarray(x, dtype=float)
    N, k = exps.shape
    out = np.zeros((N, k))
    for v in range(k):
        e = exps.copy()
        fac = e[:, v].astype(float)
        e[:, v] = np.maximum(e[:, v] - 1, 0)
        out[:, v] = fac * np.prod(x[None, :] ** e, axis=1)
    return out


@dataclass
class TaylorManifold:
    """Graph y = h(x) over ``domain`` with values in ``codomain``, based at ``base``."""

    base: np.ndarray
    domain: np.ndarray
    codomain: np.ndarray
    coefficients: dict
    order: int
    residual: float = math.nan
    validity_radius: float = math.nan
    radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.frame = np.hstack([self.domain, self.codomain])
        self.frame_inv = np.linalg.inv(self.frame) if self.frame.size else self.frame

    @property
    def dim(self) -> int:
        return self.base.size

    @property
    def k(self) -> int:
        return self.domain.shape[1]

    @property
    def codim(self) -> int:
        return self.codomain.shape[1]

    def _stack(self):
        b = taylor.basis(self.k, self.order)
        sl = b.degree_slice(2).start if self.order >= 2 else b.size
        C = np.zeros((self.codim, b.size))
        for deg, c in self.coefficients.items():
            C[:, b.degree_slice(deg)] = c
        return b.exponents[sl:], C[:, sl:]

    def graph(self, x) -> np.ndarray:
        if self.codim == 0 or self.order < 2:
            return np.zeros(self.codim)
        exps, C = self._stack()
        return C @ _monomials(x, exps)

    def graph_derivative(self, x) -> np.ndarray:
        if self.codim == 0 or self.order < 2:
            return np.zeros((self.codim, self.k))
        exps, C = self._stack()
        return C @ _monomial_jacobian(x, exps)

    def lift(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.base + self.domain @ x + self.codomain @ self.graph(x)

    def lift_derivative(self, x) -> np.ndarray:
        return self.domain + self.codomain @ self.graph_derivative(x)

    def coords(self, U):
        """Frame coordinates (x, y) of a state."""
        w = self.frame_inv @ (np.asarray(U, dtype=float) - self.base)
        return w[:self.k], w[self.k:]

    def defect(self, U) -> np.ndarray:
        """y - h(x): zero iff U lies on the graph."""
        x, y = self.coords(U)
        return y - self.graph(x)

    def distance(self, U) -> float:
        return float(np.linalg.norm(self.codomain @ self.defect(U)))

    def reduced_field(self, spec: SystemSpec, x) -> np.ndarray:
        """The tau-field on the manifold in graph coordinates."""
        g = self.frame_inv @ spec.field(self.lift(x))
        return g[:self.k]

    def invariance_defect(self, spec: SystemSpec, x) -> float:
        g = self.frame_inv @ spec.field(self.lift(x))
        return float(np.linalg.norm(self.graph_derivative(x) @ g[:self.k] - g[self.k:]))

    def sphere(self, r: float, n: int = 64) -> np.ndarray:
        k = self.k
        if k == 0:
            return np.zeros((1, 0))
        pts = [r * s * np.eye(k)[i] for i in range(k) for s in (1.0, -1.0)]
        if k > 1:
            rng = np.random.default_rng(0)
            dirs = rng.standard_normal((n, k))
            pts.extend(r * dirs / np.linalg.norm(dirs, axis=1, keepdims=True))
        return np.array(pts)

    def invariance_residual(self, spec: SystemSpec, r: float) -> float:
        """Max invariance defect over a sphere of radius r in graph coordinates."""
        if self.codim == 0:
            return 0.0
        return max(self.invariance_defect(spec, x) for x in self.sphere(r))

    def to_dict(self) -> dict:
        terms = []
        if self.order >= 2 and self.codim:
            exps, C = self._stack()
            for j, e in enumerate(exps):
                terms.append({"multi_index": [int(a) for a in e],
                              "codomain_coeffs": [float(c) for c in C[:, j]]})
        return {
            "base": [float(a) for a in self.base],
            "graph_domain": [[float(a) for a in row] for row in self.domain],
            "graph_codomain": [[float(a) for a in row] for row in self.codomain],
            "coefficients": terms,
            "order": int(self.order),
            "residual": float(self.residual),
            "validity_radius": float(self.validity_radius),
        }


def _lie_matrix(Ad, k, m):
    """Matrix of phi -> grad(phi) . (Ad x) on degree-m monomials."""
    b = taylor.basis(k, m)
    sl = b.degree_slice(m)
    exps = b.exponents[sl]
    N = exps.shape[0]
    M = np.zeros((N, N))
    for j, e in enumerate(exps):
        for v in range(k):
            if e[v] == 0:
                continue
            for w in range(k):
                t = e.copy()
                t[v] -= 1
                t[w] += 1
                M[b.index[tuple(t)] - sl.start, j] += e[v] * Ad[v, w]
    return M


def _jet_rows(C, k, m):
    return [taylor.Jet(row, k, m) for row in C]


def _remainder(F, base, frame, frame_inv, k, coeffs, m):
    """Degree-m coefficients of Dh g_x - g_y with h truncated below degree m."""
    d = base.size
    b = taylor.basis(k, m)
    X = np.zeros((k, b.size))
    for i in range(k):
        X[i, b.index[tuple(np.eye(k, dtype=int)[i])]] = 1.0
    Y = np.zeros((d - k, b.size))
    for deg, c in coeffs.items():
        if deg < m:
            Y[:, b.degree_slice(deg)] = c
    Z = frame @ np.vstack([X, Y])
    Z[:, 0] += base
    U = np.empty(d, dtype=object)
    U[:] = _jet_rows(Z, k, m)
    values = np.atleast_1d(F(U))
    G = frame_inv @ taylor.jets_to_array(list(values), k, m)
    gx = _jet_rows(G[:k], k, m)
    out = np.zeros((d - k, b.size))
    for r in range(d - k):
        y = taylor.Jet(Y[r], k, m)
        acc = taylor.Jet(-G[k + r], k, m)
        for i in range(k):
            acc = acc + y.derivative(i) * gx[i]
        out[r] = acc.c
    return out[:, b.degree_slice(m)]


def invariant_graph(spec: SystemSpec, base, domain, codomain, order: int, radius: float = 1e-2) -> TaylorManifold:
    """Invariant graph over an invariant subspace of DF(base), up to ``order``."""
    if order < 2:
        raise ValueError("order must be at least 2")
    base = np.asarray(base, dtype=float)
    k = domain.shape[1]
    frame = np.hstack([domain, codomain])
    frame_inv = np.linalg.inv(frame)
    coeffs: dict = {}
    if codomain.shape[1] and k:
        if not taylor.supports_jets(spec.F, base):
            raise InvalidSystem("F must accept arrays of Jet objects to build invariant manifolds")
        B = frame_inv @ spec.jacobian(base) @ frame
        Ad, Ac = B[:k, :k], B[k:, k:]
        mc = codomain.shape[1]
        for m in range(2, order + 1):
            E = _remainder(spec.F, base, frame, frame_inv, k, coeffs, m)
            M = _lie_matrix(Ad, k, m)
            N = M.shape[0]
            # vec(C M - Ac C) = (M^T kron I - I kron Ac) vec(C), column-major vec
            L = np.kron(M.T, np.eye(mc)) - np.kron(np.eye(N), Ac)
            sv = np.linalg.svd(L, compute_uv=False)
            if sv[-1] <= 1e-10 * max(sv[0], 1.0):
                raise ResolutionFailure(f"degree-{m} homological equation is singular (resonance)")
            vecC = np.linalg.solve(L, -E.reshape(-1, order="F"))
            coeffs[m] = vecC.reshape(mc, N, order="F")
    cm = TaylorManifold(base=base, domain=domain, codomain=codomain, coefficients=coeffs, order=order)
    _measure(spec, cm, radius)
    return cm


def _measure(spec, cm, radius):
    radii = 1e-3 * 2.0 ** np.arange(11)
    res = np.array([cm.invariance_residual(spec, r) for r in radii])
    cm.radii, cm.residuals = radii, res
    cm.residual = cm.invariance_residual(spec, radius)
    ok = radii[res < RESIDUAL_CAP]
    # largest sampled radius with every smaller radius also below the cap
    good = 0.0
    for r, v in zip(radii, res):
        if v >= RESIDUAL_CAP:
            break
        good = r
    cm.validity_radius = float(good if len(ok) else 0.0)


def center_manifold(spec: SystemSpec, order: int = 3, tol_center: float = TOL_CENTER) -> TaylorManifold:
    """Local center manifold of dU/dtau = F(U) at the origin, to the given degree."""
    spec = prepare(spec)
    split = spectral_split(spec.jacobian(spec.origin), tol_center)
    if split.center.shape[1] == 0:
        raise NoCenterDirections("the linearization at the origin is hyperbolic")
    return invariant_graph(spec, spec.origin, split.center, split.complement("stable", "unstable"), order)


# --------------------------------------------------------------------------
# reduced slow field

class SlowField:
    """dx/dt = g_x(x, h(x)) / zeta(lift(x)) on a center manifold.

    Where |zeta| is below ``zeta_switch`` the quotient is replaced by a
    central difference quotient across S along grad_x zeta, which is the
    continuous extension whenever the numerator vanishes on M^c and S.
    """

    def __init__(self, spec: SystemSpec, cm: TaylorManifold, zeta_switch: float = 1e-7, delta: float = 1e-4):
        self.spec = spec
        self.cm = cm
        self.zeta_switch = zeta_switch
        self.delta = delta

    def zeta(self, x) -> float:
        return self.spec.zeta_at(self.cm.lift(x))

    def tau_field(self, x) -> np.ndarray:
        return self.cm.reduced_field(self.spec, x)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = self.zeta(x)
        X = self.tau_field(x)
        if abs(z) > self.zeta_switch:
            return X / z
        w = self.spec.zeta_gradient(self.cm.lift(x)) @ self.cm.lift_derivative(x)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise DivisionDefect("zeta is stationary along the manifold at a singular point")
        w = w / nw
        xp, xm = x + self.delta * w, x - self.delta * w
        return (self.tau_field(xp) - self.tau_field(xm)) / (self.zeta(xp) - self.zeta(xm))


def reduced_slow_field(spec: SystemSpec, cm: TaylorManifold, half_width: float = 0.1,
                       tol: Tolerances = Tolerances()) -> SlowField:
    """The regularized flow on M^c in t-time.

    Raises :class:`DivisionDefect` when F does not vanish on M^c intersected
    with S, in which case the quotient has a genuine pole.
    """
    spec = prepare(spec)
    pts = manifold_singular_points(spec, cm, half_width, tol=tol)
    threshold = tol.tol_eq + 10.0 * cm.invariance_residual(spec, half_width)
    for U in pts:
        val = np.linalg.norm(spec.field(U))
        if val > threshold:
            raise DivisionDefect(f"|F| = {val:.3g} at {U.tolist()} on M^c and S: the slow field has a pole")
    return SlowField(spec, cm)


# --------------------------------------------------------------------------
# uniformly stable manifold

def stable_fiber(spec: SystemSpec, base, order: int = 3, tol_center: float = TOL_CENTER,
                 n_stable: Optional[int] = None):
    """Strong stable fiber at an equilibrium, with its stable eigenvalues.

    Returns ``(manifold, eigenvalues)``.
    """
    base = np.asarray(base, dtype=float)
    split = spectral_split(spec.jacobian(base), tol_center)
    ns = split.stable.shape[1]
    if ns == 0:
        raise NoStableDirections(f"no stable directions at {base.tolist()}")
    if n_stable is not None and ns != n_stable:
        raise NoStableDirections(f"stable dimension {ns} differs from {n_stable}")
    fiber = invariant_graph(spec, base, split.stable, split.complement("center", "unstable"), order)
    lam = split.eigenvalues[split.eigenvalues.real < -tol_center]
    return fiber, lam


@dataclass
class StableFiberBundle:
    spec: SystemSpec
    eq: EquilibriumManifold
    params: list
    fibers: list
    decay_rates: list
    stable_eigenvalues: list
    stable_dim: int
    order: int
    boundary: Optional[np.ndarray] = None

    def fiber_at(self, s) -> TaylorManifold:
        return stable_fiber(self.spec, self.eq.point(s), self.order)[0]

    @property
    def base_points(self) -> list:
        return [f.base for f in self.fibers]

    def to_dict(self) -> dict:
        return {
            "stable_dim": self.stable_dim,
            "boundary": None if self.boundary is None else [float(a) for a in self.boundary],
            "fibers": [
                {"param": [float(a) for a in s], "decay_rate": float(r), **f.to_dict()}
                for s, f, r in zip(self.params, self.fibers, self.decay_rates)
            ],
        }


def _params_for_zeta(spec, eq, targets, tol=1e-12):
    out = []
    s = np.asarray(eq.origin_param, dtype=float).copy()
    for target in targets:
        for _ in range(60):
            U = eq.point(s)
            r = spec.zeta_at(U) - target
            if abs(r) <= tol:
                break
            gs = spec.zeta_gradient(U) @ eq.tangent_basis(s)
            s = s - r * gs / (gs @ gs)
        out.append(s.copy())
    return out


def _log_slope(tau, dist):
    keep = dist > 1e-300
    if keep.sum() < 2:
        return -math.inf
    return float(np.polyfit(tau[keep], np.log(dist[keep]), 1)[0])


def validate_fiber(spec: SystemSpec, fiber: TaylorManifold, rate: float, amplitude: float = 1e-4,
                   window=(0.5, 3.0), slack: float = SLACK) -> float:
    """Integrate dU/dtau = F from fiber points and check the decay rate.

    Returns the slowest fitted rate.
    """
    taus = np.linspace(window[0], window[1], 26)
    worst = math.inf
    for i in range(fiber.k):
        x = amplitude * np.eye(fiber.k)[i]
        sol = solve_ivp(lambda _t, U: spec.field(U), (0.0, window[1]), fiber.lift(x), method="DOP853",
                        t_eval=taus, rtol=1e-12, atol=1e-16)
        dist = np.linalg.norm(sol.y.T - fiber.base, axis=1)
        fitted = -_log_slope(taus, dist)
        worst = min(worst, fitted)
        if fitted < rate * (1.0 - slack):
            raise ValidationFailure(
                f"fiber at {fiber.base.tolist()} decays at {fitted:.4g} < {(1 - slack) * rate:.4g}")
    return worst


def uniformly_stable_manifold(spec: SystemSpec, eq: EquilibriumManifold, n_base: int = 8, zeta_max: float = 0.1,
                              params=None, order: int = 3, validate: bool = True) -> StableFiberBundle:
    """Stable fibers over sampled base points of the equilibrium manifold.

    Base points are visited in order of decreasing zeta, ending on S. When
    the stable dimension changes the sweep stops and the parameter is kept
    as ``boundary``.
    """
    spec = prepare(spec)
    if params is None:
        targets = np.linspace(zeta_max, 0.0, n_base)
        params = _params_for_zeta(spec, eq, targets)
    params = [np.atleast_1d(np.asarray(s, dtype=float)) for s in params]
    kept, fibers, rates, eigs = [], [], [], []
    stable_dim = None
    boundary = None
    for s in params:
        p = eq.point(s)
        try:
            fiber, lam = stable_fiber(spec, p, order)
        except NoStableDirections:
            if stable_dim is None:
                raise
            boundary = s
            break
        if stable_dim is None:
            stable_dim = fiber.k
        elif fiber.k != stable_dim:
            boundary = s
            break
        rate = float(np.min(-lam.real))
        if validate:
            validate_fiber(spec, fiber, rate)
        kept.append(s)
        fibers.append(fiber)
        rates.append(rate)
        eigs.append(lam)
    return StableFiberBundle(spec=spec, eq=eq, params=kept, fibers=fibers, decay_rates=rates,
                             stable_eigenvalues=eigs, stable_dim=int(stable_dim), order=order, boundary=boundary)


# --------------------------------------------------------------------------
# slow / fast / perturbation decomposition

@dataclass
class OrbitDecomposition:
    slow: Trajectory
    fast: Trajectory
    pert: Trajectory
    c_estimate: float
    limit_equilibrium: np.ndarray
    fast_rate: float
    slow_initial: np.ndarray


def _like(traj: Trajectory, U) -> Trajectory:
    return Trajectory(t=traj.t, tau=traj.tau, U=U, zeta=traj.zeta, rhs_norm=traj.rhs_norm,
                      termination=traj.termination)


def _fast_projector(J, reference):
    """Spectral projector of J onto the eigenvalues matched to ``reference``."""
    lam, V = np.linalg.eig(J)
    chosen = []
    for mu in reference:
        free = [i for i in range(lam.size) if i not in chosen]
        chosen.append(min(free, key=lambda i: abs(lam[i] - mu)))
    W = np.linalg.inv(V)
    P = V[:, chosen] @ W[chosen, :]
    return P.real, lam[chosen]


def decompose_orbit(spec: SystemSpec, bundle: StableFiberBundle, traj: Trajectory, tol_mfd: float = 1e-6,
                    conv_ratio: float = 0.5, cm: Optional[TaylorManifold] = None,
                    rtol: float = 1e-13, atol: float = 1e-15) -> OrbitDecomposition:
    """Split an orbit on M^us into slow, fast and perturbation parts.

    * the limit equilibrium p* is the base of the fiber through U(0);
    * fast directions are the eigenvectors of DF(p*) whose eigenvalues
      continue the stable eigenvalues at the origin;
    * fast(t) is the spectral projection of U(t) - p* on those directions;
    * slow(t) is the orbit of the reduced slow field on M^c started at the
      point whose non-fast part matches U(0);
    * pert = U - slow - fast.
    """
    spec = prepare(spec)
    if np.any(traj.zeta <= 0):
        raise NotOnManifold("zeta must stay positive along the orbit")
    U0 = traj.U[0]

    dists = [f.distance(U0) for f in bundle.fibers]
    s_init = bundle.params[int(np.argmin(dists))]
    fit = least_squares(lambda s: bundle.fiber_at(s).defect(U0), s_init, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    s_star = fit.x
    fiber = bundle.fiber_at(s_star)
    if fiber.distance(U0) > tol_mfd:
        raise NotOnManifold(f"U(0) is {fiber.distance(U0):.3g} away from the stable fiber bundle")
    p_star = fiber.base

    d0 = np.linalg.norm(U0 - p_star)
    d_end = np.linalg.norm(traj.U[-1] - p_star)
    if d0 > 0 and d_end > conv_ratio * d0:
        raise NoAsymptoticEquilibrium(f"distance to p* went from {d0:.3g} to {d_end:.3g}")

    if cm is None:
        cm = center_manifold(spec)
    ref = spectral_split(spec.jacobian(spec.origin))
    ref_lam = ref.eigenvalues[ref.eigenvalues.real < -TOL_CENTER]
    P, fast_lam = _fast_projector(spec.jacobian(p_star), ref_lam)
    Q = np.eye(spec.dim) - P

    x_init = cm.coords(U0)[0]
    xs = least_squares(lambda x: Q @ (U0 - cm.lift(x)), x_init, xtol=1e-15, ftol=1e-15, gtol=1e-15).x
    slow_field = reduced_slow_field(spec, cm)
    if traj.t[-1] > traj.t[0]:
        sol = solve_ivp(lambda _t, x: slow_field(x), (traj.t[0], traj.t[-1]), xs, method="DOP853",
                        t_eval=traj.t, rtol=rtol, atol=atol)
        X = sol.y.T
    else:
        X = xs[None, :]
    slow = np.array([cm.lift(x) for x in X])
    fast = (traj.U - p_star) @ P.T
    pert = traj.U - slow - fast

    f0 = np.linalg.norm(fast[0])
    c_est = float(np.max(np.linalg.norm(pert, axis=1)) / (f0 * traj.zeta[0])) if f0 > 0 else 0.0
    rate = -_log_slope(traj.tau, np.linalg.norm(fast, axis=1)) if f0 > 0 else math.inf
    return OrbitDecomposition(slow=_like(traj, slow), fast=_like(traj, fast), pert=_like(traj, pert),
                              c_estimate=c_est, limit_equilibrium=p_star, fast_rate=rate, slow_initial=xs)


# --------------------------------------------------------------------------
# sign preservation

@dataclass
class SignCheck:
    passed: bool
    min_zeta: float
    index: Optional[int] = None
    t: Optional[float] = None
    state: Optional[np.ndarray] = None


def verify_sign_preservation(traj: Trajectory) -> SignCheck:
    """Pass iff zeta stays positive; an orbit stopped on S counts as a crossing."""
    z = traj.zeta
    bad = np.flatnonzero(z <= 0)
    if bad.size:
        i = int(bad[0])
    elif traj.termination == "singularity_reached":
        i = len(traj) - 1
    else:
        return SignCheck(True, float(z.min()))
    return SignCheck(False, float(z.min()), i, float(traj.t[i]), traj.U[i].copy())
