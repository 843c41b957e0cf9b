"""Separable test functions and joint quadrature over Q x Omega (x Y, x t).

Test functions are finite sums of products phi(x) * psi(omega) * g(y) with
phi compactly supported in Q, psi band-limited on the probability torus and
g 1-periodic.  Their oscillating realizations read the stochastic factor at
T(x/eps) omega and the periodic factor at x/eps^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Box


class QuadratureError(ValueError):
    pass


# -- factor families ----------------------------------------------------------


def phi_one():
    """Constant macroscopic factor (not admissible for boundary-strict use)."""
    fn = lambda x: np.ones(np.atleast_2d(x).shape[0])
    fn.vanishes_on_boundary = False
    return fn


def phi_bump(box: Box, power: int = 2):
    """Polynomial bump prod (4 s (1-s))^power, vanishing on the boundary."""
    lo, hi = box.lo, box.hi

    def fn(x):
        x = np.atleast_2d(x)
        s = (x - lo) / (hi - lo)
        core = np.clip(4.0 * s * (1.0 - s), 0.0, None)
        return np.prod(core**power, axis=1)

    fn.vanishes_on_boundary = True
    return fn


def phi_box_indicator(lo, hi):
    """Indicator of a closed subbox, compactly supported when strictly inside Q."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)

    def fn(x):
        x = np.atleast_2d(x)
        inside = np.all((x >= lo) & (x < hi), axis=1)
        return inside.astype(float)

    fn.vanishes_on_boundary = True
    return fn


def trig(freq, kind: str = "cos", shift: float = 0.0):
    """cos/sin(2 pi freq . z + shift) on the unit torus; freq integer vector."""
    freq = np.asarray(freq, float)
    op = np.cos if kind == "cos" else np.sin

    def fn(z):
        z = np.atleast_2d(z)
        n = min(z.shape[1], freq.size)
        phase = 2.0 * np.pi * (z[:, :n] @ freq[:n]) + shift
        return op(phase)

    fn.freq = freq
    return fn


def const(value: float = 1.0):
    def fn(z):
        return np.full(np.atleast_2d(z).shape[0], float(value))

    fn.freq = np.zeros(1)
    return fn


@dataclass
class SeparableTestFunction:
    """Finite sum of separable terms (phi, psi, g) over Q x Omega x Y."""

    terms: list
    domain: Box
    name: str = "f"

    def validate(self, strict_boundary: bool = True, tol: float = 1e-12) -> None:
        """Check compact support of phi and 1-periodicity of g."""
        rng = np.random.default_rng(12345)
        dim = self.domain.dim
        for phi, psi, g in self.terms:
            if strict_boundary:
                if getattr(phi, "vanishes_on_boundary", None) is False:
                    raise QuadratureError("phi factor does not vanish on the boundary")
                # sample points on each face of the box
                for ax in range(dim):
                    for val in (self.domain.lo[ax], self.domain.hi[ax]):
                        pts = self.domain.lo + rng.random((8, dim)) * (
                            self.domain.hi - self.domain.lo
                        )
                        pts[:, ax] = val
                        if np.max(np.abs(phi(pts))) > tol:
                            raise QuadratureError("phi does not vanish on the boundary")
            base = rng.random((8, dim))
            for ax in range(dim):
                shifted = base.copy()
                shifted[:, ax] += 1.0
                if np.max(np.abs(g(base) - g(shifted))) > tol:
                    raise QuadratureError("g factor is not 1-periodic")

    def eval_split(self, x, omega_coords, y):
        """Evaluate at matched (x, omega, y) triples of equal length."""
        total = 0.0
        for phi, psi, g in self.terms:
            total = total + phi(x) * psi(omega_coords) * g(y)
        return total

    def oscillating(self, x, omega_coords, eps: float):
        """Realization sum phi(x) psi((x/eps + omega) mod 1) g((x/eps^2) mod 1)."""
        x = np.atleast_2d(np.asarray(x, float))
        omega_coords = np.asarray(omega_coords, float)
        zw = np.mod(x / eps + omega_coords, 1.0)
        zy = np.mod(x / eps**2, 1.0)
        total = 0.0
        for phi, psi, g in self.terms:
            total = total + phi(x) * psi(zw) * g(zy)
        return total


def oscillating_eval(f: SeparableTestFunction, x, omega, eps: float):
    """Pointwise oscillating realization; omega is an OmegaSample or coords."""
    coords = getattr(omega, "coords", omega)
    return f.oscillating(x, coords, eps)


# -- quadrature ---------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution budget for joint quadratures.

    x_res resolves the oscillating eps^2 scale; x_res_limit is the coarser
    grid used for non-oscillating (limit) integrals.  omega_mode is "grid"
    (uniform lattice, exact for band-limited factors) or "mc".
    """

    x_res: int = 256
    x_res_limit: int = 48
    omega_mode: str = "grid"
    omega_res: int = 8
    mc_samples: int = 64
    seed: int = 0
    y_res: int = 16
    t_res: int = 16

    def __post_init__(self):
        if self.x_res < 1 or self.x_res_limit < 1 or self.y_res < 1:
            raise QuadratureError("resolutions must be positive")
        if self.omega_mode not in ("grid", "mc"):
            raise QuadratureError("omega_mode must be 'grid' or 'mc'")

    def omega_nodes(self, dim: int):
        """(coords (S, dim), weights (S,), is_mc)."""
        if self.omega_mode == "grid":
            axes = [(np.arange(self.omega_res) + 0.5) / self.omega_res] * dim
            mesh = np.meshgrid(*axes, indexing="ij")
            coords = np.stack([m.ravel() for m in mesh], axis=-1)
            w = np.full(coords.shape[0], 1.0 / coords.shape[0])
            return coords, w, False
        rng = np.random.default_rng(self.seed)
        coords = rng.random((self.mc_samples, dim))
        w = np.full(self.mc_samples, 1.0 / self.mc_samples)
        return coords, w, True


def _require_resolved(domain: Box, eps: float, x_res: int) -> None:
    extent = float(np.max(domain.hi - domain.lo))
    need = int(np.ceil(4.0 * extent / eps**2))
    if x_res < need:
        raise QuadratureError(
            f"scale unresolved: x_res={x_res} < {need} required for eps={eps}"
        )


def _as_u_callable(u):
    """Normalize u to a callable (x_pts, omega_coords) -> values."""
    if u is None:
        return lambda x, w: np.ones(np.atleast_2d(x).shape[0])
    if np.isscalar(u):
        return lambda x, w, _c=float(u): np.full(np.atleast_2d(x).shape[0], _c)
    if callable(u):
        return u
    raise QuadratureError("u must be a scalar or a callable of (x, omega)")


def pair_integral(u, f: SeparableTestFunction, eps: float, q: QuadratureSpec):
    """Quadrature of int_{QxOmega} u(x, omega) f(x, T(x/eps)omega, x/eps^2).

    Returns (value, mc_error); mc_error is 0 for full-grid omega quadrature.
    """
    domain = f.domain
    _require_resolved(domain, eps, q.x_res)
    ufun = _as_u_callable(u)
    xs = domain.midpoint_grid(q.x_res)
    zy = np.mod(xs / eps**2, 1.0)
    # phi * g factors do not depend on omega: precompute per term
    static = [phi(xs) * g(zy) for phi, _psi, g in f.terms]
    coords, weights, is_mc = q.omega_nodes(domain.dim)
    cell_vol = domain.volume / xs.shape[0]
    per_sample = np.empty(coords.shape[0])
    for s, w_coords in enumerate(coords):
        zw = np.mod(xs / eps + w_coords, 1.0)
        fvals = 0.0
        for (phi, psi, g), pg in zip(f.terms, static):
            fvals = fvals + pg * psi(zw)
        uv = ufun(xs, w_coords)
        per_sample[s] = float(np.sum(uv * fvals)) * cell_vol
    value = float(np.dot(weights, per_sample))
    if is_mc and coords.shape[0] > 1:
        mc_error = float(np.std(per_sample, ddof=1) / np.sqrt(coords.shape[0]))
    else:
        mc_error = 0.0
    return value, mc_error


def triple_integral(u0, f: SeparableTestFunction, q: QuadratureSpec) -> float:
    """Non-oscillating pairing int u0(x, omega, y) f(x, omega, y) dx dmu dy.

    u0 may be a scalar, a callable (x, omega_coords, y) with x and y of equal
    length, or a SeparableTestFunction.
    """
    domain = f.domain
    dim = domain.dim
    xs = domain.midpoint_grid(q.x_res_limit)
    ys = Box.unit(dim).midpoint_grid(q.y_res)
    coords, weights, _ = q.omega_nodes(dim)
    cell_vol = domain.volume / xs.shape[0]
    y_w = 1.0 / ys.shape[0]

    if isinstance(u0, SeparableTestFunction):
        u0fun = lambda x, w, y: u0.eval_split(x, np.broadcast_to(w, x.shape), y)
    elif np.isscalar(u0) or u0 is None:
        c = 1.0 if u0 is None else float(u0)
        u0fun = lambda x, w, y, _c=c: np.full(x.shape[0], _c)
    else:
        u0fun = u0

    total = 0.0
    for w_coords, wt in zip(coords, weights):
        acc = 0.0
        for y_row in ys:
            y_pts = np.broadcast_to(y_row, xs.shape)
            uf = u0fun(xs, w_coords, y_pts)
            fv = 0.0
            for phi, psi, g in f.terms:
                fv = fv + phi(xs) * psi(w_coords[None, :]) * g(y_pts)
            acc += float(np.sum(uf * fv))
        total += wt * acc * cell_vol * y_w
    return total


def norm_convergence_check(
    f: SeparableTestFunction,
    p: float,
    E,
    q: QuadratureSpec,
):
    """Table of (eps, lhs, limit, abs_error) for the |f^eps|^p norm integrals."""
    if p < 1:
        raise QuadratureError("p must be >= 1")
    domain = f.domain
    coords, weights, _ = q.omega_nodes(domain.dim)

    # limit integral over Q x Omega x Y
    xs_c = domain.midpoint_grid(q.x_res_limit)
    ys = Box.unit(domain.dim).midpoint_grid(q.y_res)
    cell_vol_c = domain.volume / xs_c.shape[0]
    limit = 0.0
    for w_coords, wt in zip(coords, weights):
        acc = 0.0
        for y_row in ys:
            y_pts = np.broadcast_to(y_row, xs_c.shape)
            vals = f.eval_split(xs_c, np.broadcast_to(w_coords, xs_c.shape), y_pts)
            acc += float(np.sum(np.abs(vals) ** p))
        limit += wt * acc * cell_vol_c / ys.shape[0]

    rows = []
    prev = None
    for eps in E:
        _require_resolved(domain, eps, q.x_res)
        xs = domain.midpoint_grid(q.x_res)
        cell_vol = domain.volume / xs.shape[0]
        lhs = 0.0
        for w_coords, wt in zip(coords, weights):
            vals = f.oscillating(xs, w_coords, eps)
            lhs += wt * float(np.sum(np.abs(vals) ** p)) * cell_vol
        rows.append((float(eps), lhs, limit, abs(lhs - limit)))
    return rows


def trend_ok(errors, atol: float = 1e-12) -> bool:
    """Median of successive error ratios below 1 (non-increasing trend).

    Errors at or below ``atol`` are quadrature noise and count as converged.
    """
    errors = [float(e) for e in errors]
    if len(errors) < 2 or errors[-1] <= atol:
        return True
    ratios = []
    for a, b in zip(errors[:-1], errors[1:]):
        if a <= atol:
            ratios.append(0.0 if b <= atol else np.inf)
        else:
            ratios.append(b / a)
    return float(np.median(ratios)) < 1.0


# -- time-dependent variants --------------------------------------------------


@dataclass
class TimeSeparableTestFunction:
    """Terms (eta(t), phi, psi, g) over [0,T] x Q x Omega x Y."""

    terms: list
    domain: Box
    horizon: float
    name: str = "f_t"

    def spatial_at(self, t: float) -> SeparableTestFunction:
        scaled = []
        for eta, phi, psi, g in self.terms:
            c = float(eta(t))
            scaled.append((_scale_factor(phi, c), psi, g))
        return SeparableTestFunction(scaled, self.domain, name=self.name)


def _scale_factor(phi, c: float):
    def fn(x):
        return c * phi(x)

    fn.vanishes_on_boundary = getattr(phi, "vanishes_on_boundary", None)
    return fn


def time_grid(T: float, t_res: int) -> np.ndarray:
    return np.linspace(0.0, T, t_res + 1)


def pair_integral_time(
    u, f: TimeSeparableTestFunction, eps: float, q: QuadratureSpec
):
    """Trapezoid-in-time pairing of u(t, x, omega) with the realization of f."""
    ts = time_grid(f.horizon, q.t_res)
    vals = np.empty(ts.size)
    errs = np.empty(ts.size)
    for i, t in enumerate(ts):
        ut = (lambda x, w, _t=t: u(_t, x, w)) if callable(u) else u
        vals[i], errs[i] = pair_integral(ut, f.spatial_at(t), eps, q)
    value = float(np.trapz(vals, ts))
    mc_error = float(np.trapz(errs, ts))
    return value, mc_error


def triple_integral_time(u0, f: TimeSeparableTestFunction, q: QuadratureSpec) -> float:
    ts = time_grid(f.horizon, q.t_res)
    vals = np.empty(ts.size)
    for i, t in enumerate(ts):
        u0t = (lambda x, w, y, _t=t: u0(_t, x, w, y)) if callable(u0) else u0
        vals[i] = triple_integral(u0t, f.spatial_at(t), q)
    return float(np.trapz(vals, ts))
