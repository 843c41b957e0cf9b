"""Ergodic torus shift dynamics and spectral calculus on the probability torus.

The probability space is the N-torus [0,1)^N with Haar (Lebesgue) measure,
acted on by the shift group ``act(y, omega) = (y + omega) mod 1``.  Functions
on the torus are stored on a uniform M^N grid and interpreted through
band-limited (trigonometric) interpolation, so flow derivatives are spectral
and exact for band-limited data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DynSysError(ValueError):
    """Raised when an operation's hypotheses are violated."""


@dataclass(frozen=True)
class TorusDynamics:
    """The shift dynamical system on the discrete N-torus.

    ``dim`` is the spatial dimension N, ``resolution`` the number of grid
    points per axis used to represent functions on the torus.
    """

    dim: int
    resolution: int

    def __post_init__(self):
        if self.dim < 1:
            raise DynSysError("dim must be a positive integer")
        if self.resolution < 2:
            raise DynSysError("resolution must be >= 2")

    def grid(self) -> np.ndarray:
        """Uniform grid coordinates per axis, shape (resolution,)."""
        return np.arange(self.resolution) / self.resolution

    def act(self, y, omega: "OmegaSample") -> "OmegaSample":
        """Shift omega by y on the torus.  Total, seed-preserving."""
        y = np.broadcast_to(np.asarray(y, dtype=float), (self.dim,))
        coords = np.mod(y + omega.coords, 1.0)
        return OmegaSample(coords=coords, seed=omega.seed)


@dataclass(frozen=True)
class OmegaSample:
    """A point of the probability torus together with its RNG provenance."""

    coords: np.ndarray
    seed: int = 0

    def __post_init__(self):
        coords = np.mod(np.asarray(self.coords, dtype=float), 1.0)
        object.__setattr__(self, "coords", coords)


def sample_omega(dyn: TorusDynamics, seed: int) -> OmegaSample:
    """Draw a Haar-distributed sample; identical seed gives identical coords."""
    rng = np.random.default_rng(seed)
    return OmegaSample(coords=rng.random(dyn.dim), seed=seed)


class StochasticField:
    """A scalar function on the torus, represented on an M^N grid.

    The grid values are read through trigonometric interpolation, which makes
    the field band-limited at resolution M.  All derivative operations are
    spectral.
    """

    def __init__(self, dyn: TorusDynamics, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        expected = (dyn.resolution,) * dyn.dim
        if values.shape != expected:
            raise DynSysError(
                f"values shape {values.shape} does not match grid {expected}"
            )
        self.dyn = dyn
        self.values = values
        self._coeffs = None  # lazy FFT cache

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, dyn: TorusDynamics, c: float) -> "StochasticField":
        return cls(dyn, np.full((dyn.resolution,) * dyn.dim, float(c)))

    @classmethod
    def from_function(cls, dyn: TorusDynamics, func) -> "StochasticField":
        """Sample a callable of the coordinate vector on the grid."""
        axes = np.meshgrid(*([dyn.grid()] * dyn.dim), indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=-1)
        vals = np.asarray(func(pts), dtype=float).reshape((dyn.resolution,) * dyn.dim)
        return cls(dyn, vals)

    @classmethod
    def random_band_limited(
        cls, dyn: TorusDynamics, seed: int, kmax: int = 3, zero_mean: bool = False
    ) -> "StochasticField":
        """Random real field with Fourier support in |k_i| <= kmax."""
        if kmax >= dyn.resolution // 2:
            raise DynSysError("kmax must be below the Nyquist frequency")
        rng = np.random.default_rng(seed)
        shape = (dyn.resolution,) * dyn.dim
        coeffs = np.zeros(shape, dtype=complex)
        freqs = [np.fft.fftfreq(dyn.resolution, d=1.0 / dyn.resolution).astype(int)] * dyn.dim
        mesh = np.meshgrid(*freqs, indexing="ij")
        mask = np.ones(shape, dtype=bool)
        for k in mesh:
            mask &= np.abs(k) <= kmax
        idx = np.argwhere(mask)
        for index in map(tuple, idx):
            coeffs[index] = rng.normal() + 1j * rng.normal()
        # hermitian symmetrization for a real field
        sym = coeffs.copy()
        for ax in range(dyn.dim):
            sym = np.flip(np.roll(sym, -1, axis=ax), axis=ax)
        coeffs = 0.5 * (coeffs + np.conj(sym))
        if zero_mean:
            coeffs[(0,) * dyn.dim] = 0.0
        vals = np.fft.ifftn(coeffs).real * dyn.resolution**dyn.dim
        return cls(dyn, vals)

    # -- spectral machinery ---------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = np.fft.fftn(self.values) / self.values.size
        return self._coeffs

    @property
    def mean(self) -> float:
        """Haar mean; exact quadrature for band-limited fields."""
        return float(np.mean(self.values))

    def _freq(self) -> list[np.ndarray]:
        M = self.dyn.resolution
        k = np.fft.fftfreq(M, d=1.0 / M)
        if M % 2 == 0:
            k = k.copy()
            k[M // 2] = 0.0  # drop the Nyquist mode from derivatives
        return [k] * self.dyn.dim

    def derivative(self, axis: int) -> "StochasticField":
        """Spectral flow derivative along coordinate ``axis``."""
        if not 0 <= axis < self.dyn.dim:
            raise DynSysError(f"axis {axis} out of range for dim {self.dyn.dim}")
        freqs = self._freq()
        shape = [1] * self.dyn.dim
        shape[axis] = self.dyn.resolution
        k = freqs[axis].reshape(shape)
        dcoeffs = self.coeffs * (2j * np.pi * k)
        vals = np.fft.ifftn(dcoeffs).real * self.values.size
        return StochasticField(self.dyn, vals)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at scattered points, shape (P, N) -> (P,)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        M = self.dyn.resolution
        k = np.fft.fftfreq(M, d=1.0 / M)
        mats = [
            np.exp(2j * np.pi * np.outer(points[:, ax], k)) for ax in range(self.dyn.dim)
        ]
        if self.dyn.dim == 1:
            return (mats[0] @ self.coeffs).real
        if self.dyn.dim == 2:
            return np.einsum("pj,jk,pk->p", mats[0], self.coeffs, mats[1]).real
        if self.dyn.dim == 3:
            return np.einsum(
                "pi,pj,pk,ijk->p", mats[0], mats[1], mats[2], self.coeffs
            ).real
        raise DynSysError("scattered evaluation supported for dim <= 3")

    def eval_tensor(self, axes_coords: list[np.ndarray]) -> np.ndarray:
        """Evaluate on a tensor-product point set, one 1D array per axis."""
        if len(axes_coords) != self.dyn.dim:
            raise DynSysError("need one coordinate array per axis")
        M = self.dyn.resolution
        k = np.fft.fftfreq(M, d=1.0 / M)
        out = self.coeffs
        for ax, coords in enumerate(axes_coords):
            e = np.exp(2j * np.pi * np.outer(np.asarray(coords, float), k))
            out = np.tensordot(out, e, axes=([0], [1]))
        # successive tensordot rotates axes consistently: result (R1, ..., RN)
        return out.real

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, StochasticField):
            return StochasticField(self.dyn, self.values + other.values)
        return StochasticField(self.dyn, self.values + other)

    def __sub__(self, other):
        if isinstance(other, StochasticField):
            return StochasticField(self.dyn, self.values - other.values)
        return StochasticField(self.dyn, self.values - other)

    def __mul__(self, scalar):
        return StochasticField(self.dyn, self.values * scalar)

    __rmul__ = __mul__


# -- module operations --------------------------------------------------------


def stoch_derivative(f: StochasticField, axis: int) -> StochasticField:
    """Derivative of f along the i-th flow direction of the shift group."""
    return f.derivative(axis)


def invariant_projection(f: StochasticField) -> StochasticField:
    """Project onto shift-invariant functions: the constants, by ergodicity."""
    return StochasticField.constant(f.dyn, f.mean)


def realization_consistency(
    f: StochasticField,
    omega: OmegaSample,
    y_samples: np.ndarray | None = None,
    fd_step: float = 1e-5,
) -> float:
    """Max residual between the orbit derivative and the flow derivative.

    Compares d/dy_i f(act(y, omega)) (centered finite difference along the
    orbit) with the spectral derivative evaluated at the shifted point.
    """
    dyn = f.dyn
    if y_samples is None:
        rng = np.random.default_rng(omega.seed + 1)
        y_samples = rng.random((16, dyn.dim))
    y_samples = np.atleast_2d(np.asarray(y_samples, float))
    shifted = np.mod(y_samples + omega.coords, 1.0)
    worst = 0.0
    for ax in range(dyn.dim):
        e = np.zeros(dyn.dim)
        e[ax] = fd_step
        # 4th-order centered stencil keeps the truncation error far below
        # the spectral tolerance for low-frequency modes
        fd = (
            -f(np.mod(shifted + 2 * e, 1.0))
            + 8 * f(np.mod(shifted + e, 1.0))
            - 8 * f(np.mod(shifted - e, 1.0))
            + f(np.mod(shifted - 2 * e, 1.0))
        ) / (12 * fd_step)
        spectral = stoch_derivative(f, ax)(shifted)
        worst = max(worst, float(np.max(np.abs(fd - spectral))))
    return worst


def curl_residual(v: list[StochasticField]) -> float:
    """Relative Frobenius norm of the antisymmetric part of the Jacobian."""
    n = len(v)
    num = 0.0
    den = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dij = stoch_derivative(v[j], i).values - stoch_derivative(v[i], j).values
            num += float(np.sum(dij**2))
        for j in range(n):
            den += float(np.sum(stoch_derivative(v[i], j).values ** 2))
    if den == 0.0:
        return 0.0
    return np.sqrt(num / den)


def stoch_potential(
    v: list[StochasticField],
    mean_tol: float = 1e-10,
    curl_tol: float = 1e-8,
) -> StochasticField:
    """Recover the mean-zero potential u with spectral gradient equal to v.

    The components must be mean-zero and curl-free on the torus; the potential
    solves the spectral Poisson problem  laplace(u) = div(v).
    """
    if not v:
        raise DynSysError("empty vector field")
    dyn = v[0].dyn
    if len(v) != dyn.dim:
        raise DynSysError("component count must equal dim")
    for comp in v:
        if abs(comp.mean) > mean_tol:
            raise DynSysError("not in the range of the gradient: nonzero mean component")
    if curl_residual(v) > curl_tol:
        raise DynSysError("hypothesis of the potential lemma violated: curl not zero")

    M = dyn.resolution
    k = np.fft.fftfreq(M, d=1.0 / M)
    if M % 2 == 0:
        k = k.copy()
        k[M // 2] = 0.0
    mesh = np.meshgrid(*([k] * dyn.dim), indexing="ij")
    div_hat = np.zeros((M,) * dyn.dim, dtype=complex)
    for ax, comp in enumerate(v):
        div_hat += (2j * np.pi * mesh[ax]) * comp.coeffs
    k2 = sum((2 * np.pi * m) ** 2 for m in mesh)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_hat = np.where(k2 > 0, -div_hat / k2, 0.0)
    vals = np.fft.ifftn(u_hat).real * M**dyn.dim
    return StochasticField(dyn, vals)


def birkhoff_average(
    f: StochasticField, direction, K: int, omega: OmegaSample
) -> float:
    """Orbit average (1/K) sum_{k<K} f(act(k*direction, omega))."""
    if K <= 0:
        raise DynSysError("K must be positive")
    direction = np.broadcast_to(np.asarray(direction, float), (f.dyn.dim,))
    ks = np.arange(K)[:, None]
    pts = np.mod(omega.coords[None, :] + ks * direction[None, :], 1.0)
    return float(np.mean(f(pts)))


# -- serialization ------------------------------------------------------------


def save_field(path, f: StochasticField) -> None:
    """Raw little-endian array with a one-line text header ``N M mean``."""
    with open(path, "wb") as fh:
        header = f"{f.dyn.dim} {f.dyn.resolution} {f.mean!r}\n"
        fh.write(header.encode("ascii"))
        fh.write(f.values.astype("<f8").tobytes())


def load_field(path) -> StochasticField:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        dim, res = int(header[0]), int(header[1])
        stored_mean = float(header[2])
        raw = np.frombuffer(fh.read(), dtype="<f8").reshape((res,) * dim)
    f = StochasticField(TorusDynamics(dim, res), raw.copy())
    if not np.isclose(f.mean, stored_mean, atol=1e-12):
        raise DynSysError("stored mean does not match field values")
    return f
