"""Semiclassically scaled Schroedinger propagation on a periodic grid.

Solves i eps dPsi/dt = -eps^2/2 Laplacian Psi + V Psi with a second-order
Strang splitting: half potential phase, spectral kinetic step, half
potential phase.  The conical kink of V is applied exactly as a pointwise
multiplier (no mollification); grids are periodic with a guard band watched
for wrap-around mass.

Dimensions 1 and 2 are supported; all desk experiments run in d = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BoundaryMassExceeded, DimensionMismatch, ProfileClipped
from .potential import ConicalPotential

__all__ = [
    "GridSpec",
    "WaveFunction",
    "init_concentrated_state",
    "step_strang",
    "propagate",
    "observables",
    "energy_expectation",
    "save_snapshot_csv",
]

BOUNDARY_MASS_TOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    d: int
    half_width: float
    n: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DimensionMismatch(f"grid supports d in (1, 2), got {self.d}")
        if self.n & (self.n - 1) or self.n <= 0:
            raise ValueError("points per axis must be a power of two")
        if self.half_width <= 0:
            raise ValueError("half width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def dvol(self) -> float:
        return self.dx**self.d

    def axis(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def points(self) -> np.ndarray:
        """All grid points, shape (n,)**d x d."""
        ax = self.axis()
        if self.d == 1:
            return ax[:, None]
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d


@dataclass
class WaveFunction:
    grid: GridSpec
    eps: float
    values: np.ndarray
    t: float = 0.0

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dvol))

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def boundary_mass(self) -> float:
        """Probability mass within 2 dx of the periodic boundary."""
        rho = self.density() * self.grid.dvol
        if self.grid.d == 1:
            return float(rho[:2].sum() + rho[-2:].sum())
        edge = np.zeros(self.grid.shape(), dtype=bool)
        edge[:2, :] = edge[-2:, :] = True
        edge[:, :2] = edge[:, -2:] = True
        return float(rho[edge].sum())

    def normalized(self) -> "WaveFunction":
        return replace(self, values=self.values / self.norm())


def init_concentrated_state(
    grid: GridSpec, eps: float, profile, x0, xi0
) -> WaveFunction:
    """Build eps^{-d/4} a((x - x0)/sqrt(eps)) e^{i xi0.(x - x0)/eps},
    grid-normalized.

    ``profile`` is called with one rescaled coordinate array per axis.
    Raises ProfileClipped when the scaled support leaks into the guard band.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    pts = grid.points()
    y = (pts - x0) / np.sqrt(eps)
    amp = profile(*(y[..., i] for i in range(grid.d)))
    phase = np.exp(1j * np.tensordot(pts - x0, xi0, axes=([-1], [0])) / eps)
    values = eps ** (-grid.d / 4.0) * amp.astype(complex) * phase
    psi = WaveFunction(grid=grid, eps=eps, values=values, t=0.0)
    total = np.sum(psi.density()) * grid.dvol
    if total <= 0:
        raise ProfileClipped("profile vanishes on the grid")
    if psi.boundary_mass() / total > 1e-12:
        raise ProfileClipped("profile support exceeds the grid guard band")
    return psi.normalized()


class _StrangKernel:
    """Cached grid data for repeated Strang steps under a fixed potential."""

    def __init__(self, grid: GridSpec, eps: float, potential: ConicalPotential):
        if potential.d != grid.d:
            raise DimensionMismatch("potential and grid dimension differ")
        self.grid = grid
        self.eps = eps
        pts = grid.points().reshape(-1, grid.d)
        self.v_grid = potential.eval_V(pts).reshape(grid.shape())
        k = grid.wavenumbers()
        if grid.d == 1:
            self.k_sq = k**2
        else:
            self.k_sq = k[:, None] ** 2 + k[None, :] ** 2
        self._dt = None
        self._half_v = None
        self._kin = None

    def phases(self, dt: float):
        if dt != self._dt:
            self._dt = dt
            self._half_v = np.exp(-0.5j * self.v_grid * dt / self.eps)
            self._kin = np.exp(-0.5j * self.eps * self.k_sq * dt)
        return self._half_v, self._kin

    def step(self, values: np.ndarray, dt: float) -> np.ndarray:
        half_v, kin = self.phases(dt)
        out = half_v * values
        out = np.fft.ifftn(kin * np.fft.fftn(out))
        return half_v * out


def step_strang(psi: WaveFunction, potential: ConicalPotential, dt: float) -> WaveFunction:
    """One Strang step; norm preserved to roundoff (all factors unitary)."""
    if dt == 0:
        return replace(psi, values=psi.values.copy())
    kernel = _StrangKernel(psi.grid, psi.eps, potential)
    return replace(psi, values=kernel.step(psi.values, dt), t=psi.t + dt)


def propagate(
    psi: WaveFunction,
    potential: ConicalPotential,
    t_end: float,
    dt: float,
    snapshot_times=(),
) -> list[WaveFunction]:
    """Propagate to t_end with fixed steps, returning snapshots at the
    requested times (nearest step, endpoint included).

    Raises BoundaryMassExceeded when guard-band mass crosses the threshold
    at a snapshot, signalling a too-small box.
    """
    span = t_end - psi.t
    if abs(span) < 1e-15:
        return [replace(psi, values=psi.values.copy())]
    n_steps = max(1, int(np.ceil(abs(span) / dt - 1e-9)))
    h = span / n_steps
    kernel = _StrangKernel(psi.grid, psi.eps, potential)

    wanted = sorted(set(int(round((t - psi.t) / h)) for t in snapshot_times))
    wanted = [min(max(i, 0), n_steps) for i in wanted] or [n_steps]
    if n_steps not in wanted:
        wanted.append(n_steps)

    snaps: list[WaveFunction] = []
    values = psi.values.copy()
    t0 = psi.t
    next_idx = 0
    if wanted[0] == 0:
        snaps.append(replace(psi, values=values.copy()))
        next_idx = 1
    for step_no in range(1, n_steps + 1):
        values = kernel.step(values, h)
        if next_idx < len(wanted) and step_no == wanted[next_idx]:
            snap = replace(psi, values=values.copy(), t=t0 + step_no * h)
            if snap.boundary_mass() > BOUNDARY_MASS_TOL:
                raise BoundaryMassExceeded(
                    f"guard-band mass {snap.boundary_mass():.2e} at t={snap.t:.3f}"
                )
            snaps.append(snap)
            next_idx += 1
    return snaps


def observables(psi: WaveFunction):
    """Position mean, momentum mean (spectral), and position variance,
    one entry per axis."""
    grid = psi.grid
    rho = psi.density()
    total = rho.sum() * grid.dvol
    pts = grid.points()
    x_mean = (rho[..., None] * pts).reshape(-1, grid.d).sum(axis=0) * grid.dvol / total
    x_var = (
        (rho[..., None] * (pts - x_mean) ** 2).reshape(-1, grid.d).sum(axis=0)
        * grid.dvol
        / total
    )
    psi_hat = np.fft.fftn(psi.values)
    w = np.abs(psi_hat) ** 2
    wsum = w.sum()
    k = grid.wavenumbers()
    xi_mean = np.empty(grid.d)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.n
        xi_mean[axis] = psi.eps * (w * k.reshape(shape)).sum() / wsum
    return x_mean, xi_mean, x_var


def energy_expectation(psi: WaveFunction, potential: ConicalPotential) -> float:
    """<H> = <Psi, (-eps^2/2 Lap + V) Psi> on the grid."""
    grid = psi.grid
    kernel = _StrangKernel(grid, psi.eps, potential)
    psi_hat = np.fft.fftn(psi.values)
    w = np.abs(psi_hat) ** 2
    kinetic = 0.5 * psi.eps**2 * (w * kernel.k_sq).sum() / w.sum()
    rho = psi.density()
    potential_term = (rho * kernel.v_grid).sum() * grid.dvol
    return float(kinetic + potential_term)


def save_snapshot_csv(psi: WaveFunction, path) -> None:
    if psi.grid.d != 1:
        raise DimensionMismatch("snapshot CSV export is one-dimensional")
    x = psi.grid.axis()
    with open(path, "w") as fh:
        fh.write("x,re_psi,im_psi\n")
        for xv, pv in zip(x, psi.values):
            fh.write(f"{xv:.17g},{pv.real:.17g},{pv.imag:.17g}\n")


def save_run_metadata(path, psi: WaveFunction, dt: float, potential: ConicalPotential) -> None:
    import json

    meta = {
        "eps": psi.eps,
        "grid": {"d": psi.grid.d, "half_width": psi.grid.half_width, "n": psi.grid.n},
        "dt": dt,
        "potential_hash": potential.digest(),
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
