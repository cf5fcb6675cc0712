"""Phase-space diagnostics: Wigner transform, observable pairing, peak and
mass tracking, three-zone mass split, and the empirical directional
measure.

The Wigner transform of a grid state is computed by a fast transform in the
correlation offset per (subsampled) position; its marginals reproduce the
position and momentum densities.  Zone masses use a quintic cut function
equal to 1 inside radius 1/2 and 0 outside radius 1, so the three weights
partition unity exactly when the inner scale sits below half the outer one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ScaleOrderViolation
from .quantum import WaveFunction

__all__ = [
    "WignerField",
    "ZoneMasses",
    "EmpiricalNu",
    "PeakInfo",
    "wigner_transform",
    "pair_observable",
    "peak_track",
    "zone_masses",
    "empirical_nu",
    "smooth_cut",
]


@dataclass
class WignerField:
    x: np.ndarray
    xi: np.ndarray
    values: np.ndarray  # (len(x), len(xi))
    eps: float
    dx_weight: float
    dxi: float

    def marginal_x(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dxi

    def marginal_xi(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dx_weight

    def total_mass(self) -> float:
        return float(self.values.sum() * self.dx_weight * self.dxi)

    def to_csv(
        self,
        path,
        stride_x: int = 1,
        stride_xi: int = 1,
        x_range: tuple[float, float] | None = None,
        xi_range: tuple[float, float] | None = None,
    ) -> None:
        rows = np.arange(0, len(self.x), stride_x)
        cols = np.arange(0, len(self.xi), stride_xi)
        if x_range is not None:
            rows = rows[(self.x[rows] >= x_range[0]) & (self.x[rows] <= x_range[1])]
        if xi_range is not None:
            cols = cols[(self.xi[cols] >= xi_range[0]) & (self.xi[cols] <= xi_range[1])]
        with open(path, "w") as fh:
            fh.write("x,xi,w\n")
            for i in rows:
                for j in cols:
                    fh.write(
                        f"{self.x[i]:.17g},{self.xi[j]:.17g},{self.values[i, j]:.17g}\n"
                    )


def wigner_transform(psi: WaveFunction, x_subsample: int = 16) -> WignerField:
    """W(x, xi) = (2 pi eps)^-1 int e^{i y xi/eps} Psi(x-y/2) conj Psi(x+y/2) dy
    evaluated on a position subsample; one dimension only."""
    if psi.grid.d != 1:
        raise DimensionMismatch("Wigner transform implemented for d = 1")
    grid = psi.grid
    n = grid.n
    vals = psi.values
    rows = np.arange(0, n, x_subsample)
    # correlation offsets y_m = 2 dx m with m in FFT (signed) order,
    # restricted to half the box: larger offsets alias the packet onto a
    # ghost half a period away on the periodic grid
    m = np.rint(np.fft.fftfreq(n) * n).astype(int)
    ii = rows[:, None]
    corr = vals[(ii - m[None, :]) % n] * np.conj(vals[(ii + m[None, :]) % n])
    corr[:, np.abs(m) > n // 4] = 0.0
    w_raw = np.fft.ifft(corr, axis=1) * n
    factor = 2.0 * grid.dx / (2.0 * np.pi * psi.eps)
    w = np.fft.fftshift(w_raw.real, axes=1) * factor
    xi = np.fft.fftshift(np.fft.fftfreq(n, d=2.0 * grid.dx)) * 2.0 * np.pi * psi.eps
    dxi = 2.0 * np.pi * psi.eps / (2.0 * grid.dx * n)
    return WignerField(
        x=grid.axis()[rows],
        xi=xi,
        values=w,
        eps=psi.eps,
        dx_weight=grid.dx * x_subsample,
        dxi=dxi,
    )


def pair_observable(psi: WaveFunction, symbol, x_subsample: int = 8) -> float:
    """<W Psi, a> for a real phase-space symbol a(x, xi) (callable)."""
    field = wigner_transform(psi, x_subsample)
    xx, pp = np.meshgrid(field.x, field.xi, indexing="ij")
    a_vals = symbol(xx, pp)
    return float((field.values * a_vals).sum() * field.dx_weight * field.dxi)


@dataclass
class PeakInfo:
    t: float
    peaks: list[tuple[float, float, float]]  # (x*, xi*, mass in window)
    multi: bool


def _parabolic_refine(values: np.ndarray, idx: int, coords: np.ndarray) -> float:
    if idx <= 0 or idx >= len(values) - 1:
        return float(coords[idx])
    a, b, c = values[idx - 1], values[idx], values[idx + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return float(coords[idx])
    shift = 0.5 * (a - c) / denom
    return float(coords[idx] + shift * (coords[1] - coords[0]))


def _window_mass(field: WignerField, x0: float, xi0: float, half: float) -> float:
    mx = np.abs(field.x - x0) <= half
    mp = np.abs(field.xi - xi0) <= half
    return float(field.values[np.ix_(mx, mp)].sum() * field.dx_weight * field.dxi)


def _marginal_score(psi: WaveFunction):
    """Factory scoring (x*, xi*) by the product of position-density and
    momentum-density mass in a window, both at full grid resolution.

    The score of a Wigner interference crest is near zero (no marginal mass
    sits at its midpoint coordinates), while genuine packets keep their
    marginal weight; unlike window sums of the subsampled Wigner field this
    is immune to fringe aliasing."""
    x = psi.grid.axis()
    rho_x = np.concatenate([[0.0], np.cumsum(psi.density() * psi.grid.dvol)])
    psi_hat = np.fft.fftshift(np.fft.fft(psi.values))
    xi = np.fft.fftshift(psi.grid.wavenumbers()) * psi.eps
    w_xi = np.abs(psi_hat) ** 2
    rho_xi = np.concatenate([[0.0], np.cumsum(w_xi / w_xi.sum())])

    def score(x_star: float, xi_star: float, half: float) -> float:
        ix0, ix1 = np.searchsorted(x, [x_star - half, x_star + half])
        ip0, ip1 = np.searchsorted(xi, [xi_star - half, xi_star + half])
        return float((rho_x[ix1] - rho_x[ix0]) * (rho_xi[ip1] - rho_xi[ip0]))

    return score


def peak_track(
    snapshots: list[WaveFunction],
    x_subsample: int = 16,
    score_floor: float = 0.01,
) -> list[PeakInfo]:
    """Per snapshot: dominant Wigner peaks with the mass in a 5 sqrt(eps)
    window.  A second local maximum above a third of the global one and
    separated by more than 10 sqrt(eps) flags a two-peak (rebound-type)
    record.  Candidates are ranked by the product of their marginal masses,
    which discards the oscillatory interference crest sitting midway
    between two packets."""
    out = []
    for psi in snapshots:
        field = wigner_transform(psi, x_subsample)
        score = _marginal_score(psi)
        w = field.values
        sep = 10.0 * np.sqrt(psi.eps)
        half = 5.0 * np.sqrt(psi.eps)
        # strict local maxima over the 4-neighbourhood
        interior = w[1:-1, 1:-1]
        mask = (
            (interior >= w[:-2, 1:-1])
            & (interior >= w[2:, 1:-1])
            & (interior >= w[1:-1, :-2])
            & (interior >= w[1:-1, 2:])
            & (interior >= w.max() / 3.0)
        )
        cand = np.argwhere(mask) + 1
        order = np.argsort(-w[cand[:, 0], cand[:, 1]])[:64]
        refined = []
        for k in order:
            i, j = cand[k]
            x_star = _parabolic_refine(w[:, j], i, field.x)
            xi_star = _parabolic_refine(w[i, :], j, field.xi)
            core = score(x_star, xi_star, 0.4 * half)
            if core >= score_floor:
                refined.append((core, x_star, xi_star))
        refined.sort(key=lambda p: -p[0])
        peaks = []
        for core, x_star, xi_star in refined:
            if all(np.hypot(x_star - a, xi_star - b) > sep for a, b, _ in peaks):
                peaks.append(
                    (x_star, xi_star, _window_mass(field, x_star, xi_star, half))
                )
            if len(peaks) == 2:
                break
        out.append(PeakInfo(t=psi.t, peaks=peaks, multi=len(peaks) > 1))
    return out


def smooth_cut(r: np.ndarray) -> np.ndarray:
    """Quintic cut: 1 for r <= 1/2, 0 for r >= 1, C^2 monotone between."""
    s = np.clip((np.asarray(r, dtype=float) - 0.5) / 0.5, 0.0, 1.0)
    return 1.0 - (10 * s**3 - 15 * s**4 + 6 * s**5)


@dataclass
class ZoneMasses:
    r_scale: float
    delta: float
    inner: float
    middle: float
    outer: float

    @property
    def total(self) -> float:
        return self.inner + self.middle + self.outer


def zone_masses(psi: WaveFunction, r_scale: float, delta: float) -> ZoneMasses:
    """Mass under the three-scale partition chi(x/(eps R)),
    (1-chi(x/(eps R))) chi(x/delta), 1-chi(x/delta).

    Requires eps R <= delta/2: the inner cut must vanish before the outer
    one starts decaying, which makes the three weights sum to one exactly.
    """
    if psi.grid.d != 1:
        raise DimensionMismatch("zone masses implemented for d = 1")
    inner_scale = psi.eps * r_scale
    if not inner_scale <= delta / 2.0:
        raise ScaleOrderViolation(
            f"inner scale eps*R = {inner_scale:.3e} must sit below delta/2 = {delta / 2:.3e}"
        )
    x = psi.grid.axis()
    rho = psi.density() * psi.grid.dvol
    chi_in = smooth_cut(np.abs(x) / inner_scale)
    chi_out = smooth_cut(np.abs(x) / delta)
    inner = float((rho * chi_in).sum())
    middle = float((rho * (1.0 - chi_in) * chi_out).sum())
    outer = float((rho * (1.0 - chi_out)).sum())
    return ZoneMasses(r_scale, delta, inner, middle, outer)


@dataclass
class EmpiricalNu:
    window: float
    plus: float
    minus: float

    @property
    def total(self) -> float:
        return self.plus + self.minus


def empirical_nu(psi: WaveFunction, window: float) -> EmpiricalNu:
    """Directional mass split nu_hat(+-) = mass in {0 < +-x < window}."""
    if psi.grid.d != 1:
        raise DimensionMismatch("empirical nu implemented for d = 1")
    x = psi.grid.axis()
    rho = psi.density() * psi.grid.dvol
    plus = float(rho[(x > 0) & (x < window)].sum())
    minus = float(rho[(x < 0) & (x > -window)].sum())
    return EmpiricalNu(window=window, plus=plus, minus=minus)
