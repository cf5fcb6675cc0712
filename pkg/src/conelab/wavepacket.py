"""Wave-packet approximate solutions riding classical trajectories.

A packet is eps^{-d/4} v_t((x - x(t))/sqrt(eps)) e^{i[xi(t).(x-x(t)) + S(t)]/eps}
with S the classical action and the profile v solving the eps-independent
quadratic-coefficient equation  i dv/dt = -1/2 Lap v + 1/2 V''(x(t)) y.y v.

The crossing scheme propagates the profile through a kink passage of
V = -|x| along the trajectory x(t) = eta t +- t^2/2 (eta <= 0): inside the
switching window |t| <= tau_eps = eps^alpha the profile is an exact phase
e^{-i I(t, y)} a(y), where I integrates the Taylor-remainder potential in
closed form and saturates once |t| passes

    sigma(y) = eta_eps + sqrt(eta_eps^2 + 2 sqrt(eps) |y|);

outside the window the profile propagates freely from its switch values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .errors import (
    HessianUndefined,
    ProfileClipped,
    SchemeInfeasible,
    SingularEvaluation,
)
from .flow import Trajectory
from .potential import ConicalPotential
from .quantum import BOUNDARY_MASS_TOL, GridSpec, WaveFunction

__all__ = [
    "PacketProfile",
    "ProfileTrace",
    "ActionRecord",
    "CrossingScheme",
    "default_profile_grid",
    "action",
    "propagate_profile",
    "assemble_packet",
    "error_functional",
    "crossing_profile",
    "cut_profiles",
]


def default_profile_grid(half_width: float = 32.0, n: int = 4096) -> np.ndarray:
    """Profile grid in packet coordinates; covers |eta_eps| >= 0.3 schemes."""
    return -half_width + (2.0 * half_width / n) * np.arange(n)


@dataclass
class PacketProfile:
    y: np.ndarray
    values: np.ndarray
    t: float = 0.0

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dy))

    @classmethod
    def from_callable(cls, a, y: np.ndarray, t: float = 0.0) -> "PacketProfile":
        return cls(y=y, values=np.asarray(a(y), dtype=complex), t=t)


@dataclass
class ProfileTrace:
    y: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (len(times), len(y))

    def at(self, t: float) -> PacketProfile:
        idx = int(np.argmin(np.abs(self.times - t)))
        return PacketProfile(y=self.y, values=self.values[idx], t=float(self.times[idx]))

    def norms(self) -> np.ndarray:
        dy = float(self.y[1] - self.y[0])
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=1) * dy)


@dataclass
class ActionRecord:
    times: np.ndarray
    s: np.ndarray

    def s_at(self, t) -> np.ndarray:
        # cubic off-node evaluation: the action enters packets as S/eps,
        # so piecewise-linear interpolation would dominate the phase error
        if not hasattr(self, "_spline"):
            object.__setattr__(self, "_spline", CubicSpline(self.times, self.s))
        return self._spline(np.clip(t, self.times[0], self.times[-1]))


def action(traj: Trajectory, potential: ConicalPotential) -> ActionRecord:
    """Classical action S(t) = int (1/2 xi^2 - V(x)) ds along the samples.

    Cumulative Simpson quadrature: the action enters packet assembly as the
    phase S/eps, so a second-order rule would leave an O(h^2/eps) phase
    error well above the solver floor.
    """
    if any(tag == "insider" for _, _, tag in traj.segments):
        raise ValueError("action is defined along exterior trajectories only")
    order = np.argsort(traj.t)
    t_sorted = traj.t[order]
    keep = np.concatenate([[True], np.diff(t_sorted) > 1e-15])
    t_sorted = t_sorted[keep]
    integrand = 0.5 * np.sum(traj.xi[order][keep] ** 2, axis=1) - potential.eval_V(
        traj.x[order][keep]
    )
    s_sorted = cumulative_simpson(integrand, x=t_sorted, initial=0.0)
    # anchor S = 0 at the trajectory's own start time
    s_sorted = s_sorted - np.interp(traj.t[0], t_sorted, s_sorted)
    return ActionRecord(times=t_sorted, s=s_sorted)


def _x_of_t(traj: Trajectory, times: np.ndarray) -> np.ndarray:
    order = np.argsort(traj.t)
    return np.column_stack(
        [np.interp(times, traj.t[order], traj.x[order, i]) for i in range(traj.dim)]
    )


def propagate_profile(
    v0: PacketProfile,
    traj: Trajectory,
    potential: ConicalPotential,
    dt: float,
    t_end: float | None = None,
) -> ProfileTrace:
    """Strang splitting for the profile equation with the time-dependent
    quadratic multiplier 1/2 V''(x(t)) y^2 (one-dimensional packets)."""
    if potential.d != 1:
        raise HessianUndefined("profile propagation implemented for d = 1")
    t_stop = float(traj.t[-1]) if t_end is None else float(t_end)
    span = t_stop - v0.t
    n_steps = max(1, int(np.ceil(abs(span) / dt - 1e-9)))
    h = span / n_steps
    times = v0.t + h * np.arange(n_steps + 1)
    xs = _x_of_t(traj, times)
    try:
        hess = potential.hessian_V(xs)[..., 0, 0]
    except SingularEvaluation as exc:
        raise HessianUndefined("trajectory touches the singular set") from exc

    y = v0.y
    k = 2.0 * np.pi * np.fft.fftfreq(len(y), d=v0.dy)
    kin = np.exp(-0.5j * k**2 * h)
    out = np.empty((n_steps + 1, len(y)), dtype=complex)
    out[0] = v0.values
    v = v0.values.copy()
    for j in range(n_steps):
        v = np.exp(-0.25j * hess[j] * y**2 * h) * v
        v = np.fft.ifft(kin * np.fft.fft(v))
        v = np.exp(-0.25j * hess[j + 1] * y**2 * h) * v
        out[j + 1] = v
    return ProfileTrace(y=y, times=times, values=out)


def assemble_packet(
    v: PacketProfile,
    traj: Trajectory,
    s_record: ActionRecord,
    eps: float,
    grid: GridSpec,
) -> WaveFunction:
    """Place the profile on the quantum grid around (x(t), xi(t)) with the
    accumulated action phase; grid-normalized."""
    if grid.d != 1:
        raise HessianUndefined("packet assembly implemented for d = 1")
    state = traj.state_at(v.t)
    x_c = float(state.x[0])
    xi_c = float(state.xi[0])
    s_val = float(s_record.s_at(v.t))
    x = grid.axis()
    y_target = (x - x_c) / np.sqrt(eps)
    spline_re = CubicSpline(v.y, v.values.real, extrapolate=False)
    spline_im = CubicSpline(v.y, v.values.imag, extrapolate=False)
    amp = np.nan_to_num(spline_re(y_target)) + 1j * np.nan_to_num(spline_im(y_target))
    phase = np.exp(1j * (xi_c * (x - x_c) + s_val) / eps)
    values = eps**-0.25 * amp * phase
    psi = WaveFunction(grid=grid, eps=eps, values=values, t=v.t)
    total = np.sum(psi.density()) * grid.dvol
    if total <= 0:
        raise ProfileClipped("assembled packet vanishes on the grid")
    if psi.boundary_mass() / total > BOUNDARY_MASS_TOL:
        raise ProfileClipped("assembled packet leaks into the guard band")
    return psi.normalized()


def error_functional(
    trace: ProfileTrace,
    traj: Trajectory,
    potential: ConicalPotential,
    eps: float,
) -> float:
    """Time integral of || R_t v_t / eps ||_L2 with the Taylor remainder
    R_t(y) = V(x+se y) - V(x) - se grad V y - eps/2 V'' y^2, se = sqrt(eps).

    Vanishes to roundoff for quadratic potentials; bounds the distance
    between the packet and the exact propagated state.
    """
    if potential.d != 1:
        raise HessianUndefined("error functional implemented for d = 1")
    xs = _x_of_t(traj, trace.times)[:, 0]
    se = np.sqrt(eps)
    y = trace.y
    dy = float(y[1] - y[0])
    norms = np.empty(len(trace.times))
    for j, (t_x, v) in enumerate(zip(xs, trace.values)):
        pts = (t_x + se * y)[:, None]
        v_shift = potential.eval_V(pts)
        try:
            v0 = float(potential.eval_V(np.array([t_x])))
            g0 = float(potential.grad_V(np.array([t_x]))[0])
            h0 = float(potential.hessian_V(np.array([t_x]))[0, 0])
        except SingularEvaluation as exc:
            raise HessianUndefined(
                "trajectory sample on the singular set"
            ) from exc
        remainder = v_shift - v0 - se * g0 * y - 0.5 * eps * h0 * y**2
        norms[j] = np.sqrt(np.sum(np.abs(remainder * v) ** 2) * dy) / eps
    return float(np.trapezoid(norms, trace.times))


@dataclass
class CrossingScheme:
    """Exponents of the kink-crossing construction.

    eta_eps = eta eps^beta is the launch momentum, tau_eps = eps^alpha the
    switching time, and k the integer making the far-window remainder
    summable.  Constraints: 0 <= beta < 1/10, 2 alpha - beta - 1/2 > 0 and
    k/2 - (k+1) alpha - (2k+3) beta > 0.
    """

    eta: float
    beta: float = 0.0
    alpha: float = 0.3
    k: int | None = None

    def __post_init__(self):
        if self.eta > 0:
            raise ValueError("launch momentum must satisfy eta <= 0")
        if not 0.0 <= self.beta < 0.1:
            raise ValueError(f"beta = {self.beta} outside [0, 1/10)")
        if not 2 * self.alpha - self.beta - 0.5 > 0:
            raise ValueError(
                f"window constraint violated: 2*{self.alpha} - {self.beta} - 1/2 <= 0"
            )
        if self.k is None:
            self.k = self.choose_k(self.alpha, self.beta)
        elif self._k_margin(self.k) <= 0:
            raise ValueError(f"k = {self.k} violates the remainder constraint")

    def _k_margin(self, k: int) -> float:
        return k / 2.0 - (k + 1) * self.alpha - (2 * k + 3) * self.beta

    @staticmethod
    def choose_k(alpha: float, beta: float, k_max: int = 64) -> int:
        for k in range(1, k_max + 1):
            if k / 2.0 - (k + 1) * alpha - (2 * k + 3) * beta > 0:
                return k
        raise SchemeInfeasible(
            f"no k <= {k_max} satisfies the remainder constraint for "
            f"alpha={alpha}, beta={beta}"
        )

    def eta_eps(self, eps: float) -> float:
        return self.eta * eps**self.beta

    def tau_eps(self, eps: float) -> float:
        return eps**self.alpha


def crossing_phase(t, y, eta_eps: float, eps: float):
    """Closed-form accumulated remainder phase I(t, y) for V = -|x| along
    x(t) = eta t +- t^2/2.

    Nonzero only in the quadrants sign(y) = sign(t); the amplitude grows
    inside |t| < sigma(y) and saturates beyond it.  Verified against direct
    quadrature of the remainder.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    se = np.sqrt(eps)
    w = se * np.abs(y)
    q = np.sqrt(eta_eps**2 + 2.0 * w)
    sigma = eta_eps + q
    out = np.zeros(np.broadcast(t, y).shape)

    neg = (t < 0) & (y < 0)
    if np.any(neg):
        tt = np.broadcast_to(t, out.shape)[neg]
        ww = np.broadcast_to(w, out.shape)[neg]
        ss = np.broadcast_to(sigma, out.shape)[neg]
        inside = tt > -ss
        val = np.where(
            inside,
            (2.0 / eps) * (0.5 * eta_eps * tt**2 + tt**3 / 6.0 - ww * tt),
            ss * (eta_eps * ss + 4.0 * ww) / (3.0 * eps),
        )
        out[neg] = val

    pos = (t > 0) & (y > 0)
    if np.any(pos):
        tt = np.broadcast_to(t, out.shape)[pos]
        ww = np.broadcast_to(w, out.shape)[pos]
        ss = np.broadcast_to(sigma, out.shape)[pos]
        inside = tt < ss
        val = np.where(
            inside,
            (-2.0 / eps) * (0.5 * eta_eps * tt**2 - tt**3 / 6.0 + ww * tt),
            -ss * (eta_eps * ss + 4.0 * ww) / (3.0 * eps),
        )
        out[pos] = val
    return out


def crossing_profile(
    a,
    scheme: CrossingScheme,
    eps: float,
    times,
    y: np.ndarray | None = None,
) -> ProfileTrace:
    """Profile trace of the crossing packet at the requested times.

    For |t| <= tau_eps the profile is the exact phase e^{-i I(t,y)} a(y);
    beyond the switch it propagates freely from the switch-time values.
    """
    if y is None:
        y = default_profile_grid()
    times = np.asarray(sorted(times), dtype=float)
    eta_e = scheme.eta_eps(eps)
    tau_e = scheme.tau_eps(eps)
    a_vals = np.asarray(a(y), dtype=complex)
    k = 2.0 * np.pi * np.fft.fftfreq(len(y), d=float(y[1] - y[0]))

    switch: dict[float, np.ndarray] = {}
    for s in (-tau_e, tau_e):
        switch[s] = np.exp(-1j * crossing_phase(s, y, eta_e, eps)) * a_vals

    out = np.empty((len(times), len(y)), dtype=complex)
    for j, t in enumerate(times):
        if abs(t) <= tau_e:
            out[j] = np.exp(-1j * crossing_phase(t, y, eta_e, eps)) * a_vals
        else:
            t_sw = tau_e if t > 0 else -tau_e
            dt_free = t - t_sw
            out[j] = np.fft.ifft(
                np.exp(-0.5j * k**2 * dt_free) * np.fft.fft(switch[t_sw])
            )
    return ProfileTrace(y=y, times=times, values=out)


def _smoothstep(u: np.ndarray) -> np.ndarray:
    s = np.clip(u, 0.0, 1.0)
    return 10 * s**3 - 15 * s**4 + 6 * s**5


def cut_profiles(delta: float):
    """Smooth partition of unity (chi_plus, chi_middle, chi_minus) with
    chi_plus supported on y >= delta, chi_minus on y <= -delta and the
    middle strip on |y| <= 2 delta."""

    def chi_plus(y):
        return _smoothstep((np.asarray(y, dtype=float) - delta) / delta)

    def chi_minus(y):
        return _smoothstep((-np.asarray(y, dtype=float) - delta) / delta)

    def chi_middle(y):
        return 1.0 - chi_plus(y) - chi_minus(y)

    return chi_plus, chi_middle, chi_minus
