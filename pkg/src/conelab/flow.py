"""Classical Hamiltonian flow under conical potentials.

Exterior trajectories follow x' = xi, xi' = -grad V away from the singular
set.  Crossings of Lambda with non-negligible normal momentum are located by
bisection and continued uniquely (the flow extends continuously through
Lambda away from the kink apex).  Tangential touches of Lambda with vanishing
normal momentum are the only branching locus; they are detected as local
minima of ||g(x)|| with ||grad_g xi|| -> 0 and reported as events rather than
continued.

The insider flow confines motion to Lambda under V_S restricted to it;
outgoing/incoming branches are seeded from a singular point along a normal
direction rho0 with the quadratic-in-time profile x(t) = sigma + t^2/2 rho0,
xi(t) = t rho0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    LeftManifold,
    SeedInsideSingularTol,
    SingularEvaluation,
    StepSizeUnderflow,
    WindowContainsEvent,
)
from .potential import SINGULAR_TOL, ConicalPotential

__all__ = [
    "PhasePoint",
    "SingularArrival",
    "Trajectory",
    "IntegratorOptions",
    "RhoDiagnostic",
    "integrate_exterior",
    "integrate_insider",
    "launch_branch",
    "rho_diagnostic",
]


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xi))):
            raise ValueError("phase point has non-finite components")


@dataclass
class SingularArrival:
    """Tangential contact of a trajectory with the singular phase-space set."""

    t0: float
    sigma: np.ndarray
    side: str  # 'incoming' | 'outgoing'
    rho_limit: np.ndarray | None = None
    no_finite_limit: bool = False
    residual_g: float = 0.0
    residual_xi: float = 0.0

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "sigma": [float(v) for v in np.atleast_1d(self.sigma)],
            "side": self.side,
            "rho_limit": None
            if self.rho_limit is None
            else [float(v) for v in np.atleast_1d(self.rho_limit)],
            "no_finite_limit": self.no_finite_limit,
            "residual": max(self.residual_g, self.residual_xi),
        }


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # (n, d)
    xi: np.ndarray  # (n, d)
    events: list[SingularArrival] = field(default_factory=list)
    segments: list[tuple[float, float, str]] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def start(self) -> PhasePoint:
        return PhasePoint(self.x[0], self.xi[0], float(self.t[0]))

    def end(self) -> PhasePoint:
        return PhasePoint(self.x[-1], self.xi[-1], float(self.t[-1]))

    def state_at(self, t_target: float) -> PhasePoint:
        """Local cubic interpolation between dense samples.

        Packet assembly divides positions by eps inside a phase, so the
        interpolation error must sit well below the sample spacing squared;
        four-point Lagrange gives O(h^4).
        """
        ts = self.t
        if not (min(ts[0], ts[-1]) <= t_target <= max(ts[0], ts[-1])):
            raise ValueError("time outside trajectory span")
        order = np.argsort(ts)
        tt = ts[order]
        j = int(np.clip(np.searchsorted(tt, t_target) - 1, 0, len(tt) - 2))
        lo = max(0, min(j - 1, len(tt) - 4))
        idx = order[lo : lo + 4]
        nodes = tt[lo : lo + 4]
        # collapse duplicated sample times (event padding) to keep the
        # Lagrange weights finite
        keep = np.concatenate([[True], np.diff(nodes) > 1e-15])
        idx, nodes = idx[keep], nodes[keep]
        x_out = np.zeros(self.x.shape[1])
        xi_out = np.zeros(self.x.shape[1])
        for k in range(len(nodes)):
            w = 1.0
            for i in range(len(nodes)):
                if i != k:
                    w *= (t_target - nodes[i]) / (nodes[k] - nodes[i])
            x_out += w * self.x[idx[k]]
            xi_out += w * self.xi[idx[k]]
        return PhasePoint(x_out, xi_out, t_target)

    def segment_tag(self, t_value: float) -> str:
        for t0, t1, tag in self.segments:
            if min(t0, t1) - 1e-12 <= t_value <= max(t0, t1) + 1e-12:
                return tag
        return "exterior"

    def energy(self, potential: ConicalPotential) -> np.ndarray:
        return 0.5 * np.sum(self.xi**2, axis=1) + potential.eval_V(self.x)

    def to_csv(self, path) -> None:
        d = self.dim
        header = (
            "t,"
            + ",".join(f"x{i+1}" for i in range(d))
            + ","
            + ",".join(f"xi{i+1}" for i in range(d))
            + ",segment_tag"
        )
        lines = [header]
        for k in range(len(self.t)):
            vals = [f"{self.t[k]:.17g}"]
            vals += [f"{v:.17g}" for v in self.x[k]]
            vals += [f"{v:.17g}" for v in self.xi[k]]
            vals.append(self.segment_tag(float(self.t[k])))
            lines.append(",".join(vals))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def events_to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump([e.to_dict() for e in self.events], fh, indent=2)


@dataclass(frozen=True)
class IntegratorOptions:
    h0: float = 1e-3
    h_min: float = 1e-12
    refine_factor: float = 10.0
    arrival_g_tol: float = 1e-9
    event_xi_tol: float = 1e-6
    probe_g: float = 1e-4
    probe_xi: float = 5e-2
    wall_g: float = 1e-7
    insider_tol: float = 1e-8
    max_steps: int = 500_000


def _rk4(potential: ConicalPotential, x, xi, h):
    """One classical RK4 step of x' = xi, xi' = -grad V."""
    k1x = xi
    k1v = -potential.grad_V(x)
    k2x = xi + 0.5 * h * k1v
    k2v = -potential.grad_V(x + 0.5 * h * k1x)
    k3x = xi + 0.5 * h * k2v
    k3v = -potential.grad_V(x + 0.5 * h * k2x)
    k4x = xi + h * k3v
    k4v = -potential.grad_V(x + h * k3x)
    x_new = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
    xi_new = xi + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x_new, xi_new


_JITTER_SCALES = (1.0, 0.9871, 0.953, 0.5, 0.25, 0.1, 0.04, 0.01)


def _rk4_jittered(potential, x, xi, h):
    """RK4 step that rescales the step when a stage lands on Lambda."""
    for scale in _JITTER_SCALES:
        try:
            return _rk4(potential, x, xi, h * scale), h * scale
        except SingularEvaluation:
            continue
    raise StepSizeUnderflow("could not step past the singular set")


def _vertex_fit(points):
    """Vertex (t0, minimum) of the parabola through three (t, value) pairs."""
    (t1, g1), (t2, g2), (t3, g3) = points
    coeffs = np.polyfit([t1, t2, t3], [g1, g2, g3], 2)
    a, b, c = coeffs
    if a <= 0:
        return None
    t0 = -b / (2 * a)
    return float(t0), float(max(c - b * b / (4 * a), 0.0))


def _normal_momentum(potential: ConicalPotential, x, xi) -> float:
    return float(np.linalg.norm(potential.g.jacobian(x) @ xi))


def _project_to_lambda(potential: ConicalPotential, x, iters: int = 4) -> np.ndarray:
    """Gauss-Newton projection of x onto the zero set of g."""
    y = np.array(x, dtype=float)
    for _ in range(iters):
        gval = potential.g.value(y)
        if np.linalg.norm(gval) <= SINGULAR_TOL * 1e-2:
            break
        jac = potential.g.jacobian(y)
        y = y - jac.T @ np.linalg.solve(jac @ jac.T, gval)
    return y


def _pinv_j(jac: np.ndarray) -> np.ndarray:
    return jac.T @ np.linalg.inv(jac @ jac.T)


class _Recorder:
    def __init__(self, start: PhasePoint):
        self.t = [start.t]
        self.x = [start.x.copy()]
        self.xi = [start.xi.copy()]

    def push(self, t, x, xi):
        self.t.append(float(t))
        self.x.append(np.array(x))
        self.xi.append(np.array(xi))

    def build(self, events, tag) -> Trajectory:
        t = np.array(self.t)
        return Trajectory(
            t=t,
            x=np.vstack(self.x),
            xi=np.vstack(self.xi),
            events=events,
            segments=[(float(t[0]), float(t[-1]), tag)],
        )


def _refine_minimum(potential, t_a, x_a, xi_a, width, opts):
    """Re-integrate a bracket around a ||g|| minimum with shrinking steps.

    Returns (t0, x_min, xi_min, min_val, xi_res) when the minimum certifies
    a tangential touch, or None when it stabilises above tolerance.
    """
    h = width / 8.0
    prev_min = np.inf
    for _ in range(48):
        ts, xs, xis, gs = [t_a], [x_a], [xi_a], [float(potential.g.norm(x_a))]
        x, xi, t = x_a, xi_a, t_a
        n = max(4, int(round(abs(width) / abs(h))))
        hh = width / n
        ok = True
        for _ in range(n):
            try:
                (x, xi), used = _rk4_jittered(potential, x, xi, hh)
            except StepSizeUnderflow:
                ok = False
                break
            t += used
            ts.append(t)
            xs.append(x)
            xis.append(xi)
            gs.append(float(potential.g.norm(x)))
        if not ok:
            break
        k = int(np.argmin(gs))
        min_val = gs[k]
        if min_val <= opts.arrival_g_tol:
            # vertex of the quadratic fit of ||g|| around the touch
            if 0 < k < len(gs) - 1:
                denom = gs[k - 1] - 2 * gs[k] + gs[k + 1]
                shift = 0.5 * (gs[k - 1] - gs[k + 1]) / denom if denom != 0 else 0.0
                t0 = ts[k] + shift * (ts[k + 1] - ts[k])
            else:
                t0 = ts[k]
            xi_res = _normal_momentum(potential, xs[k], xis[k])
            return float(t0), xs[k], xis[k], min_val, xi_res
        if min_val > 0.5 * prev_min and abs(h) < abs(width) / 64.0:
            return None  # stabilised above tolerance: a near miss, not a touch
        prev_min = min_val
        if abs(h) / 2.0 < opts.h_min:
            raise StepSizeUnderflow("arrival refinement exhausted the step floor")
        h /= 2.0
    return None


def integrate_exterior(
    potential: ConicalPotential,
    start: PhasePoint,
    t_end: float,
    opts: IntegratorOptions = IntegratorOptions(),
) -> Trajectory:
    """Integrate the exterior Hamiltonian flow until t_end or a singular
    arrival.  Supports both time directions."""
    direction = 1.0 if t_end >= start.t else -1.0
    rec = _Recorder(start)
    events: list[SingularArrival] = []
    t = start.t
    x = start.x.copy()
    xi = start.xi.copy()
    smooth = potential.smooth
    h_floor = opts.h0 / 1024.0
    g_hist: list[tuple[float, float, float]] = []  # (t, ||g||, ||J xi||)
    if not smooth:
        g_hist.append((t, float(potential.g.norm(x)), _normal_momentum(potential, x, xi)))

    steps = 0
    while direction * (t_end - t) > 1e-14:
        steps += 1
        if steps > opts.max_steps:
            raise StepSizeUnderflow("step budget exhausted")
        h = opts.h0
        if not smooth:
            gn = float(potential.g.norm(x))
            speed = float(np.linalg.norm(xi))
            while gn < opts.refine_factor * h * speed and h > h_floor:
                h /= 2.0
        h = min(h, abs(t_end - t))
        h *= direction

        (x_new, xi_new), h_used = _rk4_jittered(potential, x, xi, h)
        t_new = t + h_used

        if not smooth:
            g_a = potential.g.value(x)
            g_b = potential.g.value(x_new)
            if np.any(np.sign(g_a) * np.sign(g_b) < 0):
                # locate the kink passage by bisection on single steps
                lo, hi = 0.0, h_used
                for _ in range(64):
                    mid = 0.5 * (lo + hi)
                    (xm, _), _ = _rk4_jittered(potential, x, xi, mid)
                    if np.any(np.sign(g_a) * np.sign(potential.g.value(xm)) < 0):
                        hi = mid
                    else:
                        lo = mid
                    if abs(hi - lo) < 1e-12:
                        break
                (x_c, xi_c), _ = _rk4_jittered(potential, x, xi, lo) if lo != 0 else ((x, xi), 0)
                xin = _normal_momentum(potential, x_c, xi_c)
                if xin <= opts.event_xi_tol:
                    sigma = _project_to_lambda(potential, x_c)
                    events.append(
                        SingularArrival(
                            t0=t + 0.5 * (lo + hi),
                            sigma=sigma,
                            side="incoming" if direction > 0 else "outgoing",
                            residual_g=float(potential.g.norm(x_c)),
                            residual_xi=xin,
                        )
                    )
                    rec.push(t + lo, x_c, xi_c)
                    break
                # unique continuous extension: advect across the kink
                delta = max(hi - lo, 12.0 * SINGULAR_TOL / max(xin, 1e-3)) * direction
                rec.push(t + lo, x_c, xi_c)
                x = x_c + delta * xi_c
                xi = xi_c
                t = t + lo + delta
                rec.push(t, x, xi)
                g_hist.append((t, float(potential.g.norm(x)), _normal_momentum(potential, x, xi)))
                continue

        t, x, xi = t_new, x_new, xi_new
        rec.push(t, x, xi)

        if not smooth:
            gn = float(potential.g.norm(x))
            xin = _normal_momentum(potential, x, xi)
            g_hist.append((t, gn, xin))
            # tangential-contact extrapolation: certify the touch from the
            # quadratic profile of ||g|| before the force becomes
            # unevaluable, using the last three samples
            if (
                gn <= opts.wall_g
                and xin <= opts.probe_xi
                and len(g_hist) >= 3
                and 2.0 * gn <= 1e-2 * max(xin, 1e-300)
            ):
                fit = _vertex_fit([(tv, gv) for tv, gv, _ in g_hist[-3:]])
                if fit is not None and fit[1] <= opts.arrival_g_tol:
                    t0, g_res = fit
                    if abs(t0 - t) <= max(40.0 * gn / max(xin, 1e-300), 5 * abs(h_used)):
                        ts_fit = [tv for tv, _, _ in g_hist[-3:]]
                        xs_fit = [xv for _, _, xv in g_hist[-3:]]
                        xi_res = abs(float(np.polyval(np.polyfit(ts_fit, xs_fit, 1), t0)))
                        force = -potential.grad_V(x)
                        xi0 = xi + (t0 - t) * force
                        sigma = _project_to_lambda(potential, x + (t0 - t) * xi)
                        events.append(
                            SingularArrival(
                                t0=t0,
                                sigma=sigma,
                                side="incoming" if direction > 0 else "outgoing",
                                residual_g=g_res,
                                residual_xi=xi_res,
                            )
                        )
                        rec.push(t0, sigma, xi0)
                        break
            if len(g_hist) >= 3:
                (ta, ga, _), (tb, gb, xb), (_, gc, _) = g_hist[-3], g_hist[-2], g_hist[-1]
                if gb <= ga and gb <= gc and gb <= opts.probe_g and xb <= opts.probe_xi:
                    hit = _refine_minimum(
                        potential,
                        ta,
                        rec.x[-3],
                        rec.xi[-3],
                        g_hist[-1][0] - ta,
                        opts,
                    )
                    if hit is not None:
                        t0, x_min, xi_min, g_res, xi_res = hit
                        sigma = _project_to_lambda(potential, x_min)
                        events.append(
                            SingularArrival(
                                t0=t0,
                                sigma=sigma,
                                side="incoming" if direction > 0 else "outgoing",
                                residual_g=g_res,
                                residual_xi=xi_res,
                            )
                        )
                        # truncate the recording at the touch
                        while rec.t and direction * (rec.t[-1] - t0) > 0:
                            rec.t.pop(), rec.x.pop(), rec.xi.pop()
                        rec.push(t0, x_min, xi_min)
                        break

    traj = rec.build(events, "exterior")
    for event in traj.events:
        _attach_rho_limit(potential, traj, event, opts)
    return traj


def _attach_rho_limit(potential, traj, event, opts):
    try:
        diag = rho_diagnostic(traj, event, potential=potential)
    except (ValueError, WindowContainsEvent, StepSizeUnderflow):
        event.rho_limit = None
        event.no_finite_limit = True
        return
    event.rho_limit = diag.limit
    event.no_finite_limit = diag.asymptotic


def integrate_insider(
    potential: ConicalPotential,
    sigma0,
    zeta0,
    t_end: float,
    opts: IntegratorOptions = IntegratorOptions(),
) -> Trajectory:
    """Flow on the singular manifold generated by V_S restricted to it.

    Linear constraint maps are integrated in an orthonormal chart of Lambda
    (constraint exact); curved ones by projected RK4 with per-step return to
    the manifold.
    """
    sigma0 = np.atleast_1d(np.asarray(sigma0, dtype=float))
    zeta0 = np.atleast_1d(np.asarray(zeta0, dtype=float))
    jac = potential.g.jacobian(sigma0)
    proj = np.eye(potential.d) - _pinv_j(jac) @ jac
    if np.linalg.norm(jac @ zeta0) > opts.insider_tol:
        raise LeftManifold("initial covector not tangent to Lambda")
    if np.linalg.norm(potential.g.value(sigma0)) > SINGULAR_TOL:
        raise LeftManifold("initial point not on Lambda")

    start = PhasePoint(sigma0, proj @ zeta0, 0.0)
    rec = _Recorder(start)
    n_steps = max(1, int(np.ceil(abs(t_end) / opts.h0)))
    h = t_end / n_steps

    grad_vs = potential.v_s.gradient

    if potential.g.is_linear():
        # chart coordinates: x = sigma0 + Q s with Q an orthonormal basis of
        # ker grad_g (constant for linear g)
        _, svals, vt = np.linalg.svd(jac)
        q = vt[potential.p :].T  # d x (d-p)
        s = np.zeros(q.shape[1])
        p_mom = q.T @ start.xi
        t = 0.0
        for _ in range(n_steps):
            def rhs(sv, pv):
                return pv, -q.T @ grad_vs(sigma0 + q @ sv)

            k1s, k1p = rhs(s, p_mom)
            k2s, k2p = rhs(s + 0.5 * h * k1s, p_mom + 0.5 * h * k1p)
            k3s, k3p = rhs(s + 0.5 * h * k2s, p_mom + 0.5 * h * k2p)
            k4s, k4p = rhs(s + h * k3s, p_mom + h * k3p)
            s = s + (h / 6.0) * (k1s + 2 * k2s + 2 * k3s + k4s)
            p_mom = p_mom + (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
            t += h
            rec.push(t, sigma0 + q @ s, q @ p_mom)
        return rec.build([], "insider")

    x = sigma0.copy()
    xi = start.xi.copy()
    t = 0.0
    for _ in range(n_steps):
        def rhs(xv, xiv):
            jj = potential.g.jacobian(xv)
            pp = np.eye(potential.d) - _pinv_j(jj) @ jj
            return pp @ xiv, -pp @ grad_vs(xv)

        k1x, k1v = rhs(x, xi)
        k2x, k2v = rhs(x + 0.5 * h * k1x, xi + 0.5 * h * k1v)
        k3x, k3v = rhs(x + 0.5 * h * k2x, xi + 0.5 * h * k2v)
        k4x, k4v = rhs(x + h * k3x, xi + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        xi = xi + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        x = _project_to_lambda(potential, x)
        jj = potential.g.jacobian(x)
        xi = xi - _pinv_j(jj) @ (jj @ xi)
        t += h
        drift = float(np.linalg.norm(potential.g.value(x)))
        if drift > opts.insider_tol:
            raise LeftManifold(f"constraint drift {drift:.3e} after projection")
        rec.push(t, x, xi)
    return rec.build([], "insider")


def launch_branch(
    potential: ConicalPotential,
    sigma,
    rho0,
    direction: str,
    seed_time: float,
    t_end: float,
    opts: IntegratorOptions = IntegratorOptions(),
) -> Trajectory:
    """Seed an outgoing (forward) or incoming (backward) branch at sigma
    along the normal direction rho0 and integrate it exterior.

    The seed rides the quadratic departure profile x(tau) = sigma +
    tau^2/2 rho0, xi(tau) = tau rho0; the produced trajectory carries the
    seeding contact as an event at t = 0.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    rho0 = np.atleast_1d(np.asarray(rho0, dtype=float))
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    tau = abs(float(seed_time))
    sign = 1.0 if direction == "forward" else -1.0
    x_seed = sigma + 0.5 * tau * tau * rho0
    xi_seed = sign * tau * rho0
    if potential.g.norm(x_seed) <= 10.0 * SINGULAR_TOL:
        raise SeedInsideSingularTol(
            f"seed time {seed_time} places the branch inside singular tolerance"
        )
    start = PhasePoint(x_seed, xi_seed, sign * tau)
    traj = integrate_exterior(potential, start, sign * abs(t_end), opts)
    contact = SingularArrival(
        t0=0.0,
        sigma=sigma,
        side="outgoing" if direction == "forward" else "incoming",
        rho_limit=rho0,
    )
    traj.events.insert(0, contact)
    return traj


@dataclass
class RhoDiagnostic:
    times: np.ndarray
    rhos: np.ndarray  # (n, d)
    limit: np.ndarray | None
    asymptotic: bool


def rho_diagnostic(
    traj: Trajectory,
    event: SingularArrival,
    window: tuple[float, float] | None = None,
    potential: ConicalPotential | None = None,
    n_samples: int = 7,
) -> RhoDiagnostic:
    """Sample rho(t) = 2/(t-t0)^2 grad_g(sigma)^+ g(x(t)) on one side of the
    contact and extrapolate its lateral limit.

    The extrapolation removes the first two Taylor orders from three
    geometrically spaced samples; a collapsing norm across the sample
    sequence is flagged as asymptotic (no finite limit claimed).
    """
    if potential is None:
        raise ValueError("rho_diagnostic needs the potential for resampling")
    t0 = event.t0
    span_lo, span_hi = float(min(traj.t)), float(max(traj.t))
    if window is None:
        # pick the side of t0 covered by the trajectory
        side = 1.0 if span_hi - t0 > t0 - span_lo else -1.0
        tau_far = min(0.064, 0.9 * max(span_hi - t0, t0 - span_lo))
        window = (
            (t0 + 1e-3 * tau_far * 0, t0 + tau_far)
            if side > 0
            else (t0 - tau_far, t0)
        )
    lo, hi = float(min(window)), float(max(window))
    if lo < t0 < hi:
        raise WindowContainsEvent(f"t0 = {t0} lies inside the window {window}")
    side = 1.0 if lo >= t0 else -1.0
    tau_far = max(abs(lo - t0), abs(hi - t0))
    tau_near = max(min(abs(lo - t0), abs(hi - t0)), 1e-4)
    if tau_far <= 0:
        raise ValueError("empty diagnostic window")

    taus = [tau_far * 0.5**j for j in range(n_samples)]
    taus = [tau for tau in taus if tau >= tau_near * 0.999] or [tau_far]

    jac = potential.g.jacobian(event.sigma)
    pinv = _pinv_j(jac)

    # resample the trajectory by re-integration from the nearest stored state
    targets = [t0 + side * tau for tau in taus]
    targets.sort(key=lambda tv: -abs(tv - t0))
    anchor_idx = int(np.argmin(np.abs(traj.t - targets[0])))
    # anchor strictly outside the window, on the same side
    cand = np.where(side * (traj.t - t0) >= taus[0] * 0.999)[0]
    if len(cand):
        anchor_idx = cand[np.argmin(np.abs(traj.t[cand] - targets[0]))]
    t_cur = float(traj.t[anchor_idx])
    x_cur = traj.x[anchor_idx].copy()
    xi_cur = traj.xi[anchor_idx].copy()

    out_t, out_rho = [], []
    for t_target in targets:
        dt = t_target - t_cur
        n = max(1, int(np.ceil(abs(dt) / 1e-3)))
        h = dt / n
        for _ in range(n):
            (x_cur, xi_cur), used = _rk4_jittered(potential, x_cur, xi_cur, h)
            t_cur += used
        tau = t_cur - t0
        rho = (2.0 / (tau * tau)) * (pinv @ potential.g.value(x_cur))
        out_t.append(t_cur)
        out_rho.append(rho)

    out_t = np.array(out_t)
    out_rho = np.vstack(out_rho)
    norms = np.linalg.norm(out_rho, axis=1)
    asymptotic = bool(len(norms) >= 3 and norms[-1] < 0.25 * norms[0])

    limit = None
    if len(out_rho) >= 3:
        r0, r1, r2 = out_rho[-3], out_rho[-2], out_rho[-1]
        s0 = 2 * r1 - r0
        s1 = 2 * r2 - r1
        limit = (4 * s1 - s0) / 3.0
    elif len(out_rho) > 0:
        limit = out_rho[-1]
    return RhoDiagnostic(out_t, out_rho, None if asymptotic else limit, asymptotic)
