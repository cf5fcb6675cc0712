"""Phase-space diagnostics: transform, marginals, peaks, zones."""

import numpy as np
import pytest

from conelab.errors import DimensionMismatch, ScaleOrderViolation
from conelab.potential import ConicalPotential
from conelab.quantum import GridSpec, init_concentrated_state, observables, propagate
from conelab.wigner import (
    empirical_nu,
    pair_observable,
    peak_track,
    smooth_cut,
    wigner_transform,
    zone_masses,
)

EPS = 1.0 / 64
GRID = GridSpec(1, 4.0, 2048)
HARMONIC = ConicalPotential.from_dict({"V_S": "x1*x1/2", "F": "0", "g": ["x1"], "d": 1})
CONE_DOWN = ConicalPotential.from_dict({"V_S": "0", "F": "-1", "g": ["x1"], "d": 1})
CONE_UP = ConicalPotential.from_dict({"V_S": "0", "F": "1", "g": ["x1"], "d": 1})


def gaussian(y):
    return np.exp(-(y**2) / 2)


def even_bump(y):
    u = np.asarray(y) / 1.5
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(-1 / (1 - u[m] ** 2))
    return out


def coherent(x0=0.3, xi0=-0.5):
    return init_concentrated_state(GRID, EPS, gaussian, [x0], [xi0])


def test_gaussian_wigner_closed_form():
    x0, xi0 = 0.3, -0.5
    field = wigner_transform(coherent(x0, xi0), x_subsample=4)
    xx, pp = np.meshgrid(field.x, field.xi, indexing="ij")
    exact = (np.pi * EPS) ** -1 * np.exp(-((xx - x0) ** 2 + (pp - xi0) ** 2) / EPS)
    assert np.max(np.abs(field.values - exact)) / exact.max() <= 1e-6


def test_marginals():
    psi = coherent()
    field = wigner_transform(psi, x_subsample=4)
    dens = psi.density()[::4]
    assert np.max(np.abs(field.marginal_x() - dens)) / dens.max() <= 1e-6
    # momentum marginal against the eps-scaled Fourier density on the
    # matching (coarser, central) momentum grid
    mom = np.fft.fftshift(np.abs(np.fft.fft(psi.values)) ** 2)
    mom = mom * GRID.dx**2 / (2 * np.pi * EPS)
    n = GRID.n
    sampled = field.marginal_xi()[::2]
    assert np.max(np.abs(sampled - mom[n // 4 : 3 * n // 4])) / mom.max() <= 1e-6
    assert field.total_mass() == pytest.approx(1.0, abs=1e-6)


def test_parity_symmetry_of_wigner():
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    field = wigner_transform(psi, x_subsample=8)
    w = field.values
    # x -> -x needs the row at -x; row 0 is x = -L (self-mirror)
    flipped = w[::-1, ::-1]
    inner = w[1:, 1:]
    assert np.max(np.abs(inner - flipped[:-1, :-1])) <= 1e-9 * w.max()


def test_pair_observable_normalization_and_moment():
    psi = coherent()
    ball = lambda x, xi: 1.0 * (np.hypot(x - 0.3, xi + 0.5) < 3.0)  # noqa: E731
    assert pair_observable(psi, ball) == pytest.approx(1.0, abs=1e-6)
    moment = lambda x, xi: x * (np.hypot(x - 0.3, xi + 0.5) < 3.0)  # noqa: E731
    assert pair_observable(psi, moment) == pytest.approx(
        observables(psi)[0][0], abs=1e-6
    )


def test_pair_observable_half_plane_weights():
    """Smoothed right-half-plane symbol measures the rebound weight."""
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    out = propagate(psi, CONE_DOWN, 1.0, EPS / 20)[-1]
    half = lambda x, xi: smooth_cut(np.clip(0.5 - 2.0 * x, 0.0, None))  # noqa: E731
    assert pair_observable(out, half) == pytest.approx(0.5, abs=0.02)


def test_peak_track_follows_oscillator():
    x0, xi0 = 0.3, -0.5
    psi = coherent(x0, xi0)
    times = np.linspace(0.3, 2.0, 4)
    snaps = propagate(psi, HARMONIC, 2.0, EPS / 20, times)
    for info in peak_track(snaps, x_subsample=4):
        xc = x0 * np.cos(info.t) + xi0 * np.sin(info.t)
        pc = -x0 * np.sin(info.t) + xi0 * np.cos(info.t)
        assert not info.multi
        x_pk, xi_pk, mass = info.peaks[0]
        assert abs(x_pk - xc) <= 5 * np.sqrt(EPS) + GRID.dx
        assert abs(xi_pk - pc) <= 5 * np.sqrt(EPS) + GRID.dx
        assert mass >= 0.95


def test_peak_track_two_peak_rebound():
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    out = propagate(psi, CONE_DOWN, 1.0, EPS / 20)[-1]
    info = peak_track([out], x_subsample=4)[0]
    assert info.multi
    xs = sorted(p[0] for p in info.peaks)
    assert xs[0] == pytest.approx(-0.5, abs=5 * np.sqrt(EPS))
    assert xs[1] == pytest.approx(0.5, abs=5 * np.sqrt(EPS))


def test_crossing_peak_position():
    eta = -0.5
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [eta])
    out = propagate(psi, CONE_DOWN, 0.5, EPS / 20)[-1]
    info = peak_track([out], x_subsample=4)[0]
    x_pk, xi_pk, _ = info.peaks[0]
    assert x_pk == pytest.approx(-0.375, abs=5 * np.sqrt(EPS) + GRID.dx)
    assert xi_pk == pytest.approx(-1.0, abs=5 * np.sqrt(EPS) + GRID.dx)


def test_wigner_requires_one_dimension():
    grid2 = GridSpec(2, 4.0, 64)
    pot2 = ConicalPotential.from_dict({"V_S": "0", "F": "0", "g": ["x1"], "d": 2})
    psi2 = init_concentrated_state(
        grid2, 0.25, lambda a, b: np.exp(-(a**2 + b**2) / 2), [0, 0], [0, 0]
    )
    with pytest.raises(DimensionMismatch):
        wigner_transform(psi2)


def test_zone_masses_partition_and_support():
    psi = coherent(2.5, 0.0)  # supported away from the origin
    zones = zone_masses(psi, r_scale=4.0, delta=1.0)
    assert zones.total == pytest.approx(1.0, abs=1e-9)
    assert zones.outer == pytest.approx(1.0, abs=1e-9)
    assert zones.inner == pytest.approx(0.0, abs=1e-12)


def test_zone_masses_inner_trend():
    """With R = eps^-1/4 the inner zone has width eps^(3/4): a state living
    at the operator scale eps fills it as eps decreases, while a packet of
    width sqrt(eps) drains out of it (no operator-scale mass survives)."""
    from conelab.quantum import WaveFunction

    grid = GridSpec(1, 4.0, 8192)
    inner_op, inner_packet = [], []
    for eps in (1.0 / 64, 1.0 / 256):
        x = grid.axis()
        vals = (np.pi * eps**2) ** -0.25 * np.exp(-(x**2) / (2 * eps**2))
        op_state = WaveFunction(grid=grid, eps=eps, values=vals.astype(complex))
        op_state = op_state.normalized()
        zones = zone_masses(op_state, r_scale=eps**-0.25, delta=1.0)
        assert zones.total == pytest.approx(1.0, abs=1e-9)
        inner_op.append(zones.inner)
        packet = init_concentrated_state(grid, eps, gaussian, [0.0], [0.0])
        inner_packet.append(zone_masses(packet, r_scale=eps**-0.25, delta=1.0).inner)
    assert inner_op[1] > inner_op[0]
    assert inner_packet[1] < inner_packet[0]


def test_zone_scale_order_violation():
    psi = coherent()
    with pytest.raises(ScaleOrderViolation):
        zone_masses(psi, r_scale=10.0, delta=2 * EPS)


def test_empirical_nu_rebound_weights():
    # profile support must sit inside the eps^0.4 window after scaling
    def split70(y):
        u1 = (np.asarray(y) - 0.75) / 0.35
        u2 = (np.asarray(y) + 0.75) / 0.35
        out = np.zeros_like(u1)
        m1, m2 = np.abs(u1) < 1, np.abs(u2) < 1
        out[m1] += np.sqrt(0.7) * np.exp(-1 / (1 - u1[m1] ** 2))
        out[m2] += np.sqrt(0.3) * np.exp(-1 / (1 - u2[m2] ** 2))
        return out

    psi = init_concentrated_state(GRID, EPS, split70, [0.0], [0.0])
    nu = empirical_nu(psi, EPS**0.4)
    assert nu.plus == pytest.approx(0.7, abs=0.05)
    assert nu.minus == pytest.approx(0.3, abs=0.05)


def test_empirical_nu_one_sided_and_parity():
    psi = init_concentrated_state(GRID, EPS, even_bump, [2.0], [0.0])
    nu = empirical_nu(psi, 0.5)
    assert nu.plus == 0.0 and nu.minus == 0.0
    even = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    out = propagate(even, CONE_UP, 0.5, EPS / 20)[-1]
    nu = empirical_nu(out, EPS**0.4)
    assert abs(nu.plus - nu.minus) <= 1e-8


def test_liouville_pairing_invariance():
    """<W_1, a o Phi_-1> matches <W_0, a> within 0.05 for smooth transport;
    the backward flow map is integrated on the Wigner grid nodes."""
    pot = ConicalPotential.from_dict(
        {"V_S": "x1*x1/2 + x1**4/10", "F": "0", "g": ["x1"], "d": 1}
    )
    psi = coherent(0.5, 0.0)
    out = propagate(psi, pot, 1.0, EPS / 20)[-1]

    def symbol(x, xi):
        return np.exp(-((x - 0.5) ** 2 + xi**2) / (2 * 0.3**2))

    before = pair_observable(psi, symbol)

    def symbol_pulled(x, xi):
        pts_x = np.asarray(x, dtype=float).ravel()
        pts_v = np.asarray(xi, dtype=float).ravel()
        h = -1e-2
        for _ in range(100):
            k1x, k1v = pts_v, -pot.grad_V(pts_x[:, None])[:, 0]
            k2x = pts_v + 0.5 * h * k1v
            k2v = -pot.grad_V((pts_x + 0.5 * h * k1x)[:, None])[:, 0]
            k3x = pts_v + 0.5 * h * k2v
            k3v = -pot.grad_V((pts_x + 0.5 * h * k2x)[:, None])[:, 0]
            k4x = pts_v + h * k3v
            k4v = -pot.grad_V((pts_x + h * k3x)[:, None])[:, 0]
            pts_x = pts_x + (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
            pts_v = pts_v + (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v)
        return symbol(pts_x, pts_v).reshape(np.shape(x))

    after = pair_observable(out, symbol_pulled)
    assert abs(after - before) <= 0.05
