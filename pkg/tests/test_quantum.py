"""Split-step propagation: unitarity, closed forms, convergence."""

import numpy as np
import pytest

from conelab.errors import BoundaryMassExceeded, DimensionMismatch, ProfileClipped
from conelab.potential import ConicalPotential
from conelab.quantum import (
    GridSpec,
    energy_expectation,
    init_concentrated_state,
    observables,
    propagate,
    step_strang,
)

EPS = 1.0 / 64
GRID = GridSpec(1, 4.0, 2048)
FREE = ConicalPotential.from_dict({"V_S": "0", "F": "0", "g": ["x1"], "d": 1})
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


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(1, 4.0, 1000)
    with pytest.raises(ValueError):
        GridSpec(1, -1.0, 1024)
    with pytest.raises(DimensionMismatch):
        GridSpec(3, 4.0, 1024)


def test_initial_state_normalized_and_centered():
    psi = init_concentrated_state(GRID, EPS, gaussian, [0.3], [-0.5])
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    x_mean, xi_mean, x_var = observables(psi)
    assert x_mean[0] == pytest.approx(0.3, abs=GRID.dx + np.sqrt(EPS) * 0.01)
    assert xi_mean[0] == pytest.approx(-0.5, rel=1e-6)
    assert x_var[0] == pytest.approx(EPS / 2, rel=1e-3)


def test_initial_state_small_launch_momentum():
    beta = 0.05
    xi0 = -(EPS**beta)
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [xi0])
    _, xi_mean, _ = observables(psi)
    assert xi_mean[0] == pytest.approx(xi0, rel=0.02)


def test_symmetric_state_has_zero_means():
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    x_mean, xi_mean, _ = observables(psi)
    assert abs(x_mean[0]) <= 1e-12
    assert abs(xi_mean[0]) <= 1e-12


def test_profile_clipped():
    wide = lambda y: np.exp(-(y**2) / (2 * 60.0**2))  # noqa: E731
    with pytest.raises(ProfileClipped):
        init_concentrated_state(GRID, 1.0, wide, [0.0], [0.0])


def test_free_gaussian_dispersion_closed_form():
    psi = init_concentrated_state(GRID, EPS, gaussian, [0.0], [0.0])
    psi1 = propagate(psi, FREE, 1.0, EPS / 20)[-1]
    x = GRID.axis()
    a_t = 1.0 + 1.0j
    exact = (np.pi * EPS) ** -0.25 / np.sqrt(np.sqrt(a_t)) * np.exp(
        -(x**2) / (2 * EPS * a_t)
    )
    exact /= np.sqrt(np.sum(np.abs(exact) ** 2) * GRID.dx)
    phase = np.vdot(exact, psi1.values)
    exact *= phase / abs(phase)
    err = np.sqrt(np.sum(np.abs(psi1.values - exact) ** 2) * GRID.dx)
    assert err <= 1e-6


def test_single_step_preserves_norm():
    psi = init_concentrated_state(GRID, EPS, gaussian, [0.2], [0.4])
    stepped = step_strang(psi, CONE_DOWN, EPS / 20)
    assert abs(stepped.norm() - 1.0) <= 1e-12


def test_unitarity_over_horizon():
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    out = propagate(psi, CONE_DOWN, 1.0, EPS / 20)[-1]
    assert abs(out.norm() - 1.0) <= 1e-9


def test_coherent_state_tracks_classical_oscillator():
    psi = init_concentrated_state(GRID, EPS, gaussian, [0.5], [0.0])
    out = propagate(psi, HARMONIC, np.pi, EPS / 20)[-1]
    x_mean, xi_mean, _ = observables(out)
    assert x_mean[0] == pytest.approx(-0.5, abs=1e-4)
    assert xi_mean[0] == pytest.approx(0.0, abs=1e-4)


def test_momentum_conserved_free_evolution():
    psi = init_concentrated_state(GRID, EPS, gaussian, [0.0], [0.7])
    out = propagate(psi, FREE, 1.0, EPS / 20)[-1]
    assert observables(out)[1][0] == pytest.approx(0.7, abs=1e-10)


def test_parity_preserved_by_even_cone():
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    out = propagate(psi, CONE_UP, 1.0, EPS / 20)[-1]
    mirrored = np.roll(out.values[::-1], 1)  # grid point -L maps to itself
    diff = np.sqrt(np.sum(np.abs(out.values - mirrored) ** 2) * GRID.dx)
    assert diff <= 1e-8
    assert abs(observables(out)[0][0]) <= 1e-8


def test_self_convergence_in_dt():
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    dt = EPS / 10
    runs = {}
    for k, step in enumerate([dt, dt / 2, dt / 4]):
        runs[k] = propagate(psi, CONE_DOWN, 1.0, step)[-1].values
    err_coarse = np.sqrt(np.sum(np.abs(runs[0] - runs[1]) ** 2) * GRID.dx)
    err_fine = np.sqrt(np.sum(np.abs(runs[1] - runs[2]) ** 2) * GRID.dx)
    assert err_coarse / err_fine >= 3.0


def test_energy_drift():
    psi = init_concentrated_state(GRID, EPS, even_bump, [0.0], [0.0])
    e0 = energy_expectation(psi, CONE_DOWN)
    out = propagate(psi, CONE_DOWN, 1.0, EPS / 20)[-1]
    e1 = energy_expectation(out, CONE_DOWN)
    assert abs(e1 - e0) / abs(e0) <= 1e-6


def test_zero_span_returns_initial_state():
    psi = init_concentrated_state(GRID, EPS, gaussian, [0.0], [0.0])
    snaps = propagate(psi, FREE, psi.t, EPS / 20)
    assert len(snaps) == 1
    assert np.array_equal(snaps[0].values, psi.values)


def test_boundary_mass_guard():
    grid = GridSpec(1, 1.0, 512)
    psi = init_concentrated_state(grid, 1.0 / 64, gaussian, [0.0], [0.0])
    sliding = ConicalPotential.from_dict({"V_S": "-3*x1", "F": "0", "g": ["x1"], "d": 1})
    with pytest.raises(BoundaryMassExceeded):
        propagate(psi, sliding, 2.0, 1e-3, snapshot_times=np.linspace(0.2, 2.0, 10))


def test_two_dimensional_coherent_state():
    grid = GridSpec(2, 4.0, 256)
    eps = 1.0 / 32
    pot = ConicalPotential.from_dict(
        {"V_S": "(x1*x1 + x2*x2)/2", "F": "0", "g": ["x1"], "d": 2}
    )

    def prof(y1, y2):
        return np.exp(-(y1**2 + y2**2) / 2)

    psi = init_concentrated_state(grid, eps, prof, [0.5, 0.0], [0.0, 0.3])
    out = propagate(psi, pot, np.pi / 2, eps / 10)[-1]
    x_mean, xi_mean, _ = observables(out)
    assert x_mean == pytest.approx([0.0, 0.3], abs=5e-4)
    assert xi_mean == pytest.approx([-0.5, 0.0], abs=5e-4)


def test_snapshot_metadata_csv(tmp_path):
    from conelab.quantum import save_snapshot_csv

    psi = init_concentrated_state(GRID, EPS, gaussian, [0.0], [0.0])
    path = tmp_path / "snap.csv"
    save_snapshot_csv(psi, path)
    first = path.read_text().splitlines()
    assert first[0] == "x,re_psi,im_psi"
    assert len(first) == GRID.n + 1
