"""Numerical laboratory for quantum and classical dynamics under conical
potentials V(x) = V_S(x) + ||g(x)|| F(x)."""

from .classify import (
    BranchRoots,
    ClassificationReport,
    MeanDirection,
    SphereMeasureAtoms,
    branch_residual,
    classify_point,
    mean_direction,
    solve_branch_equation,
    solve_nu_p1,
    zero_root_residual,
)
from .flow import (
    IntegratorOptions,
    PhasePoint,
    SingularArrival,
    Trajectory,
    integrate_exterior,
    integrate_insider,
    launch_branch,
    rho_diagnostic,
)
from .potential import (
    SINGULAR_TOL,
    ConicalPotential,
    ConstraintMap,
    ScalarField,
    SingularPointGeometry,
    singular_geometry,
)
from .quantum import (
    GridSpec,
    WaveFunction,
    energy_expectation,
    init_concentrated_state,
    observables,
    propagate,
    step_strang,
)
from .wavepacket import (
    ActionRecord,
    CrossingScheme,
    PacketProfile,
    ProfileTrace,
    action,
    assemble_packet,
    crossing_profile,
    cut_profiles,
    default_profile_grid,
    error_functional,
    propagate_profile,
)
from .wigner import (
    EmpiricalNu,
    WignerField,
    ZoneMasses,
    empirical_nu,
    pair_observable,
    peak_track,
    wigner_transform,
    zone_masses,
)

__version__ = "0.1.0"
