"""Energy bookkeeping, conservation audits and norm-inequality checks.

Tolerances come in two tiers: identities that are exact in the
discretization are checked at 1e-10, time-integration drift at 1e-6.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import coulomb_solve, gradient
from .meanfield import potential_energies
from .state import DensityMatrix, kinetic_energy, norm_report, particle_density, rediagonalize

EXACT_TOL = 1e-10
SCHEME_TOL = 1e-6

# audit checks, keyed by the invariant they guard
INVARIANTS = {
    "trace": "charge conservation: Tr rho(t) = Tr rho_I",
    "trace_norm": "charge conservation: |||rho(t)|||_1 = |||rho_I|||_1",
    "e_tot": "energy conservation: E_tot(rho(t)) = E_tot(rho_I)",
    "occupations": "spectrum constancy: eigenvalues of rho(t) are constant in time",
    "kinetic_bound": "kinetic energy bound: 0 <= E_kin(rho(t)) <= E_tot(rho_I)",
}


@dataclass(frozen=True)
class EnergyReport:
    t: float
    trace: float
    trace_norm: float
    e_kin: float
    e_hartree: float
    e_exchange: float
    e_pot: float
    e_tot: float
    z_norm: float
    y_norm: float
    gram_defect: float
    occupation_drift: float
    min_eigenvalue: float

    COLUMNS = ("t", "trace", "trace_norm", "e_kin", "e_hartree", "e_exchange", "e_pot",
               "e_tot", "z_norm", "y_norm", "gram_defect", "occupation_drift", "min_eigenvalue")

    def row(self) -> list:
        return [getattr(self, c) for c in self.COLUMNS]


def spectrum_drift(spectrum, reference) -> float:
    """Largest deviation between a sorted spectrum and reference occupations.

    The spectrum may carry extra near-zero eigenvalues (recompressed
    states); those are compared against zero.
    """
    ref = np.sort(np.asarray(reference, dtype=float))[::-1]
    spec = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    n = max(ref.size, spec.size)
    ref = _pad_middle(ref, n)
    spec = _pad_middle(spec, n)
    return float(np.max(np.abs(spec - ref))) if n else 0.0


def _pad_middle(values, n):
    # insert zeros between the positive and negative parts so sign-sorted
    # spectra line up
    k = n - values.size
    if k == 0:
        return values
    pos = values[values >= 0]
    neg = values[values < 0]
    return np.concatenate([pos, np.zeros(k), neg])


def energy_report(rho: DensityMatrix, t: float = 0.0, coupling: float = 1.0,
                  reference_occupations=None) -> EnergyReport:
    nr = norm_report(rho)
    e_h, e_x = potential_energies(rho, coupling)
    spectrum = rediagonalize(rho)[0] if rho.rank else np.zeros(0)
    ref = rho.occupations if reference_occupations is None else reference_occupations
    e_pot = e_h - e_x
    return EnergyReport(
        t=float(t), trace=nr.trace, trace_norm=nr.trace_norm,
        e_kin=nr.kinetic_energy, e_hartree=e_h, e_exchange=e_x, e_pot=e_pot,
        e_tot=nr.kinetic_energy + e_pot, z_norm=nr.z_norm, y_norm=nr.y_norm,
        gram_defect=rho.gram_defect,
        occupation_drift=spectrum_drift(spectrum, ref),
        min_eigenvalue=float(spectrum.min()) if spectrum.size else 0.0)


def annotate(traj) -> list:
    """Fill ``traj.reports`` with one :class:`EnergyReport` per sample."""
    ref = traj.initial.occupations
    traj.reports = [energy_report(rho, t, traj.coupling, ref)
                    for t, rho in zip(traj.times, traj.states)]
    return traj.reports


@dataclass
class AuditSummary:
    drifts: dict
    tolerances: dict
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"passed": self.passed, **asdict(self)}


DEFAULT_TOLERANCES = {"trace": EXACT_TOL, "trace_norm": EXACT_TOL,
                      "e_tot": SCHEME_TOL, "occupations": 1e-8}


def _rel(values, ref):
    values = np.asarray(values, dtype=float)
    scale = abs(ref) if ref != 0 else 1.0
    return float(np.max(np.abs(values - ref)) / scale)


def conservation_audit(traj, tolerances: dict | None = None) -> AuditSummary:
    """Maximum relative drifts of trace, trace norm, energy and spectrum."""
    if len(traj) < 2:
        raise ValueError("conservation audit needs at least two samples")
    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    reports = traj.reports or annotate(traj)
    first = reports[0]
    drifts = {
        "trace": _rel([r.trace for r in reports], first.trace),
        "trace_norm": _rel([r.trace_norm for r in reports], first.trace_norm),
        "e_tot": _rel([r.e_tot for r in reports], first.e_tot),
        "occupations": max(r.occupation_drift for r in reports),
    }
    failures = [f"{INVARIANTS[k]} violated: drift {drifts[k]:.3e} > {tol[k]:.1e}"
                for k in drifts if not drifts[k] <= tol[k]]
    return AuditSummary(drifts, tol, failures)


@dataclass
class KineticBoundResult:
    applicable: bool
    passed: bool
    lower_margin: float = float("nan")
    upper_margin: float = float("nan")
    failures: list = field(default_factory=list)
    reason: str = ""


def kinetic_bound_check(traj, slack: float = 1e-8) -> KineticBoundResult:
    """Check 0 <= E_kin(t) <= E_tot(0) at every sample (positive states only)."""
    if not traj.initial.is_positive:
        return KineticBoundResult(False, True, reason="not applicable: initial state is not positive")
    reports = traj.reports or annotate(traj)
    e_tot0 = reports[0].e_tot
    kin = np.array([r.e_kin for r in reports])
    lower = float(kin.min())
    upper = float(e_tot0 - kin.max())
    failures = []
    if lower < -slack:
        failures.append(f"{INVARIANTS['kinetic_bound']} violated: E_kin = {lower:.3e} < 0")
    if upper < -slack:
        failures.append(f"{INVARIANTS['kinetic_bound']} violated: E_kin exceeds E_tot(0) by {-upper:.3e}")
    return KineticBoundResult(True, not failures, lower, upper, failures)


@dataclass(frozen=True)
class LiebThirringCheck:
    q: float
    alpha: float
    lhs: float
    rhs_core: float
    ratio: float


def lieb_thirring_scan(rho: DensityMatrix, q_list) -> list:
    """Ratios ||n||_q / (|||rho|||_1**alpha * E_kin(|rho|)**(1-alpha)).

    ``alpha = (3 - q) / (2 q)``; exponents assume three dimensions.
    """
    if rho.grid.dim != 3:
        raise ValueError("Lieb-Thirring exponents are for three-dimensional grids")
    n = np.abs(particle_density(rho))
    trace_norm = float(np.sum(np.abs(rho.occupations)))
    e_kin_abs = kinetic_energy(rho, absolute=True)
    out = []
    for q in q_list:
        if not 1 <= q <= 3:
            raise ValueError(f"q must lie in [1, 3], got {q}")
        alpha = (3 - q) / (2 * q)
        lhs = float(rho.grid.integrate(n ** q) ** (1 / q))
        rhs = trace_norm ** alpha * e_kin_abs ** (1 - alpha)
        out.append(LiebThirringCheck(q, alpha, lhs, rhs, lhs / rhs if rhs > 0 else float("inf")))
    return out


def hartree_energy_identity(rho: DensityMatrix) -> tuple:
    """(int V_H n, int |grad V_H|**2) computed independently.

    Equal on 3D grids when the density has zero net charge against the
    neutralizing background, i.e. ``int V_H n = int V_H (n - mean n)``.
    """
    if rho.grid.dim != 3:
        raise ValueError("the Poisson energy identity needs the 3D Coulomb kernel")
    return density_energy_identity(rho.grid, particle_density(rho))


def density_energy_identity(grid, density) -> tuple:
    """Same identity starting from a stored density, e.g. a snapshot."""
    if grid.dim != 3:
        raise ValueError("the Poisson energy identity needs the 3D Coulomb kernel")
    v = coulomb_solve(grid, density).real
    lhs = float(grid.integrate(v * density))
    rhs = float(sum(grid.integrate(np.abs(d) ** 2) for d in gradient(grid, v)))
    return lhs, rhs
