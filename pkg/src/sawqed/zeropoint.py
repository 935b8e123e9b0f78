"""Single-phonon zero-point amplitudes of a surface mode.

All quantities scale as A^(-1/2) with the effective mode area A.  Three
independent routes to U0 are provided (simple dimensional estimate,
mode-function normalization, classical energy density) plus the
literature constant form, so they can be compared against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from scipy.integrate import quad

from .errors import CatalogError, SolverError
from .materials import MaterialRecord, permittivity
from .rayleigh import RayleighSolution, profile_110, solve_110
from .units import HBAR, MICRON

DEFAULT_K = 2 * math.pi / MICRON
DEFAULT_AREA = MICRON ** 2
H_GAAS = 28.2e10         # energy-density factor for GaAs, N/m^2
C_LITERATURE_GAAS = 0.45  # normalization constant of the literature form


@dataclass(frozen=True)
class ModeGeometry:
    A: float = DEFAULT_AREA
    k: float = DEFAULT_K
    L_trans: Optional[float] = None
    L_c: Optional[float] = None

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("mode area A must be > 0")
        if not self.k > 0:
            raise ValueError("wavenumber k must be > 0")
        if self.L_trans is not None and self.L_c is not None:
            if abs(self.A - self.L_trans * self.L_c) > 1e-12 * self.A:
                raise ValueError("A must equal L_trans * L_c")

    @classmethod
    def from_lengths(cls, L_trans: float, L_c: float, k: float = DEFAULT_K) -> "ModeGeometry":
        return cls(A=L_trans * L_c, k=k, L_trans=L_trans, L_c=L_c)

    def scaled(self, factor: float) -> "ModeGeometry":
        """Same geometry with the area multiplied by ``factor``."""
        return ModeGeometry(A=self.A * factor, k=self.k)


@dataclass(frozen=True)
class ZeroPointSet:
    material_name: str
    U0: float
    s0: float
    phi0: Optional[tuple[float, float]]
    xi0: Optional[tuple[float, float]]
    B0: Optional[float]
    method: str
    v_s: float
    conservative: bool = False


def surface_velocity(m: MaterialRecord) -> tuple[float, bool]:
    """(v_s, conservative).  Falls back to the bulk shear velocity, flagged."""
    if m.has_elastic:
        return solve_110(m).v_s, False
    if m.saw_velocity is not None:
        return m.saw_velocity, False
    if m.shear_velocity is not None:
        return m.shear_velocity, True
    raise CatalogError(f"material {m.name!r} has no velocity data (elastic constants, "
                       "saw_velocity or shear_velocity)")


def u0_simple(m: MaterialRecord, geom: ModeGeometry, v_s: Optional[float] = None) -> float:
    """sqrt(hbar / (2 rho v_s A))."""
    if v_s is None:
        v_s = surface_velocity(m)[0]
    return math.sqrt(HBAR / (2 * m.density * v_s * geom.A))


def normalization_delta(sol: RayleighSolution, upper: float = 40.0) -> float:
    """Depth-normalization parameter delta of the [110] mode function.

    The kinetic-energy normalization integrates chi0^2 + zeta0^2 over kz; the
    in-plane standing-wave factors cos^2/sin^2 average to 1/2.
    """
    f = lambda s: sum(float(p) ** 2 for p in profile_110(sol, s))
    val, err = quad(f, 0.0, upper, epsrel=1e-9, epsabs=0.0, limit=200)
    if not math.isfinite(val) or err > 1e-6 * abs(val):
        raise SolverError(f"normalization integral did not converge (est. error {err:.2e})")
    return sol.alpha * val / 2


def u0_normalized(m: MaterialRecord, geom: ModeGeometry,
                  sol: Optional[RayleighSolution] = None) -> tuple[float, float]:
    """(U0, delta) from the normalized mode function."""
    sol = sol if sol is not None else solve_110(m)
    delta = normalization_delta(sol)
    return math.sqrt(sol.alpha / delta) * u0_simple(m, geom, sol.v_s), delta


def u0_energy_density(geom: ModeGeometry, H: float = H_GAAS, v_s: float = 2878.0) -> float:
    """sqrt(hbar v_s / (H A)) from the classical energy per area k U^2 H."""
    if not H > 0:
        raise ValueError("H must be > 0")
    return math.sqrt(HBAR * v_s / (H * geom.A))


def u0_literature(m: MaterialRecord, geom: ModeGeometry, C: float = C_LITERATURE_GAAS,
                  v_s: Optional[float] = None) -> float:
    """C * sqrt(2 hbar / (rho v_s A))."""
    if v_s is None:
        v_s = surface_velocity(m)[0]
    return C * math.sqrt(2 * HBAR / (m.density * v_s * geom.A))


def phi0_bounds(m: MaterialRecord, U0: float) -> Optional[tuple[float, float]]:
    """(min, max) potential amplitude (e/eps) U0, or None for non-piezo records."""
    e = m.piezo_bounds
    if e is None:
        return None
    eps_lo, eps_hi = permittivity(m)
    return (e[0] / eps_hi * U0, e[1] / eps_lo * U0)


def zero_point_set(m: MaterialRecord, geom: ModeGeometry = ModeGeometry()) -> ZeroPointSet:
    v_s, conservative = surface_velocity(m)
    U0 = u0_simple(m, geom, v_s)
    s0 = geom.k * U0
    phi0 = phi0_bounds(m, U0)
    xi0 = None if phi0 is None else (geom.k * phi0[0], geom.k * phi0[1])
    B0 = m.h15 * s0 if m.h15 is not None else None
    return ZeroPointSet(material_name=m.name, U0=U0, s0=s0, phi0=phi0, xi0=xi0, B0=B0,
                        method="simple", v_s=v_s, conservative=conservative)


TABLE_COLUMNS = ("material", "U0_fm", "s0_1e-9", "phi0_min_uV", "phi0_max_uV",
                 "xi0_min_V_per_m", "xi0_max_V_per_m", "B0_uT", "v_s_m_per_s", "conservative")


def table_rows(catalog: Sequence[MaterialRecord], geom: ModeGeometry = ModeGeometry()) -> list[dict]:
    rows = []
    for m in catalog:
        z = zero_point_set(m, geom)
        rows.append({
            "material": m.name,
            "U0_fm": z.U0 * 1e15,
            "s0_1e-9": z.s0 * 1e9,
            "phi0_min_uV": z.phi0[0] * 1e6 if z.phi0 else None,
            "phi0_max_uV": z.phi0[1] * 1e6 if z.phi0 else None,
            "xi0_min_V_per_m": z.xi0[0] if z.xi0 else None,
            "xi0_max_V_per_m": z.xi0[1] if z.xi0 else None,
            "B0_uT": z.B0 * 1e6 if z.B0 is not None else None,
            "v_s_m_per_s": z.v_s,
            "conservative": z.conservative,
        })
    return rows
