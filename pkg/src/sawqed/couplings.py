"""Qubit-phonon couplings, cooperativities and transfer-fidelity estimates.

Couplings are returned as energy/hbar in s^-1.  When comparing with quoted
"MHz"/"kHz" figures the numbers are read as plain s^-1 magnitudes while cavity
linewidths use omega_c = 2 pi f_c; see ``TABLE_ONE`` for the rows this
convention reproduces.

The double-dot model works in micro-electronvolts throughout (t_c, epsilon,
Delta and the returned energies), which is the natural scale of the device.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .materials import MaterialRecord, get
from .rayleigh import piezo_profile, solve_110
from .units import AMU, E_CHARGE, HBAR, K_B, MICRON, NM
from .zeropoint import ModeGeometry, surface_velocity, zero_point_set

GAMMA_NV = 2 * math.pi * 28e9  # rad s^-1 T^-1


@dataclass(frozen=True)
class ChargeQubitParams:
    epsilon: float  # any energy unit, shared with t_c
    t_c: float
    l: float        # m
    d: float        # m

    def __post_init__(self):
        if not (self.t_c > 0 and self.l > 0 and self.d >= 0):
            raise ValueError("need t_c > 0, l > 0, d >= 0")


@dataclass(frozen=True)
class SpinQubitParams:
    t_c: float      # ueV
    epsilon: float  # ueV
    Delta: float    # ueV
    l: float        # m
    d: float        # m
    eta_geo: float

    def __post_init__(self):
        if self.Delta < 0:
            raise ValueError("Delta must be >= 0")
        if not 0 <= self.eta_geo <= 2:
            raise ValueError("eta_geo must lie in [0, 2]")


@dataclass(frozen=True)
class IonParams:
    q: float = E_CHARGE
    m: float = 9.012182 * AMU  # 9Be+
    omega_t: float = 2 * math.pi * 2e6
    d: float = 150 * MICRON

    def __post_init__(self):
        if not (self.q > 0 and self.m > 0 and self.omega_t > 0 and self.d > 0):
            raise ValueError("ion parameters must all be positive")


@dataclass(frozen=True)
class NVParams:
    gamma_NV: float = GAMMA_NV
    d: float = 10 * NM
    eta_NV: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if any(abs(x) > 1.5 for x in self.eta_NV):
            raise ValueError("|eta_NV| components must be <= 1.5")


@dataclass(frozen=True)
class CouplingResult:
    platform: str
    g: float
    factors: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DqdSpectrum:
    energies: tuple
    alpha: tuple
    beta: tuple
    kappa: tuple
    omega0: float

    def vector(self, l: int) -> np.ndarray:
        return np.array([self.alpha[l], self.beta[l], self.kappa[l]])


@dataclass(frozen=True)
class CoopResult:
    g: float
    T2: float
    omega_c: float
    Q: float
    n_th: float
    C: float


# ------------------------------------------------------------------ charge

def eta_geo(x_L: float, x_R: float, wavelength: float) -> float:
    """sin(2 pi x_R / lambda) - sin(2 pi x_L / lambda)."""
    k = 2 * math.pi / wavelength
    return math.sin(k * x_R) - math.sin(k * x_L)


def g_charge(p: ChargeQubitParams, phi0: float, k: float, F_kd: float) -> tuple[float, float, float]:
    """(g_ch, g_eff, Omega): bare coupling, projected coupling, qubit splitting.

    g_ch and g_eff are in s^-1; Omega carries the units of epsilon and t_c.
    """
    if not 0 < F_kd <= 1:
        raise ValueError("F_kd must lie in (0, 1]")
    g_ch = E_CHARGE * phi0 * F_kd * math.sin(k * p.l / 2) / HBAR
    Omega = math.hypot(p.epsilon, 2 * p.t_c)
    return g_ch, g_ch * 2 * p.t_c / Omega, Omega


def surface_factor(k: float, d: float, material: MaterialRecord) -> float:
    """|F(kd)| for the perturbative potential profile of ``material``."""
    prof = piezo_profile(material, solve_110(material), k)
    return abs(float(prof.F(k * d)))


# --------------------------------------------------------------- spin (DQD)

def _hamiltonian(t_c: float, epsilon: float, Delta: float) -> np.ndarray:
    # basis {T0, S11, S02}
    return np.array([[0.0, -Delta, 0.0],
                     [-Delta, 0.0, t_c / 2],
                     [0.0, t_c / 2, -epsilon]])


def dqd_spectrum(t_c: float, epsilon: float, Delta: float) -> DqdSpectrum:
    """Eigen-decomposition of the three-level double-dot Hamiltonian (ueV).

    Eigenvectors are signed so that the S02 weight kappa_l is >= 0 (the
    beta_l, then alpha_l, component is used when kappa_l vanishes).
    """
    H = _hamiltonian(t_c, epsilon, Delta)
    if Delta == 0:
        # T0 decouples exactly; keep the zeros exact
        w2, v2 = np.linalg.eigh(H[1:, 1:])
        w = np.concatenate([[0.0], w2])
        v = np.zeros((3, 3))
        v[0, 0] = 1.0
        v[1:, 1:] = v2
        order = np.argsort(w, kind="stable")
        w, v = w[order], v[:, order]
    else:
        w, v = np.linalg.eigh(H)
    for j in range(3):
        for comp in (2, 1, 0):
            if abs(v[comp, j]) > 1e-14:
                if v[comp, j] < 0:
                    v[:, j] = -v[:, j]
                break
    return DqdSpectrum(energies=tuple(w), alpha=tuple(v[0]), beta=tuple(v[1]),
                       kappa=tuple(v[2]), omega0=float(w[1] - w[0]))


def kappa_product(spec: DqdSpectrum) -> float:
    return spec.kappa[0] * spec.kappa[1]


def charge_imbalance(spec: DqdSpectrum) -> float:
    """|kappa_1^2 - kappa_0^2|, the qubit's exposure to charge noise."""
    return abs(spec.kappa[1] ** 2 - spec.kappa[0] ** 2)


def g_spin(p: SpinQubitParams, phi0: float, k: float, F_kd: float,
           spec: Optional[DqdSpectrum] = None) -> float:
    """kappa_0 kappa_1 eta_geo e phi0 F(kd) / hbar."""
    spec = spec if spec is not None else dqd_spectrum(p.t_c, p.epsilon, p.Delta)
    return kappa_product(spec) * p.eta_geo * E_CHARGE * phi0 * F_kd / HBAR


def singlet_admixture(t_c: float, epsilon: float) -> float:
    """kappa_S: S02 weight of the lower hybridized singlet (T0 excluded)."""
    w, v = np.linalg.eigh(np.array([[0.0, t_c / 2], [t_c / 2, -epsilon]]))
    return abs(float(v[1, 0]))


def g_qnd(p: SpinQubitParams, phi0: float, F_kd: float) -> float:
    """Longitudinal (phonon-number dependent force) coupling with kappa_S^2."""
    return singlet_admixture(p.t_c, p.epsilon) ** 2 * p.eta_geo * E_CHARGE * phi0 * F_kd / HBAR


def charge_noise_sensitivity(t_c: float, epsilon: float, Delta: float) -> float:
    """d omega0 / d epsilon by central difference (dimensionless)."""
    h = 1e-3 * abs(epsilon) if epsilon != 0 else 1e-3
    w = lambda e: dqd_spectrum(t_c, e, Delta).omega0
    return (w(epsilon + h) - w(epsilon - h)) / (2 * h)


# --------------------------------------------------------------------- ion

def lamb_dicke(p: IonParams, wavelength: float) -> float:
    x0 = math.sqrt(HBAR / (2 * p.m * p.omega_t))
    return 2 * math.pi * x0 / wavelength


def g_ion(p: IonParams, phi0: float, k: float) -> float:
    """q phi0 exp(-k d) eta_LD / hbar."""
    return p.q * phi0 * math.exp(-k * p.d) * lamb_dicke(p, 2 * math.pi / k) / HBAR


def ion_T2(d: float) -> float:
    """Heating-limited coherence time 2 s * (d / 150 um)^4."""
    if not d > 0:
        raise ValueError("d must be > 0")
    return 2.0 * (d / (150 * MICRON)) ** 4


# ---------------------------------------------------------------------- NV

def g_nv(p: NVParams, B0: float, component: Optional[int] = None) -> float:
    """gamma_NV B0, optionally weighted by one orientation factor eta^alpha."""
    eta = 1.0 if component is None else p.eta_NV[component]
    return p.gamma_NV * B0 * eta


# --------------------------------------------------------- figures of merit

def n_thermal(omega_c: float, T: float) -> float:
    if not T > 0:
        raise ValueError("temperature must be > 0")
    return 1.0 / math.expm1(HBAR * omega_c / (K_B * T))


def cooperativity(g: float, T2: float, omega_c: float, Q: float, T: float) -> CoopResult:
    if not all(x > 0 for x in (g, T2, omega_c, Q, T)):
        raise ValueError("cooperativity inputs must be positive")
    n = n_thermal(omega_c, T)
    return CoopResult(g=g, T2=T2, omega_c=omega_c, Q=Q, n_th=n,
                      C=g * g * T2 * Q / (omega_c * (n + 1)))


def dispersive(g: float, delta: float, kappa: float) -> tuple[float, float]:
    """(g^2/delta, (g/delta)^2 kappa)."""
    if delta == 0:
        raise ValueError("dispersive coupling undefined at zero detuning")
    if abs(delta) < 3 * abs(g):
        warnings.warn(f"|delta| = {abs(delta):.3g} < 3g; dispersive expansion is poor",
                      RuntimeWarning, stacklevel=2)
    return g * g / delta, (g / delta) ** 2 * kappa


def p_success(eps_ratio: float, C: float) -> float:
    """1 / ((1 + eps) (1 + 1/(4C)))."""
    if eps_ratio < 0 or not C > 0:
        raise ValueError("need eps_ratio >= 0 and C > 0")
    return 1.0 / ((1 + eps_ratio) * (1 + 1 / (4 * C)))


def fidelity_estimate(eps_ratio: float, C: float, coeff: Optional[float] = None,
                      variant: str = "bound") -> float:
    """Transfer fidelity estimate 1 - a eps - coeff / C.

    ``variant="bound"``: a = 2, coeff = 1/2 (lower bound from the rate model).
    ``variant="main"``: a = 1, coeff is the pulse-dependent O(1) constant
    (default 1).
    """
    if variant == "bound":
        a, c = 2.0, 0.5 if coeff is None else coeff
    elif variant == "main":
        a, c = 1.0, 1.0 if coeff is None else coeff
    else:
        raise ValueError("variant must be 'bound' or 'main'")
    return 1.0 - a * eps_ratio - c / C


def driven_rabi(g: float, alpha: float) -> float:
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return g * alpha


# ------------------------------------------------------------ Table I rows

# platform, g_low, g_high (quoted, read as s^-1), C_low, C_high, T2, Q, f_c
TABLE_ONE = {
    "charge": dict(g=(200e6, 450e6), C=(11, 55), T2=10e-9, Q=1e3, f_c=6e9),
    "spin": dict(g=(10e6, 22.4e6), C=(21, 106), T2=2e-6, Q=1e3, f_c=1.5e9),
    "ion": dict(g=(1.8e3, 4.0e3), C=(7, 36), T2=2.0, Q=3e3, f_c=2e6),
    "nv": dict(g=(45e3, 101e3), C=(10, 54), T2=100e-3, Q=1e3, f_c=3e9),
}
TABLE_T = 20e-3
L_TRANS = (1 * MICRON, 5 * MICRON)
TABLE_TOL = 0.15
D_2DEG = 50 * NM


def _area(lam: float, L_trans: float) -> ModeGeometry:
    return ModeGeometry(A=L_trans * 40 * lam, k=2 * math.pi / lam)


def computed_g(platform: str, catalog) -> tuple[float, float]:
    """First-principles (g at L_trans = 5 um, g at L_trans = 1 um) for a Table I row."""
    row = TABLE_ONE[platform]
    f = row["f_c"]
    out = []
    for Lt in reversed(L_TRANS):
        if platform == "charge":
            gaas = get(catalog, "GaAs")
            lam = surface_velocity(gaas)[0] / f
            geom = _area(lam, Lt)
            phi0 = zero_point_set(gaas, geom).phi0[0]
            F = surface_factor(geom.k, D_2DEG, get(catalog, "Al0.3Ga0.7As"))
            g = g_charge(ChargeQubitParams(0.0, 1.0, lam / 2, D_2DEG), phi0, geom.k, F)[0]
        elif platform == "spin":
            # per-sqrt(A) strength from the typical dot (l = 250 nm, lambda = 0.5 um),
            # mode area from the cavity wavelength at f_c
            gaas = get(catalog, "GaAs")
            lam_dot = 0.5 * MICRON
            k_dot = 2 * math.pi / lam_dot
            eg = eta_geo(-125 * NM, 125 * NM, lam_dot)
            p = SpinQubitParams(5.0, -7.0, 1.0, 250 * NM, D_2DEG, eg)
            F = surface_factor(k_dot, D_2DEG, get(catalog, "Al0.3Ga0.7As"))
            lam = surface_velocity(gaas)[0] / f
            phi0 = zero_point_set(gaas, _area(lam, Lt)).phi0[0]
            g = g_spin(p, phi0, k_dot, F)
        elif platform == "ion":
            ln = get(catalog, "LiNbO3")
            lam = surface_velocity(ln)[0] / f
            geom = _area(lam, Lt)
            phi0 = zero_point_set(ln, geom).phi0[1]
            g = g_ion(IonParams(), phi0, geom.k)
        elif platform == "nv":
            tf = get(catalog, "Terfenol-D")
            # B0 at the zero-point table's k = 2 pi / um, area from lambda_c
            lam = surface_velocity(tf)[0] / f
            B0 = zero_point_set(tf, ModeGeometry(A=_area(lam, Lt).A)).B0
            g = g_nv(NVParams(), B0)
        else:
            raise KeyError(platform)
        out.append(g)
    return out[0], out[1]


TABLE_ONE_COLUMNS = ("platform", "g_low", "g_high", "C_low", "C_high",
                     "g_low_calc", "g_high_calc", "C_low_calc", "C_high_calc",
                     "g_pass", "C_pass")


def _within(x: float, ref: float, tol: float) -> bool:
    return abs(x / ref - 1) <= tol


def table_one(catalog) -> list[dict]:
    """Table I rows: cooperativities from the quoted couplings, plus couplings
    recomputed from the catalog, each flagged against the quoted values."""
    rows = []
    for name, row in TABLE_ONE.items():
        w = 2 * math.pi * row["f_c"]
        C = [cooperativity(g, row["T2"], w, row["Q"], TABLE_T).C for g in row["g"]]
        g_calc = computed_g(name, catalog)
        rows.append({
            "platform": name,
            "g_low": row["g"][0], "g_high": row["g"][1],
            "C_low": C[0], "C_high": C[1],
            "g_low_calc": g_calc[0], "g_high_calc": g_calc[1],
            "C_low_calc": cooperativity(g_calc[0], row["T2"], w, row["Q"], TABLE_T).C,
            "C_high_calc": cooperativity(g_calc[1], row["T2"], w, row["Q"], TABLE_T).C,
            "g_pass": all(_within(a, b, TABLE_TOL) for a, b in zip(g_calc, row["g"])),
            "C_pass": all(_within(a, b, TABLE_TOL) for a, b in zip(C, row["C"])),
        })
    return rows
