"""Groove-grating Bragg resonators: reflection, penetration length and Q budget."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

from .errors import CatalogError, InfeasibleDesignError
from .materials import MaterialRecord, default_catalog, get
from .zeropoint import surface_velocity


@dataclass(frozen=True)
class MirrorSpec:
    N: int
    h_over_lambda: float
    w_over_p: float = 0.5
    material_name: str = "LiNbO3"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be an integer >= 1")
        if not 0 < self.h_over_lambda < 0.2:
            raise ValueError("h_over_lambda must lie in (0, 0.2)")
        if not 0 < self.w_over_p < 1:
            raise ValueError("w_over_p must lie in (0, 1)")


@dataclass(frozen=True)
class CavityBudget:
    f_c: float
    lambda_c: float
    r_s: float
    R_total: float
    L_p: float
    L_c: float
    N_eff: float
    Q_r: float
    Q_bk: float
    Q_m: float
    Q: float
    kappa_gd: float
    kappa_bd: float
    kappa: float
    ratio_gd_bd: float
    mode_spacing_rel: float
    bandwidth_rel: float
    A: float

    def as_dict(self) -> dict:
        return asdict(self)


def center_frequency(m: MaterialRecord, p: float) -> float:
    """Bragg frequency v_s / (2p) for groove period p."""
    if not p > 0:
        raise ValueError("period p must be > 0")
    return surface_velocity(m)[0] / (2 * p)


def _material(mirror: MirrorSpec, material: Optional[MaterialRecord]) -> MaterialRecord:
    if material is not None:
        return material
    return get(default_catalog(), mirror.material_name)


def groove_reflection(mirror: MirrorSpec, material: Optional[MaterialRecord] = None) -> float:
    """|r_s| = C1 (h/l) sin(pi w/p) + C2 (h/l)^2 cos(pi w/p)."""
    m = _material(mirror, material)
    if m.mirror_C1 is None or m.mirror_C2 is None:
        raise CatalogError(f"material {m.name!r} has no groove reflection coefficients "
                           "(mirror_C1, mirror_C2)")
    h = mirror.h_over_lambda
    x = math.pi * mirror.w_over_p
    # cos(pi/2) is not exactly zero in floating point
    c = 0.0 if mirror.w_over_p == 0.5 else math.cos(x)
    return abs(m.mirror_C1 * h * math.sin(x) + m.mirror_C2 * h * h * c)


def budget(mirror: MirrorSpec, D: float, L_trans: float, f_c: float,
           material: Optional[MaterialRecord] = None, Q_d: float = math.inf) -> CavityBudget:
    """Q budget of a two-mirror cavity with gap D (m) and aperture L_trans (m).

    Q_d is the diffraction-loss Q; infinite by default (laterally confined mode).
    """
    m = _material(mirror, material)
    if m.bulk_Cb is None:
        raise CatalogError(f"material {m.name!r} has no bulk-conversion coefficient bulk_Cb")
    if D < 0:
        raise ValueError("gap D must be >= 0")
    r = groove_reflection(mirror, m)
    if r == 0:
        raise ValueError("degenerate mirror: |r_s| = 0, penetration length diverges")
    v_s = surface_velocity(m)[0]
    lam = v_s / f_c
    N, h = mirror.N, mirror.h_over_lambda
    R = math.tanh(N * r)
    L_p = math.tanh((N - 1) * r) * lam / (4 * r)
    L_c = D + 2 * L_p
    if L_c == 0:
        raise ValueError("zero effective cavity length (N = 1 mirrors with D = 0)")
    N_eff = L_c / lam
    Q_r = 2 * math.pi * N_eff * math.cosh(N * r) ** 2  # 1/(1 - tanh^2) without cancellation
    Q_bk = 2 * math.pi * N_eff / (m.bulk_Cb * h * h)
    Q_m = m.qm_f_product / (f_c / 1e9)
    Q = 1 / (1 / Q_r + 1 / Q_bk + 1 / Q_m + 1 / Q_d)
    w = 2 * math.pi * f_c
    k_gd = w / Q_r
    k_bd = w / Q_bk + w / Q_m + w / Q_d
    return CavityBudget(
        f_c=f_c, lambda_c=lam, r_s=r, R_total=R, L_p=L_p, L_c=L_c, N_eff=N_eff,
        Q_r=Q_r, Q_bk=Q_bk, Q_m=Q_m, Q=Q, kappa_gd=k_gd, kappa_bd=k_bd, kappa=k_gd + k_bd,
        ratio_gd_bd=k_gd / k_bd, mode_spacing_rel=lam / (2 * L_c), bandwidth_rel=2 * r / math.pi,
        A=L_trans * L_c,
    )


SWEEP_COLUMNS = ("h_over_lambda", "Q", "Q_r", "Q_bk", "Q_m", "ratio_gd_bd")


def q_sweep(m: MaterialRecord, N: int, h_grid: Iterable[float], D: float, w_over_p: float,
            f_c: float, L_trans: float = 1e-6) -> list[dict]:
    rows = []
    for h in h_grid:
        if not 0 < h <= 0.1:
            raise ValueError(f"h/lambda grid values must lie in (0, 0.1], got {h}")
        b = budget(MirrorSpec(N, h, w_over_p, m.name), D, L_trans, f_c, m)
        rows.append({"h_over_lambda": h, **b.as_dict()})
    return rows


def bulk_limit_onset(rows: Sequence[dict]) -> Optional[float]:
    """Smallest h where bulk conversion becomes the dominant loss channel."""
    for r in rows:
        if r["Q_bk"] < min(r["Q_r"], r["Q_m"]):
            return r["h_over_lambda"]
    return None


def design_search(m: MaterialRecord, f_c: float, target_Q: float, min_ratio: float,
                  D_over_lambda: float = 5.25, w_over_p: float = 0.5,
                  N_max: int = 1000, h_step: float = 5e-4, h_max: float = 0.1,
                  L_trans: float = 1e-6) -> tuple[MirrorSpec, CavityBudget]:
    """Smallest-N (then smallest-h) grating meeting both targets."""
    if not (target_Q > 0 and min_ratio >= 0):
        raise ValueError("target_Q must be > 0 and min_ratio >= 0")
    lam = surface_velocity(m)[0] / f_c
    D = D_over_lambda * lam
    hs = [round(i * h_step, 12) for i in range(1, int(round(h_max / h_step)) + 1)]
    best = None  # (score, N, h, budget)
    for N in range(1, N_max + 1):
        for h in hs:
            b = budget(MirrorSpec(N, h, w_over_p, m.name), D, L_trans, f_c, m)
            if b.Q >= target_Q and b.ratio_gd_bd >= min_ratio:
                return MirrorSpec(N, h, w_over_p, m.name), b
            score = min(b.Q / target_Q, b.ratio_gd_bd / min_ratio if min_ratio > 0 else math.inf)
            if best is None or score > best[0]:
                best = (score, N, h, b)
    _, N, h, b = best
    raise InfeasibleDesignError(
        f"no grating with N <= {N_max}, h/lambda <= {h_max} reaches Q >= {target_Q:g} and "
        f"kappa_gd/kappa_bd >= {min_ratio:g}; closest: N={N}, h/lambda={h:.4f}, "
        f"Q={b.Q:.4g}, ratio={b.ratio_gd_bd:.4g}",
        best=(MirrorSpec(N, h, w_over_p, m.name), b),
    )
