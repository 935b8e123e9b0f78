"""Rayleigh surface waves on cubic crystals.

Two routes are provided.  ``solve_110`` uses the closed-form velocity cubic
for propagation along [110] on a (001) surface; ``solve_general`` scans the
phase velocity for an arbitrary in-plane direction and locates the zero of
the stress-free boundary determinant.  The two are independent and are used
to cross-check each other.

Depth dependence is written as exp(-q k z) with Re q > 0 so that the mode
decays into the substrate (z > 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar

from .errors import NotPiezoelectricError, SolverError
from .materials import MaterialRecord
from .units import EPS0

ROOT_TOL = 1e-9
# Roots closer than this (relative) share a null space; the eigen-solver splits
# exact double roots by ~sqrt(machine eps).
CLUSTER_TOL = 1e-3


@dataclass(frozen=True)
class RayleighSolution:
    v_s: float
    X: float
    q: complex
    gamma: complex
    phi: float
    material_name: str

    @property
    def alpha(self) -> float:
        return self.q.real

    @property
    def beta(self) -> float:
        return self.q.imag


@dataclass(frozen=True)
class GeneralModeSolution:
    theta: float
    c: float
    roots: list
    amplitude_vectors: list
    K: tuple
    residual: float


@dataclass(frozen=True)
class PiezoFieldProfile:
    """Dimensionless potential profile F(kz) below a free surface.

    The potential is ``phi0_scale * F(kz)`` inside the crystal and
    ``phi0_scale * F(0) * exp(k z)`` on the vacuum side (z < 0).
    """

    A1: complex
    A3: float
    alpha: float
    beta: float
    xi: float
    phi: float
    k: float
    phi0_scale: float

    def F(self, kz):
        kz = np.asarray(kz, dtype=float)
        osc = 2 * abs(self.A1) * np.exp(-self.alpha * kz) * np.cos(self.beta * kz + self.phi + self.xi)
        return osc + self.A3 * np.exp(-kz)

    def F_vacuum(self, kz):
        """Vacuum-side amplitude for kz <= 0."""
        return self.F(0.0) * np.exp(np.asarray(kz, dtype=float))

    def potential(self, z):
        """Potential in V at depth z (m); negative z is above the surface."""
        z = np.asarray(z, dtype=float)
        kz = self.k * z
        inside = self.F(np.maximum(kz, 0.0))
        outside = self.F_vacuum(np.minimum(kz, 0.0))
        return self.phi0_scale * np.where(z >= 0, inside, outside)


# ---------------------------------------------------------------- polynomials

def poly_roots(coeffs: Sequence[complex], newton_steps: int = 5) -> np.ndarray:
    """Roots of a polynomial (highest power first) via the companion matrix,
    polished by a few Newton steps."""
    c = np.asarray(coeffs, dtype=complex)
    nz = np.flatnonzero(np.abs(c) > 0)
    if nz.size == 0:
        raise SolverError("zero polynomial")
    c = c[nz[0]:]
    n = len(c) - 1
    if n < 1:
        return np.array([], dtype=complex)
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -c[1:] / c[0]
    if n > 1:
        comp[1:, :-1] = np.eye(n - 1)
    roots = np.linalg.eigvals(comp)
    dc = np.polyder(c)
    for _ in range(newton_steps):
        d = np.polyval(dc, roots)
        ok = np.abs(d) > 0
        roots = np.where(ok, roots - np.polyval(c, roots) / np.where(ok, d, 1), roots)
    return roots


def _require_elastic(m: MaterialRecord):
    if not m.has_elastic:
        raise SolverError(f"material {m.name!r} has no cubic elastic constants")
    return m.c11, m.c12, m.c44, m.density


def velocity_cubic_110(m: MaterialRecord) -> np.ndarray:
    """Coefficients (X^3 ... X^0) of the [110] velocity cubic in X = rho c^2 / c11."""
    c11, c12, c44, _ = _require_elastic(m)
    c11p = (c11 + c12 + 2 * c44) / 2
    r = c11 / c44
    a0 = (c11 * c11p - c12 ** 2) / c11 ** 2
    b0 = c11p / c11
    return np.array([1 - r, 1 + 2 * r * a0 - b0, -2 * a0 - r * a0 ** 2, a0 ** 2])


def cubic_residual(m: MaterialRecord, X: float) -> float:
    """Relative residual of the cubic written in its factored form."""
    c11, c12, c44, _ = _require_elastic(m)
    c11p = (c11 + c12 + 2 * c44) / 2
    a0 = (c11 * c11p - c12 ** 2) / c11 ** 2
    lhs = (1 - (c11 / c44) * X) * (a0 - X) ** 2
    rhs = X ** 2 * (c11p / c11 - X)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def _real_cubic_roots(m: MaterialRecord) -> np.ndarray:
    roots = poly_roots(velocity_cubic_110(m))
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = np.sort(roots.real[np.abs(roots.imag) < 1e-9 * scale])
    return real[real > 0]


def velocity_branches_110(m: MaterialRecord) -> list[float]:
    """All positive real roots of the velocity cubic as phase velocities (ascending)."""
    X = _real_cubic_roots(m)
    c11, _, _, rho = _require_elastic(m)
    if X.size == 0:
        raise SolverError(f"no positive real root of the velocity cubic for {m.name!r}")
    return [math.sqrt(x * c11 / rho) for x in X]


def _secular_q2(m: MaterialRecord, X: float) -> np.ndarray:
    c11, c12, c44, _ = _require_elastic(m)
    c11p = (c11 + c12 + 2 * c44) / 2
    pc2 = X * c11
    a = c44 * c11
    b = -(c44 * (c44 - pc2) + c11 * (c11p - pc2) - (c12 + c44) ** 2)
    c = (c11p - pc2) * (c44 - pc2)
    return poly_roots([a, b, c])


def secular_residual(m: MaterialRecord, X: float, q: complex) -> float:
    c11, c12, c44, _ = _require_elastic(m)
    c11p = (c11 + c12 + 2 * c44) / 2
    pc2 = X * c11
    t1 = (c11p - pc2 - c44 * q * q) * (c44 - pc2 - c11 * q * q)
    t2 = (c12 + c44) ** 2 * q * q
    return abs(t1 + t2) / max(abs(t1), abs(t2), 1e-300)


def _gamma(m: MaterialRecord, X: float, q: complex) -> complex:
    c11, c12, c44, _ = _require_elastic(m)
    return q * (c12 + c44) / (c44 - c11 * q * q - X * c11)


def _phase(gamma: complex, q: complex) -> float:
    den = gamma - q
    if abs(den) < 1e-14 * max(1.0, abs(q)):
        raise SolverError("degenerate amplitude ratio (gamma == q)")
    e = -(np.conj(gamma) - np.conj(q)) / den
    return float((-np.angle(e) / 2) % math.pi)


def _decaying_root(m: MaterialRecord, X: float) -> Optional[complex]:
    q = np.sqrt(_secular_q2(m, X).astype(complex))
    q = np.where(q.real < 0, -q, q)
    q = q[q.real > ROOT_TOL]
    if q.size == 0:
        return None
    # conjugate pair: represent by the Im q >= 0 member
    q = q[np.argsort(-q.imag)]
    return complex(q[0])


def solve_110(m: MaterialRecord) -> RayleighSolution:
    """Rayleigh mode for [110] propagation on the (001) face."""
    c11 = _require_elastic(m)[0]
    for X in _real_cubic_roots(m):
        q = _decaying_root(m, X)
        if q is None or abs(q.imag) < ROOT_TOL:
            continue
        g = _gamma(m, X, q)
        return RayleighSolution(
            v_s=math.sqrt(X * c11 / m.density), X=float(X), q=q, gamma=g,
            phi=_phase(g, q), material_name=m.name,
        )
    raise SolverError(f"no branch with decaying roots (Re q > 0) for {m.name!r}")


def phase_residual(sol: RayleighSolution) -> float:
    g, q = sol.gamma, sol.q
    return abs(np.exp(-2j * sol.phi) + (np.conj(g) - np.conj(q)) / (g - q))


def boundary_matrix_110(m: MaterialRecord, sol: RayleighSolution) -> np.ndarray:
    """Stress-free conditions for the two partial waves (q, gamma) and their conjugates."""
    a = m.c11 / m.c12
    q, g = sol.q, sol.gamma
    qs, gs = np.conj(q), np.conj(g)
    return np.array([[g - q, gs - qs], [1 + a * q * g, 1 + a * qs * gs]])


def boundary_det_110(m: MaterialRecord, sol: RayleighSolution) -> float:
    """Column-normalised |det B| for the [110] solution."""
    B = boundary_matrix_110(m, sol)
    B = B / np.linalg.norm(B, axis=0)
    return float(abs(np.linalg.det(B)))


def profile_110(sol: RayleighSolution, kz):
    """Depth envelopes (chi, zeta) of u_x' and u_z, with U = 1."""
    kz = np.asarray(kz, dtype=float)
    w = np.exp(-sol.q * kz - 1j * sol.phi)
    return 2 * w.real, 2 * (sol.gamma * w).real


def displacement_110(sol: RayleighSolution, kz, kx=0.0, t_phase=0.0):
    """(u_x', u_z) at depth kz and in-plane phase kx - t_phase (units of U)."""
    chi, zeta = profile_110(sol, kz)
    arg = np.asarray(kx) - t_phase
    return chi * np.cos(arg), zeta * np.sin(arg)


def surface_ratio(sol: RayleighSolution) -> float:
    """|u_z / u_x'| amplitude ratio at the surface."""
    chi, zeta = profile_110(sol, 0.0)
    return float(abs(zeta / chi))


# ---------------------------------------------------------- general direction

def _m_coeffs(m: MaterialRecord, theta: float, c: float):
    """M(q) = M0 + q M1 + q^2 M2 acting on (U, V, iW)."""
    c11, c12, c44, rho = _require_elastic(m)
    l, n = math.cos(theta), math.sin(theta)
    s = c12 + c44
    pc2 = rho * c * c
    M0 = np.array([
        [c11 * l * l + c44 * n * n - pc2, l * n * s, 0.0],
        [l * n * s, c11 * n * n + c44 * l * l - pc2, 0.0],
        [0.0, 0.0, -c44 + pc2],
    ], dtype=complex)
    M1 = np.array([[0, 0, l * s], [0, 0, n * s], [l * s, n * s, 0]], dtype=complex)
    M2 = np.diag([-c44, -c44, c11]).astype(complex)
    return M0, M1, M2


def _sextic_roots(M0, M1, M2) -> np.ndarray:
    """Roots of det(M0 + q M1 + q^2 M2) through the companion linearisation."""
    z, eye = np.zeros((3, 3)), np.eye(3)
    A = np.block([[z, eye], [-M0, -M1]])
    B = np.block([[eye, z], [z, M2]])
    return linalg.eig(A, B, right=False)


def _partial_waves(m: MaterialRecord, theta: float, c: float):
    M0, M1, M2 = _m_coeffs(m, theta, c)
    q_all = _sextic_roots(M0, M1, M2)
    q_all = q_all[np.isfinite(q_all)]
    keep = q_all[q_all.real > ROOT_TOL]
    keep = keep[np.argsort(-keep.real)][:3]
    scale = float(np.max(np.abs(q_all))) if q_all.size else 1.0
    roots, vecs, used = [], [], np.zeros(keep.size, bool)
    for i, q in enumerate(keep):
        if used[i]:
            continue
        cluster = [j for j in range(keep.size) if not used[j] and abs(keep[j] - q) < CLUSTER_TOL * max(scale, 1.0)]
        for j in cluster:
            used[j] = True
        qm = complex(np.mean(keep[cluster]))
        M = M0 + qm * M1 + qm * qm * M2
        _, _, vh = np.linalg.svd(M)
        for k in range(len(cluster)):
            roots.append(qm)
            vecs.append(vh[-1 - k].conj())
    return roots, vecs


def _boundary_general(m: MaterialRecord, theta: float, roots, vecs) -> np.ndarray:
    l, n = math.cos(theta), math.sin(theta)
    a = m.c11 / m.c12
    cols = []
    for q, (xi, eta, zeta) in zip(roots, vecs):
        cols.append([l * zeta - q * xi, n * zeta - q * eta, l * xi + n * eta + a * q * zeta])
    return np.array(cols, dtype=complex).T


def boundary_residual(m: MaterialRecord, theta: float, c: float):
    """Smallest singular value of the column-normalised boundary matrix.

    For three partial waves this vanishes exactly where det B does.  It also
    covers directions where a decoupled partial wave does not decay and only
    two roots are kept.
    """
    roots, vecs = _partial_waves(m, theta, c)
    if not roots:
        return np.inf, roots, vecs, None
    B = _boundary_general(m, theta, roots, vecs)
    norms = np.linalg.norm(B, axis=0)
    if np.any(norms == 0):
        return np.inf, roots, vecs, None
    _, s, vh = np.linalg.svd(B / norms)
    return float(s[-1]), roots, vecs, vh[-1].conj() / norms


def solve_general(m: MaterialRecord, theta: float, c_window=None, n_grid: int = 2000,
                  tol: float = 1e-4, rtol: float = 1e-6) -> GeneralModeSolution:
    """Scan c for a zero of the boundary residual at in-plane angle theta.

    theta is measured from [100]; theta = pi/4 is [110].  The default window
    is [0.5, 1.0] times the bulk shear velocity sqrt(c44/rho).
    """
    if not 0 <= theta <= math.pi / 2 + 1e-12:
        raise ValueError("theta must lie in [0, pi/2]")
    vt = math.sqrt(_require_elastic(m)[2] / m.density)
    lo, hi = c_window if c_window is not None else (0.5 * vt, 1.0 * vt)
    grid = np.linspace(lo, hi, n_grid)
    f = lambda c: boundary_residual(m, theta, c)[0]
    vals = np.array([f(c) for c in grid])
    interior = [i for i in range(1, n_grid - 1) if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]]
    best = None
    for i in sorted(interior, key=lambda i: vals[i]):
        res = minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                              tol=rtol)
        c, val = float(res.x), float(res.fun)
        if best is None or val < best[1]:
            best = (c, val)
        if val < tol:
            break
    if best is None or best[1] >= tol:
        found = f"{best[1]:.3g}" if best else "none"
        raise SolverError(f"no surface mode for theta={theta:.4f} in window [{lo:.1f}, {hi:.1f}] m/s "
                          f"(best residual {found})")
    c, val = best
    _, roots, vecs, K = boundary_residual(m, theta, c)
    return GeneralModeSolution(theta=theta, c=c, roots=[complex(r) for r in roots],
                               amplitude_vectors=[tuple(complex(x) for x in v) for v in vecs],
                               K=tuple(complex(x) for x in K), residual=val)


# -------------------------------------------------------------- piezoelectric

def piezo_profile(m: MaterialRecord, sol: RayleighSolution, k: float, U: float = 1.0) -> PiezoFieldProfile:
    """Perturbative piezoelectric potential accompanying a [110] Rayleigh wave."""
    if not m.e14:
        raise NotPiezoelectricError(f"material {m.name!r} has e14 = 0")
    eps = m.eps_rel[0] * EPS0
    q, g, phi = sol.q, sol.gamma, sol.phi
    A1 = (g - 2 * q) / (q * q - 1)
    xi = float(-np.angle(A1))
    rot = np.exp(-1j * phi)
    A3 = -2 / (eps + EPS0) * (eps * math.cos(phi) + eps * (A1 * q * rot).real + EPS0 * (A1 * rot).real)
    return PiezoFieldProfile(A1=complex(A1), A3=float(A3), alpha=q.real, beta=q.imag, xi=xi,
                             phi=phi, k=k, phi0_scale=m.e14 / eps * U)


def vacuum_decay(k: float, d: float) -> float:
    if d < 0:
        raise ValueError("distance d must be >= 0")
    return math.exp(-k * d)
