"""Lindblad dynamics of one or two qubit-cavity nodes.

Density matrices are dense arrays on  qubit (x) Fock [(x) qubit (x) Fock];
node 1 comes first.  Qubit levels are |0>, |1> (and |2> for leakage), with
S^z = (|1><1| - |0><0|)/2 and S^- = |0><1|.

The generator is assembled once as sparse superoperators,

    L(t) = L0 + sum_k c_k(t) L_k ,

acting on row-major vec(rho), so that time-dependent couplings and
per-run detunings only rescale precomputed pieces.  Rates and times share
whatever unit the caller uses (e.g. kappa_gd = 1, or micro-eV with hbar = 1).

Two decay conventions appear and are kept explicit:
  single node:  kappa D[a],  kappa = kappa_gd + kappa_bd
  cascaded:     2 kappa_gd D[a1 + a2] + 2 kappa_bd sum_i D[a_i]
                with the coherent term i kappa_gd (a1^+ a2 - a2^+ a1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.integrate import solve_ivp

from .couplings import dqd_spectrum, p_success
from .errors import IntegrationError

log = logging.getLogger(__name__)

MAX_DIM = 4096
VARIANTS = ("JC", "FullDQD", "Longitudinal", "DrivenJC")


# --------------------------------------------------------------- spaces

@dataclass(frozen=True)
class HilbertSpec:
    node_count: int = 1
    qubit_dim: int = 2
    fock_cutoff: int = 2

    def __post_init__(self):
        if self.node_count not in (1, 2):
            raise ValueError("node_count must be 1 or 2")
        if self.qubit_dim not in (2, 3):
            raise ValueError("qubit_dim must be 2 or 3")
        if self.fock_cutoff < 1:
            raise ValueError("fock_cutoff must be >= 1")
        if self.dim > MAX_DIM:
            raise ValueError(f"Hilbert space dimension {self.dim} exceeds {MAX_DIM}")

    @property
    def dims(self) -> tuple:
        return (self.qubit_dim, self.fock_cutoff + 1) * self.node_count

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


class Operators:
    """Embedded single-site operators for a HilbertSpec."""

    def __init__(self, space: HilbertSpec):
        self.space = space
        q, f = space.qubit_dim, space.fock_cutoff + 1
        self._sm = np.zeros((q, q))
        self._sm[0, 1] = 1.0
        self._sz = np.zeros((q, q))
        self._sz[0, 0], self._sz[1, 1] = -0.5, 0.5
        self._a = np.diag(np.sqrt(np.arange(1, f)), 1)

    def _embed(self, op: np.ndarray, site: int) -> np.ndarray:
        out = np.ones((1, 1))
        for j, d in enumerate(self.space.dims):
            out = np.kron(out, op if j == site else np.eye(d))
        return out

    def sm(self, node: int) -> np.ndarray:
        return self._embed(self._sm, 2 * node)

    def sz(self, node: int) -> np.ndarray:
        return self._embed(self._sz, 2 * node)

    def proj(self, node: int, level: int) -> np.ndarray:
        p = np.zeros((self.space.qubit_dim,) * 2)
        p[level, level] = 1.0
        return self._embed(p, 2 * node)

    def qubit_op(self, node: int, op: np.ndarray) -> np.ndarray:
        return self._embed(op, 2 * node)

    def a(self, node: int) -> np.ndarray:
        return self._embed(self._a, 2 * node + 1)

    def n(self, node: int) -> np.ndarray:
        a = self.a(node)
        return a.T @ a

    def exchange(self, node: int) -> np.ndarray:
        """S^+ a + S^- a^+ on one node."""
        x = self.sm(node).T @ self.a(node)
        return x + x.T


def basis_state(space: HilbertSpec, levels: Sequence[int]) -> np.ndarray:
    """Product basis ket from (qubit, fock[, qubit, fock]) indices."""
    psi = np.ones(1)
    for d, l in zip(space.dims, levels):
        e = np.zeros(d)
        e[l] = 1.0
        psi = np.kron(psi, e)
    return psi.astype(complex)


def product_state(space: HilbertSpec, qubits: Sequence[np.ndarray]) -> np.ndarray:
    """Qubit states on each node, cavities in vacuum."""
    psi = np.ones(1, dtype=complex)
    for qs in qubits:
        qv = np.zeros(space.qubit_dim, dtype=complex)
        qv[: len(qs)] = qs
        vac = np.zeros(space.fock_cutoff + 1)
        vac[0] = 1.0
        psi = np.kron(np.kron(psi, qv), vac)
    return psi


def dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------- specs

@dataclass(frozen=True)
class HamiltonianSpec:
    variant: str = "JC"
    g: float = 0.0
    delta: tuple = (0.0, 0.0)
    t_c: float = 0.0
    epsilon: float = 0.0
    Delta: float = 0.0
    coupling_scale: float = 0.0  # g0 = eta_geo e phi0 for FullDQD / Longitudinal
    omega_c: Optional[float] = None  # FullDQD: defaults to the qubit splitting
    drive: Optional[tuple] = None    # DrivenJC: (Xi, omega_IDT - omega_c)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


@dataclass(frozen=True)
class NoiseSpec:
    kappa_gd: float = 0.0
    kappa_bd: float = 0.0
    gamma_deph: float = 0.0
    sigma_nuc: float = 0.0
    seed: int = 0
    deph_op: str = "sz"  # "sz": D[S^z];  "proj": D[|1><1|]  (identical rates)

    def __post_init__(self):
        for name in ("kappa_gd", "kappa_bd", "gamma_deph", "sigma_nuc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.deph_op not in ("sz", "proj"):
            raise ValueError("deph_op must be 'sz' or 'proj'")

    @property
    def eps_ratio(self) -> float:
        return self.kappa_bd / self.kappa_gd if self.kappa_gd else math.inf


# -------------------------------------------------------------- pulses

@dataclass(frozen=True)
class PulseSpec:
    """Piecewise-linear coupling g(t) on a sample grid."""

    kind: str
    amplitude: float
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in ("constant", "symmetric_wavepacket", "samples"):
            raise ValueError("unknown pulse kind")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("pulse sample times must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("pulse samples must be >= 0")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __call__(self, t):
        return np.interp(t, self.times, self.values, left=self.values[0], right=self.values[-1])

    def time_reversed(self) -> "PulseSpec":
        """g(-t) on the mirrored grid; samples are the exact reverse."""
        return PulseSpec(self.kind, self.amplitude, -self.times[::-1].copy(), self.values[::-1].copy())

    @classmethod
    def from_samples(cls, times, values) -> "PulseSpec":
        v = np.asarray(values, dtype=float)
        return cls("samples", float(v.max()) if v.size else 0.0, np.asarray(times, dtype=float), v)

    @classmethod
    def constant(cls, g: float, t0: float, t1: float) -> "PulseSpec":
        return cls("constant", g, np.array([t0, t1]), np.array([g, g]))


def _grid(kappa: float, horizon: float, dt: Optional[float]) -> np.ndarray:
    dt = 0.01 / kappa if dt is None else dt
    n = int(round(horizon / dt))
    return np.arange(-n, n + 1) * dt


def optimal_pulse(kappa_gd: float, horizon: Optional[float] = None, dt: Optional[float] = None,
                  cap: float = 10.0, emitted_cut: float = 0.999) -> tuple[PulseSpec, PulseSpec]:
    """(g1, g2) emitting/absorbing a time-symmetric sech(kappa t / 2) wavepacket.

    g1 is obtained by inverting the single-excitation emission equations for
    the target output; g2(t) = g1(-t).  Near full emission the inversion is
    singular, so after the emitted fraction passes ``emitted_cut`` the last
    regular value is held.  Values are capped at ``cap * kappa_gd``.
    """
    K = kappa_gd
    horizon = 10.0 / K if horizon is None else horizon
    if horizon < 10.0 / K - 1e-12:
        raise ValueError("horizon must be >= 10 / kappa_gd")
    t = _grid(K, horizon, dt)
    s = K * t / 2
    out = math.sqrt(K / 4) / np.cosh(s)                 # output amplitude, int out^2 = 1
    x = out / math.sqrt(2 * K)                          # cavity amplitude (output = sqrt(2K) x)
    xdot = -x * np.tanh(s) * K / 2
    emitted = (1 + np.tanh(s)) / 2
    c2 = 1 - x * x - emitted                            # qubit excitation left
    g = np.empty_like(t)
    ok = emitted <= emitted_cut
    g[ok] = (xdot[ok] + K * x[ok]) / np.sqrt(c2[ok])
    last = np.flatnonzero(ok)[-1]
    g[~ok] = g[last]
    capped = g > cap * K
    if capped.any():
        log.info("optimal pulse capped at %g kappa_gd on %d samples", cap, int(capped.sum()))
        g = np.minimum(g, cap * K)
    g1 = PulseSpec("symmetric_wavepacket", float(g.max()), t, g)
    return g1, g1.time_reversed()


def constant_tail_pulse(kappa_gd: float, amplitude: Optional[float] = None,
                        horizon: Optional[float] = None,
                        dt: Optional[float] = None) -> tuple[PulseSpec, PulseSpec]:
    """(g1, g2) with g1(t >= 0) = amplitude and a rising edge for t < 0.

    For t >= 0 the node decays under the constant coupling; the t < 0 edge is
    chosen so the emitted packet is time-symmetric, by mirroring the t > 0
    solution.  The mirrored edge dips slightly below zero; those samples are
    clipped to 0 (couplings are kept non-negative) and the clipped area is
    logged.
    """
    K = kappa_gd
    G = K if amplitude is None else amplitude
    horizon = 10.0 / K if horizon is None else horizon
    t = _grid(K, horizon, dt)
    tp = t[t >= 0]
    # continuity of g at t = 0 fixes the cavity amplitude: x0 = G c0 / K
    c0 = math.sqrt(0.5 / (1 + (G / K) ** 2))
    x0 = G * c0 / K
    M = np.array([[0.0, -G], [G, -K]])
    w, V = np.linalg.eig(M)
    coef = np.linalg.solve(V, [c0, x0])
    traj = (V @ (coef[:, None] * np.exp(np.outer(w, tp)))).real
    c, x = traj
    denom = 1 - c * c - 2 * x * x
    g_neg = np.where(denom > 1e-12, (2 * K * x - G * c) / np.sqrt(np.clip(denom, 1e-300, None)), 0.0)
    g_neg = g_neg[::-1]  # values at -tp, ascending time
    g = np.concatenate([g_neg[:-1], np.full(tp.size, G)])
    neg = g < 0
    if neg.any():
        log.info("constant-tail pulse: clipped negative lobe (area %.3g / kappa)",
                 float(-g[neg].sum() * (t[1] - t[0]) * K))
        g = np.where(neg, 0.0, g)
    g1 = PulseSpec("constant", G, t, g)
    return g1, g1.time_reversed()


# --------------------------------------------------------- superoperators

def _spre(A):
    return sparse.kron(sparse.csr_matrix(A), sparse.identity(A.shape[0]), format="csr")


def _spost(A):
    return sparse.kron(sparse.identity(A.shape[0]), sparse.csr_matrix(A.T), format="csr")


def comm_super(H: np.ndarray):
    """-i [H, .] on row-major vec(rho)."""
    return -1j * (_spre(H) - _spost(H))


def dissipator(L: np.ndarray):
    """D[L] = L . L^+ - (L^+L . + . L^+L)/2 on row-major vec(rho)."""
    LdL = L.conj().T @ L
    return (sparse.kron(sparse.csr_matrix(L), sparse.csr_matrix(L.conj()), format="csr")
            - 0.5 * _spre(LdL) - 0.5 * _spost(LdL))


@dataclass
class Liouvillian:
    """L(t) = L0 + sum_k coeffs[k](t) * parts[k]."""

    space: HilbertSpec
    L0: sparse.csr_matrix
    parts: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)
    hamiltonian: Optional[Callable] = None  # t -> H(t), for checks

    @property
    def time_dependent(self) -> bool:
        return bool(self.parts)

    def matrix(self, t: float = 0.0):
        M = self.L0.copy()
        for P, c in zip(self.parts, self.coeffs):
            M = M + c(t) * P
        return M

    def with_detunings(self, deltas: Sequence[float], ops: "Operators") -> "Liouvillian":
        """Copy with extra static delta_i S_i^z terms."""
        L0 = self.L0
        for i, d in enumerate(deltas):
            if d:
                L0 = L0 + comm_super(d * ops.sz(i))
        return Liouvillian(self.space, L0.tocsr(), self.parts, self.coeffs, self.hamiltonian)

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        out = self.L0 @ y
        for P, c in zip(self.parts, self.coeffs):
            v = c(t)
            if v:
                out += v * (P @ y)
        return out


def jump_operators(noise: NoiseSpec, space: HilbertSpec, ops: Operators) -> list[np.ndarray]:
    Ls = []
    if space.node_count == 2:
        if noise.kappa_gd:
            Ls.append(math.sqrt(2 * noise.kappa_gd) * (ops.a(0) + ops.a(1)))
        if noise.kappa_bd:
            Ls += [math.sqrt(2 * noise.kappa_bd) * ops.a(i) for i in range(2)]
    else:
        kappa = noise.kappa_gd + noise.kappa_bd
        if kappa:
            Ls.append(math.sqrt(kappa) * ops.a(0))
    if noise.gamma_deph:
        for i in range(space.node_count):
            Z = ops.sz(i) if noise.deph_op == "sz" else ops.proj(i, 1)
            Ls.append(math.sqrt(noise.gamma_deph) * Z)
    return Ls


def _dqd_blocks(h: HamiltonianSpec, space: HilbertSpec, ops: Operators):
    """Static H of the full three-level double dot in its eigenbasis, lab frame."""
    spec = dqd_spectrum(h.t_c, h.epsilon, h.Delta)
    E = np.array(spec.energies)
    E = E - (E[0] + E[1]) / 2
    omega_c = spec.omega0 if h.omega_c is None else h.omega_c
    kap = np.array(spec.kappa)
    P = np.outer(kap, kap)  # |S02><S02| in the eigenbasis
    a = ops.a(0)
    H = (ops.qubit_op(0, np.diag(E)) + omega_c * (a.T @ a)
         + h.coupling_scale * ops.qubit_op(0, P) @ (a + a.T))
    return H


def build_liouvillian(h: HamiltonianSpec, noise: NoiseSpec, space: HilbertSpec,
                      pulses: Optional[Sequence[PulseSpec]] = None) -> Liouvillian:
    """Assemble the generator for the requested model.

    For two nodes the cascaded coupling is included automatically; ``pulses``
    then supplies g_1(t), g_2(t) (otherwise the constant ``h.g`` is used).
    """
    ops = Operators(space)
    nodes = range(space.node_count)
    if len(h.delta) < space.node_count:
        raise ValueError("delta must give one detuning per node")
    if pulses is not None and len(pulses) != space.node_count:
        raise ValueError("need one pulse per node")
    if h.variant == "FullDQD" and (space.node_count != 1 or space.qubit_dim != 3):
        raise ValueError("FullDQD needs one node with qubit_dim = 3")

    H0 = np.zeros((space.dim, space.dim), dtype=complex)
    for i in nodes:
        H0 += h.delta[i] * ops.sz(i)
    if space.node_count == 2 and noise.kappa_gd:
        a1, a2 = ops.a(0), ops.a(1)
        H0 += 1j * noise.kappa_gd * (a1.T @ a2 - a2.T @ a1)

    parts, coeffs, hterms = [], [], []
    if h.variant == "FullDQD":
        H0 += _dqd_blocks(h, space, ops)
    elif h.variant == "Longitudinal":
        for i in nodes:
            a = ops.a(i)
            H0 += h.g * ops.proj(i, 1) @ (a + a.T)
    else:
        for i in nodes:
            X = ops.exchange(i)
            if pulses is None:
                H0 += h.g * X
            else:
                parts.append(comm_super(X))
                coeffs.append(pulses[i])
                hterms.append((X, pulses[i]))
        if h.variant == "DrivenJC":
            if h.drive is None:
                raise ValueError("DrivenJC needs drive = (Xi, detuning)")
            xi, det = h.drive
            for i in nodes:
                a = ops.a(i)
                # (Xi/2)(a e^{i det t} + h.c.) after the RWA in the cavity frame
                Xc = (a + a.T) * (xi / 2)
                Yc = 1j * (a.T - a) * (xi / 2)
                parts += [comm_super(Xc), comm_super(Yc)]
                coeffs += [lambda t, d=det: math.cos(d * t), lambda t, d=det: math.sin(d * t)]
                hterms += [(Xc, lambda t, d=det: math.cos(d * t)),
                           (Yc, lambda t, d=det: math.sin(d * t))]

    L0 = comm_super(H0)
    for L in jump_operators(noise, space, ops):
        L0 = L0 + dissipator(L)

    def hamiltonian(t: float) -> np.ndarray:
        H = H0.copy()
        for X, c in hterms:
            H = H + c(t) * X
        return H

    return Liouvillian(space, L0.tocsr(), parts, coeffs, hamiltonian)


# ---------------------------------------------------------- integration

@dataclass
class Trajectory:
    t: np.ndarray
    observables: dict
    rho_final: np.ndarray
    checkpoints: list  # (t, rho) pairs
    nfev: int = 0


def default_observables(space: HilbertSpec) -> dict:
    ops = Operators(space)
    obs = {}
    for i in range(space.node_count):
        obs[f"S{i + 1}z"] = ops.sz(i)
        obs[f"n{i + 1}"] = ops.n(i)
        obs[f"p{i + 1}"] = ops.proj(i, 1)
    if space.qubit_dim == 3:
        obs["leakage"] = sum(ops.proj(i, 2) for i in range(space.node_count))
    return obs


def _expect(op: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(np.sum(op.T * rho)))


def integrate(rho0: np.ndarray, t_grid: Sequence[float], rhs: Liouvillian, tol: float = 1e-8,
              observables: Optional[dict] = None, n_checkpoints: int = 10) -> Trajectory:
    """Adaptive RK45 integration of vec(rho); observables sampled on t_grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    n = rho0.shape[0]
    obs = default_observables(rhs.space) if observables is None else observables
    sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), np.asarray(rho0, dtype=complex).ravel(),
                    method="RK45", t_eval=t_grid, rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else t_grid[0]:.4g}: "
                               f"{sol.message}")
    rhos = sol.y.T.reshape(-1, n, n)
    values = {k: np.array([_expect(op, r) for r in rhos]) for k, op in obs.items()}
    idx = np.unique(np.linspace(0, len(t_grid) - 1, n_checkpoints).round().astype(int))
    return Trajectory(t=sol.t, observables=values, rho_final=rhos[-1],
                      checkpoints=[(sol.t[i], rhos[i]) for i in idx], nfev=sol.nfev)


def propagate_static(rho0: np.ndarray, t_grid: Sequence[float], L: Liouvillian,
                     observables: Optional[dict] = None, n_checkpoints: int = 10) -> Trajectory:
    """Exact propagation with expm(L dt) for a time-independent generator."""
    if L.time_dependent:
        raise ValueError("propagate_static needs a time-independent generator")
    t_grid = np.asarray(t_grid, dtype=float)
    dts = np.diff(t_grid)
    if not np.allclose(dts, dts[0], rtol=1e-12, atol=0):
        raise ValueError("propagate_static needs a uniform time grid")
    n = rho0.shape[0]
    P = linalg.expm(L.L0.toarray() * dts[0])
    y = np.asarray(rho0, dtype=complex).ravel()
    rhos = [y]
    for _ in dts:
        y = P @ y
        rhos.append(y)
    rhos = np.array(rhos).reshape(-1, n, n)
    obs = default_observables(L.space) if observables is None else observables
    values = {k: np.array([_expect(op, r) for r in rhos]) for k, op in obs.items()}
    idx = np.unique(np.linspace(0, len(t_grid) - 1, n_checkpoints).round().astype(int))
    return Trajectory(t=t_grid, observables=values, rho_final=rhos[-1],
                      checkpoints=[(t_grid[i], rhos[i]) for i in idx])


def density_checks(traj: Trajectory) -> dict:
    """Worst trace drift, Hermiticity defect and smallest eigenvalue over checkpoints."""
    trace = max(abs(np.trace(r) - 1) for _, r in traj.checkpoints)
    herm = max(np.max(np.abs(r - r.conj().T)) for _, r in traj.checkpoints)
    mineig = min(np.linalg.eigvalsh((r + r.conj().T) / 2).min() for _, r in traj.checkpoints)
    return {"trace_drift": float(trace), "hermiticity": float(herm), "min_eig": float(mineig)}


# ------------------------------------------------------- single node

def full_vs_jc_single_node(t_c: float = 10.0, epsilon: float = -7.0, Delta: float = 1.0,
                           coupling_scale: float = 5.2e-2, kappa: Optional[float] = None,
                           fock_cutoff: int = 3, n_steps: int = 600,
                           t_final: Optional[float] = None) -> dict:
    """Three-level double dot (no RWA) against its Jaynes-Cummings reduction.

    Energies in micro-eV with hbar = 1.  Qubit starts in |1>, cavity in
    vacuum, on resonance; kappa defaults to g_QD / 2.
    """
    spec = dqd_spectrum(t_c, epsilon, Delta)
    g = spec.kappa[0] * spec.kappa[1] * coupling_scale
    kappa = g / 2 if kappa is None else kappa
    t_final = 40.0 / g if t_final is None else t_final
    t = np.linspace(0.0, t_final, n_steps + 1)
    noise = NoiseSpec(kappa_gd=kappa)

    full_space = HilbertSpec(1, 3, fock_cutoff)
    Lf = build_liouvillian(HamiltonianSpec("FullDQD", t_c=t_c, epsilon=epsilon, Delta=Delta,
                                           coupling_scale=coupling_scale), noise, full_space)
    tf = propagate_static(dm(basis_state(full_space, (1, 0))), t, Lf)

    jc_space = HilbertSpec(1, 2, fock_cutoff)
    Lj = build_liouvillian(HamiltonianSpec("JC", g=g), noise, jc_space)
    tj = propagate_static(dm(basis_state(jc_space, (1, 0))), t, Lj)

    return {
        "t": t, "g_QD": g, "kappa": kappa, "omega0": spec.omega0,
        "Sz_full": tf.observables["S1z"], "Sz_jc": tj.observables["S1z"],
        "n_full": tf.observables["n1"], "n_jc": tj.observables["n1"],
        "leakage": tf.observables["leakage"],
        "max_leakage": float(np.max(tf.observables["leakage"])),
        "sz_supnorm": float(np.max(np.abs(tf.observables["S1z"] - tj.observables["S1z"]))),
        "checks": [density_checks(tf), density_checks(tj)],
    }


# ------------------------------------------------------------ transfer

@dataclass
class TransferModel:
    """Cascaded two-node generator reused across runs with different detunings."""

    pulses: tuple
    noise: NoiseSpec
    fock_cutoff: int = 2
    tol: float = 1e-8

    def __post_init__(self):
        self.space = HilbertSpec(2, 2, self.fock_cutoff)
        self.ops = Operators(self.space)
        self.base = build_liouvillian(HamiltonianSpec("JC"), self.noise, self.space,
                                      pulses=self.pulses)
        self._Z = [comm_super(self.ops.sz(i)) for i in range(2)]
        g1 = self.pulses[0]
        self.t0, self.t1 = float(g1.times[0]), float(g1.times[-1])

    def generator(self, delta_pair=(0.0, 0.0)) -> Liouvillian:
        L0 = self.base.L0
        for d, Z in zip(delta_pair, self._Z):
            if d:
                L0 = L0 + d * Z
        return Liouvillian(self.space, L0.tocsr(), self.base.parts, self.base.coeffs,
                           self.base.hamiltonian)

    def initial(self, psi_qubit) -> np.ndarray:
        return dm(product_state(self.space, [np.asarray(psi_qubit, complex), np.array([1, 0])]))

    def target(self, psi_qubit) -> np.ndarray:
        return product_state(self.space, [np.array([1, 0]), np.asarray(psi_qubit, complex)])

    def run(self, delta_pair=(0.0, 0.0), psi_qubit=None, t_grid=None) -> tuple[float, Trajectory]:
        psi_qubit = PSI_MINUS if psi_qubit is None else np.asarray(psi_qubit, complex)
        psi_qubit = psi_qubit / np.linalg.norm(psi_qubit)
        t_grid = np.linspace(self.t0, self.t1, 201) if t_grid is None else t_grid
        tgt = self.target(psi_qubit)
        obs = default_observables(self.space)
        obs["fidelity"] = np.outer(tgt, tgt.conj())
        traj = integrate(self.initial(psi_qubit), t_grid, self.generator(delta_pair), self.tol, obs)
        F = float(np.real(tgt.conj() @ traj.rho_final @ tgt))
        return F, traj


PSI_MINUS = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2)


def transfer_run(pulses, noise: NoiseSpec, delta_pair=(0.0, 0.0), psi0=None,
                 fock_cutoff: int = 2, tol: float = 1e-8) -> float:
    """Fidelity <psi_tar| rho(t_f) |psi_tar> for fixed detunings (delta_1, delta_2).

    psi0 is the qubit state (alpha, beta) of node 1; node 2 and both cavities
    start in their ground states.
    """
    return TransferModel(tuple(pulses), noise, fock_cutoff, tol).run(delta_pair, psi0)[0]


def run_detunings(seed: int, run_index: int, sigma: float) -> tuple[float, float]:
    """Quasi-static (delta_1, delta_2) for one run; depends only on (seed, run_index)."""
    rng = np.random.default_rng([seed, run_index])
    z = rng.standard_normal(2)
    return float(sigma * z[0]), float(sigma * z[1])


@dataclass
class MonteCarloResult:
    F_mean: float
    F_stderr: float
    per_run: list
    sigma_nuc: float
    eps: float
    n_runs: int
    seed: int

    def summary(self) -> dict:
        return {"sigma_nuc": self.sigma_nuc, "eps": self.eps, "n_runs": self.n_runs,
                "seed": self.seed, "F_mean": self.F_mean, "F_stderr": self.F_stderr,
                "per_run": list(self.per_run)}


def mc_transfer(noise: NoiseSpec, n_runs: int, seed: Optional[int] = None, psi0=None,
                pulses=None, fock_cutoff: int = 2, tol: float = 1e-8,
                run_indices: Optional[Sequence[int]] = None) -> MonteCarloResult:
    """Average transfer fidelity over Gaussian quasi-static detunings.

    Each run draws its detunings from a generator seeded by (seed, run index),
    so results do not depend on the order in which runs are evaluated.
    """
    seed = noise.seed if seed is None else seed
    if pulses is None:
        pulses = optimal_pulse(noise.kappa_gd)
    model = TransferModel(tuple(pulses), noise, fock_cutoff, tol)
    if noise.sigma_nuc == 0:
        F = model.run((0.0, 0.0), psi0)[0]
        per = [F] * n_runs
    else:
        idx = range(n_runs) if run_indices is None else run_indices
        found = {i: model.run(run_detunings(seed, i, noise.sigma_nuc), psi0)[0] for i in idx}
        per = [found[i] for i in sorted(found)]
    n = len(per)
    mean = math.fsum(per) / n
    stderr = math.sqrt(math.fsum((f - mean) ** 2 for f in per) / (n - 1) / n) if n > 1 else 0.0
    return MonteCarloResult(mean, stderr, per, noise.sigma_nuc, noise.eps_ratio, n, seed)


def markovian_transfer(pulses, gamma_deph: float, eps_ratio: float, psi0=None,
                       kappa_gd: float = 1.0, fock_cutoff: int = 2, tol: float = 1e-8) -> float:
    """Transfer fidelity with Markovian dephasing Gamma D[S_i^z] on both qubits."""
    noise = NoiseSpec(kappa_gd=kappa_gd, kappa_bd=eps_ratio * kappa_gd, gamma_deph=gamma_deph)
    return transfer_run(pulses, noise, (0.0, 0.0), psi0, fock_cutoff, tol)


# --------------------------------------------------------------- echo

def _jc_ops(fock_cutoff: int):
    space = HilbertSpec(1, 2, fock_cutoff)
    ops = Operators(space)
    sp_a = ops.sm(0).T @ ops.a(0)
    return ops, sp_a + sp_a.T, ops.sm(0) @ ops.a(0), ops.sz(0)


def echo_sequence(tau: float, delta: float, g: float, fock_cutoff: int = 4):
    """(U4 U3 U2 U1, H_eff) for the four-interval echo with three pi pulses."""
    ops, X, Y, Z = _jc_ops(fock_cutoff)
    Xp = Y + Y.T  # S^- a + S^+ a^+ (S^+- swapped by an x pi pulse)
    H = [delta * Z + g * X, -delta * Z + g * Xp, -delta * Z - g * Xp, delta * Z + g * X]
    U = np.eye(X.shape[0], dtype=complex)
    for Hi in H:
        U = linalg.expm(-1j * tau * Hi) @ U
    return U, (g / 2) * X


def hahn_echo_check(tau: float, delta: float, g: float, fock_cutoff: int = 4) -> float:
    """Spectral-norm distance between the echo sequence and exp(-i 4 tau H_eff)."""
    if tau * max(abs(delta), abs(g)) >= 0.1:
        raise ValueError("need tau * max(|delta|, g) < 0.1")
    U, Heff = echo_sequence(tau, delta, g, fock_cutoff)
    return float(np.linalg.norm(U - linalg.expm(-4j * tau * Heff), 2))


def echo_effective_coupling(tau: float, delta: float, g: float, fock_cutoff: int = 4) -> float:
    """Coupling of the stroboscopic (Floquet) Hamiltonian of repeated echo cycles."""
    U, _ = echo_sequence(tau, delta, g, fock_cutoff)
    Hf = 1j * linalg.logm(U) / (4 * tau)
    space = HilbertSpec(1, 2, fock_cutoff)
    up = basis_state(space, (1, 0))
    down = basis_state(space, (0, 1))
    return float(abs(down.conj() @ Hf @ up))


# ------------------------------------------------- adiabatic elimination

def adiabatic_elimination_check(g: float, kappa: float, gamma_deph: float = 0.0,
                                eps_ratio: float = 0.0, n_points: int = 400,
                                fock_cutoff: int = 2) -> dict:
    """Full JC + cavity decay against the bad-cavity rate model.

    kappa is the total cavity rate (kappa D[a]); eps_ratio splits it into
    kappa_gd = kappa / (1 + eps) and kappa_bd = eps kappa_gd.  Dephasing is
    Gamma D[|1><1|].
    """
    if kappa < 20 * g:
        import warnings
        warnings.warn(f"kappa/g = {kappa / g:.3g} < 20: outside the bad-cavity regime",
                      RuntimeWarning, stacklevel=2)
    k_gd = kappa / (1 + eps_ratio)
    k_bd = kappa - k_gd
    kt = 4 * g * g / kappa
    kt_gd = 4 * g * g * k_gd / kappa ** 2
    gamma_eff = kt + gamma_deph
    t = np.linspace(0.0, 6.0 / gamma_eff, n_points + 1)

    space = HilbertSpec(1, 2, fock_cutoff)
    noise = NoiseSpec(kappa_gd=k_gd, kappa_bd=k_bd, gamma_deph=gamma_deph, deph_op="proj")
    L = build_liouvillian(HamiltonianSpec("JC", g=g), noise, space)
    ops = Operators(space)
    up, dn = basis_state(space, (1, 0)), basis_state(space, (0, 0))
    coh = np.outer(dn, up.conj())  # <1|rho|0> read as Tr[rho |0><1|]
    obs = {"p1": ops.proj(0, 1), "re10": (coh + coh.T) / 2, "im10": (coh - coh.T) / 2j}
    traj_p = propagate_static(dm(up), t, L, obs)
    traj_c = propagate_static(dm((up + dn) / math.sqrt(2)), t, L, obs)

    p1_rate = np.exp(-kt * t)
    rho10_rate = 0.5 * np.exp(-gamma_eff * t / 2)
    rho10_full = np.abs(traj_c.observables["re10"] + 1j * traj_c.observables["im10"])

    # first jump through the mirror: no-jump evolution of |1, 0>
    H = g * ops.exchange(0)
    Ls = jump_operators(noise, space, ops)
    Hnh = H - 0.5j * sum(Lk.conj().T @ Lk for Lk in Ls)
    n_op = ops.n(0)

    def f(_, y):
        psi = y[:-1]
        return np.concatenate([-1j * (Hnh @ psi), [k_gd * np.real(psi.conj() @ n_op @ psi)]])

    T = 40.0 / gamma_eff
    sol = solve_ivp(f, (0.0, T), np.concatenate([up, [0.0]]), method="DOP853",
                    rtol=1e-11, atol=1e-13)
    P_gd_jump = float(np.real(sol.y[-1, -1]))

    # rate-equation branching ratio
    def rates(_, y):
        return [-gamma_eff * y[0], kt_gd * y[0]]
    rs = solve_ivp(rates, (0.0, 60.0 / gamma_eff), [1.0, 0.0], method="DOP853",
                   rtol=1e-12, atol=1e-14)
    P_gd_rate = float(rs.y[1, -1])
    C = g * g / (kappa * gamma_deph) if gamma_deph > 0 else math.inf

    return {
        "t": t, "kappa_tilde": kt, "gamma_eff": gamma_eff,
        "p1_full": traj_p.observables["p1"], "p1_rate": p1_rate,
        "p1_supnorm": float(np.max(np.abs(traj_p.observables["p1"] - p1_rate))),
        "rho10_supnorm": float(np.max(np.abs(rho10_full - rho10_rate))),
        "P_gd_analytic": kt_gd / gamma_eff,
        "P_gd_jump": P_gd_jump,
        "P_gd_rate": P_gd_rate,
        "p_success": p_success(eps_ratio, C),
        "checks": [density_checks(traj_p), density_checks(traj_c)],
    }


def single_node_swap(g: float, alpha: complex, beta: complex, fock_cutoff: int = 2) -> float:
    """Fidelity of (alpha|0> + beta|1>)|0> -> |0>(alpha|0> - i beta|1>) at t = pi/(2g)."""
    space = HilbertSpec(1, 2, fock_cutoff)
    L = build_liouvillian(HamiltonianSpec("JC", g=g), NoiseSpec(), space)
    psi0 = alpha * basis_state(space, (0, 0)) + beta * basis_state(space, (1, 0))
    tgt = alpha * basis_state(space, (0, 0)) - 1j * beta * basis_state(space, (0, 1))
    traj = integrate(dm(psi0), [0.0, math.pi / (2 * g)], L, tol=1e-11)
    return float(np.real(tgt.conj() @ traj.rho_final @ tgt))


def trajectory_rows(traj: Trajectory) -> list[dict]:
    """Rows (t, S1z, S2z, n1, n2, fidelity, leakage) for CSV output."""
    o = traj.observables
    zeros = np.zeros_like(traj.t)
    return [{"t": float(traj.t[i]),
             "S1z": float(o.get("S1z", zeros)[i]), "S2z": float(o.get("S2z", zeros)[i]),
             "n1": float(o.get("n1", zeros)[i]), "n2": float(o.get("n2", zeros)[i]),
             "fidelity": float(o.get("fidelity", zeros)[i]),
             "leakage": float(o.get("leakage", zeros)[i])} for i in range(len(traj.t))]


TRAJECTORY_COLUMNS = ("t", "S1z", "S2z", "n1", "n2", "fidelity", "leakage")
