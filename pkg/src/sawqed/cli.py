"""Command-line front end.  Every subcommand writes CSV or JSON to --out or stdout."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import cavity, couplings, dynamics, materials, rayleigh, zeropoint
from .errors import InfeasibleDesignError, SawqedError
from .tables import rows_to_csv, to_json
from .units import MICRON, NM, UEV, parse_quantity

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _q(kind):
    def conv(text):
        try:
            return parse_quantity(text, kind)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    conv.__name__ = kind
    return conv


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _catalog(args):
    if args.catalog:
        return materials.load_catalog(args.catalog)
    return materials.default_catalog()


def _clean(obj):
    """JSON-safe copy: complex -> [re, im], numpy scalars -> float, inf -> None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# ----------------------------------------------------------- handlers

def cmd_materials(args):
    cat = _catalog(args)
    if args.action == "list":
        rows = [{"name": m.name, "density": m.density,
                 "elastic": m.has_elastic, "piezoelectric": m.is_piezoelectric,
                 "estimate_only": m.estimate_only} for m in cat]
        if args.format == "json":
            _emit(to_json(rows), args.out)
        else:
            _emit(rows_to_csv(rows, ("name", "density", "elastic", "piezoelectric",
                                     "estimate_only")), args.out)
    else:
        if not args.name:
            raise UsageError("materials show: a material name is required")
        _emit(to_json(materials.to_dict(materials.get(cat, args.name))), args.out)


def cmd_mode(args):
    m = materials.get(_catalog(args), args.material)
    if args.theta is not None:
        sol = rayleigh.solve_general(m, math.radians(args.theta))
        out = {"material": m.name, "theta_deg": args.theta, "v_s": sol.c,
               "roots": sol.roots, "residual": sol.residual}
    else:
        sol = rayleigh.solve_110(m)
        out = {"material": m.name, "direction": "[110]", "v_s": sol.v_s, "X": sol.X,
               "q": sol.q, "gamma": sol.gamma, "phi": sol.phi,
               "surface_ratio": rayleigh.surface_ratio(sol)}
        if args.profile_out:
            kz = np.linspace(0.0, args.depth, args.points)
            chi, zeta = rayleigh.profile_110(sol, kz)
            rows = [{"kz": float(a), "chi": float(b), "zeta": float(c)}
                    for a, b, c in zip(kz, chi, zeta)]
            if m.e14:
                prof = rayleigh.piezo_profile(m, sol, 2 * math.pi / MICRON)
                F = prof.F(kz)
                for r, f in zip(rows, F):
                    r["F"] = float(f)
            cols = ("kz", "chi", "zeta") + (("F",) if m.e14 else ())
            with open(args.profile_out, "w", encoding="utf-8", newline="") as fh:
                fh.write(rows_to_csv(rows, cols))
    _emit(to_json(_clean(out)), args.out)


def cmd_zeropoint(args):
    geom = zeropoint.ModeGeometry(A=args.area, k=args.k)
    rows = zeropoint.table_rows(_catalog(args), geom)
    if args.format == "json":
        _emit(to_json(_clean(rows)), args.out)
    else:
        _emit(rows_to_csv(rows, zeropoint.TABLE_COLUMNS), args.out)


def cmd_cavity(args):
    m = materials.get(_catalog(args), args.material)
    lam = zeropoint.surface_velocity(m)[0] / args.fc
    if args.action == "sweep":
        n = int(round((args.h_max - args.h_min) / args.h_step))
        grid = [round(args.h_min + i * args.h_step, 12) for i in range(n + 1)]
        rows = cavity.q_sweep(m, args.N, grid, args.D * lam, args.wp, args.fc, args.L_trans)
        onset = cavity.bulk_limit_onset(rows)
        logging.getLogger(__name__).info("bulk-limited from h/lambda = %s", onset)
        cols = cavity.SWEEP_COLUMNS + ("L_c", "kappa_gd", "kappa_bd")
        _emit(rows_to_csv(rows, cols), args.out)
    else:
        try:
            spec, b = cavity.design_search(m, args.fc, args.Q, args.ratio, D_over_lambda=args.D,
                                           w_over_p=args.wp, N_max=args.N_max,
                                           L_trans=args.L_trans)
        except InfeasibleDesignError as exc:
            raise SawqedError(f"{exc} (raise --N-max or relax --Q / --ratio)") from None
        out = {"N": spec.N, "h_over_lambda": spec.h_over_lambda, "w_over_p": spec.w_over_p,
               "material": m.name, **b.as_dict()}
        _emit(to_json(_clean(out)), args.out)


def cmd_couple(args):
    cat = _catalog(args)
    k = 2 * math.pi / args.wavelength
    geom = zeropoint.ModeGeometry(A=args.area, k=k)
    p = args.platform
    if p == "charge":
        zp = zeropoint.zero_point_set(materials.get(cat, args.material), geom)
        F = couplings.surface_factor(k, args.d, materials.get(cat, args.barrier))
        l = args.l if args.l is not None else args.wavelength / 2
        prm = couplings.ChargeQubitParams(args.epsilon / UEV, args.tc / UEV, l, args.d)
        g_ch, g_eff, omega = couplings.g_charge(prm, zp.phi0[0], k, F)
        out = {"g_ch": g_ch, "g_eff": g_eff, "Omega_ueV": omega, "phi0": zp.phi0[0], "F_kd": F}
    elif p == "spin":
        zp = zeropoint.zero_point_set(materials.get(cat, args.material), geom)
        F = couplings.surface_factor(k, args.d, materials.get(cat, args.barrier))
        l = args.l if args.l is not None else 250 * NM
        eg = args.eta_geo if args.eta_geo is not None else couplings.eta_geo(-l / 2, l / 2,
                                                                            args.wavelength)
        prm = couplings.SpinQubitParams(args.tc / UEV, args.epsilon / UEV, args.Delta / UEV,
                                        l, args.d, eg)
        spec = couplings.dqd_spectrum(prm.t_c, prm.epsilon, prm.Delta)
        out = {"g": couplings.g_spin(prm, zp.phi0[0], k, F, spec),
               "g_qnd": couplings.g_qnd(prm, zp.phi0[0], F),
               "kappa0_kappa1": couplings.kappa_product(spec),
               "charge_imbalance": couplings.charge_imbalance(spec),
               "omega0_ueV": spec.omega0,
               "domega0_depsilon": couplings.charge_noise_sensitivity(prm.t_c, prm.epsilon,
                                                                      prm.Delta),
               "eta_geo": eg, "phi0": zp.phi0[0], "F_kd": F}
    elif p == "ion":
        zp = zeropoint.zero_point_set(materials.get(cat, args.material), geom)
        prm = couplings.IonParams(omega_t=2 * math.pi * args.trap, d=args.ion_d)
        out = {"g": couplings.g_ion(prm, zp.phi0[1], k), "phi0": zp.phi0[1],
               "eta_LD": couplings.lamb_dicke(prm, args.wavelength),
               "T2": couplings.ion_T2(prm.d)}
    else:
        zp = zeropoint.zero_point_set(materials.get(cat, args.material), geom)
        if zp.B0 is None:
            raise SawqedError(f"material {args.material!r} has no piezomagnetic constant h15")
        out = {"g": couplings.g_nv(couplings.NVParams(), zp.B0), "B0": zp.B0,
               "conservative": zp.conservative}
    out.update(platform=p, units="g in s^-1")
    _emit(to_json(_clean(out)), args.out)


def cmd_coop(args):
    rows = couplings.table_one(_catalog(args))
    if args.format == "json":
        _emit(to_json(_clean(rows)), args.out)
    else:
        _emit(rows_to_csv(rows, couplings.TABLE_ONE_COLUMNS), args.out)


def _pulses(kind: str):
    if kind == "optimal":
        return dynamics.optimal_pulse(1.0)
    return dynamics.constant_tail_pulse(1.0)


def cmd_transfer(args):
    psi = np.array([1.0, -1.0]) / math.sqrt(2)
    if args.action == "run":
        pulses = _pulses(args.pulse)
        noise = dynamics.NoiseSpec(kappa_gd=1.0, kappa_bd=args.eps, gamma_deph=args.gamma,
                                   sigma_nuc=args.sigma, seed=args.seed)
        runs = args.runs if args.sigma > 0 else 1
        res = dynamics.mc_transfer(noise, runs, args.seed, psi, pulses, args.cutoff)
        out = res.summary()
        out.update(pulse=args.pulse, gamma_deph=args.gamma)
        if args.trajectory_out:
            model = dynamics.TransferModel(pulses, noise, args.cutoff)
            _, traj = model.run((0.0, 0.0), psi, np.linspace(model.t0, model.t1, args.points))
            with open(args.trajectory_out, "w", encoding="utf-8", newline="") as fh:
                fh.write(rows_to_csv(dynamics.trajectory_rows(traj), dynamics.TRAJECTORY_COLUMNS))
        _emit(to_json(_clean(out)), args.out)
    elif args.action == "sweep":
        pulses = _pulses(args.pulse)
        rows = []
        for s in args.sigmas:
            noise = dynamics.NoiseSpec(kappa_gd=1.0, kappa_bd=args.eps, sigma_nuc=s,
                                       seed=args.seed)
            res = dynamics.mc_transfer(noise, args.runs if s > 0 else 1, args.seed, psi, pulses,
                                       args.cutoff)
            rows.append({"sigma_nuc": s, "eps": args.eps, "F_mean": res.F_mean,
                         "F_stderr": res.F_stderr, "n_runs": res.n_runs})
        _emit(rows_to_csv(rows, ("sigma_nuc", "eps", "F_mean", "F_stderr", "n_runs")), args.out)
    else:
        r = dynamics.full_vs_jc_single_node()
        rows = [{"t_ueV_inv": float(r["t"][i]), "Sz_full": float(r["Sz_full"][i]),
                 "Sz_jc": float(r["Sz_jc"][i]), "n_full": float(r["n_full"][i]),
                 "n_jc": float(r["n_jc"][i]), "leakage": float(r["leakage"][i])}
                for i in range(len(r["t"]))]
        _emit(rows_to_csv(rows, tuple(rows[0])), args.out)


def run_validation() -> list[tuple[str, bool, str]]:
    """Invariant suite; returns (name, ok, detail) triples."""
    results = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))

    cat = materials.builtin_catalog()

    def roundtrip():
        back = materials.parse_catalog(materials.serialize(cat))
        return back == cat, f"{len(cat)} records"

    def area_scaling():
        m = materials.get(cat, "GaAs")
        a = zeropoint.u0_simple(m, zeropoint.ModeGeometry())
        b = zeropoint.u0_simple(m, zeropoint.ModeGeometry().scaled(4.0))
        return abs(a / b - 2) < 1e-12, f"ratio {a / b:.12f}"

    def general_vs_110():
        m = materials.get(cat, "GaAs")
        c = rayleigh.solve_general(m, math.pi / 4).c
        v = rayleigh.solve_110(m).v_s
        return abs(c / v - 1) < 1e-3, f"{c:.3f} vs {v:.3f}"

    def transfer_invariants():
        model = dynamics.TransferModel(dynamics.optimal_pulse(1.0),
                                       dynamics.NoiseSpec(kappa_gd=1.0, kappa_bd=0.05,
                                                          gamma_deph=0.03))
        _, traj = model.run()
        c = dynamics.density_checks(traj)
        ok = c["trace_drift"] < 1e-8 and c["hermiticity"] < 1e-10 and c["min_eig"] >= -1e-7
        return ok, ", ".join(f"{k}={v:.2g}" for k, v in c.items())

    def cutoff():
        p = dynamics.optimal_pulse(1.0)
        n = dynamics.NoiseSpec(kappa_gd=1.0, kappa_bd=0.1)
        a = dynamics.transfer_run(p, n, fock_cutoff=1, tol=1e-10)
        b = dynamics.transfer_run(p, n, fock_cutoff=2, tol=1e-10)
        return abs(a - b) < 1e-8, f"|dF| = {abs(a - b):.2g}"

    def echo():
        e1 = dynamics.hahn_echo_check(0.02, 1.0, 1.0)
        e2 = dynamics.hahn_echo_check(0.01, 1.0, 1.0)
        return 3.5 <= e1 / e2 <= 4.5, f"ratio {e1 / e2:.3f}"

    def rates():
        r = dynamics.adiabatic_elimination_check(1.0, 50.0, 0.05)
        ok = abs(r["P_gd_rate"] - r["p_success"]) < 1e-6 and r["p1_supnorm"] < 1e-2
        return ok, f"p1 sup {r['p1_supnorm']:.2g}, rate-vs-formula {abs(r['P_gd_rate'] - r['p_success']):.2g}"

    def mirror():
        lo = cavity.budget(cavity.MirrorSpec(100, 0.02), 0.0, 1e-6, 3e9).R_total
        hi = cavity.budget(cavity.MirrorSpec(101, 0.02), 0.0, 1e-6, 3e9).R_total
        return hi >= lo, f"R(100)={lo:.6f}, R(101)={hi:.6f}"

    check("catalog round-trip", roundtrip)
    check("zero-point A^-1/2 scaling", area_scaling)
    check("general-angle solver vs [110]", general_vs_110)
    check("mirror reflectivity non-decreasing in N", mirror)
    check("density-matrix invariants", transfer_invariants)
    check("Fock-cutoff independence", cutoff)
    check("echo O(tau^2) ratio", echo)
    check("adiabatic elimination and p_success", rates)
    return results


def cmd_validate(args):
    results = run_validation()
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in results]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_VALIDATION


# ------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sawqed", description="Surface-acoustic-wave quantum transducer toolkit.")
    p.add_argument("--catalog", help="JSON material catalog merged over the built-ins "
                   "(default: $SAWQED_CATALOG)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, fmt=False):
        sp.add_argument("--out", help="output file (default: stdout)")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("materials", help="material constants (inputs to Tables II and IV)",
                        description="List or show material records; these feed Tables II and IV.")
    sp.add_argument("action", choices=("list", "show"))
    sp.add_argument("name", nargs="?")
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_materials)

    sp = sub.add_parser("mode", help="Rayleigh mode solver (Table IV, Fig. 2 profiles)",
                        description="Solve the surface mode; regenerates Table IV and the "
                                    "depth profiles of Fig. 2.")
    sp.add_argument("action", choices=("solve",))
    sp.add_argument("--material", required=True)
    sp.add_argument("--theta", type=float, help="in-plane angle from [100] in degrees; "
                    "omit for the closed-form [110] solution")
    sp.add_argument("--profile-out", help="write the depth profile CSV here (Fig. 2)")
    sp.add_argument("--depth", type=float, default=6.0, help="maximum kz of the profile")
    sp.add_argument("--points", type=int, default=241)
    common(sp)
    sp.set_defaults(func=cmd_mode)

    sp = sub.add_parser("zeropoint", help="zero-point amplitudes (Table II)",
                        description="Regenerate Table II: U0, strain, potential, field and "
                                    "magnetic-field amplitudes of one phonon.")
    sp.add_argument("action", choices=("table",))
    sp.add_argument("--area", type=_q("area"), default=zeropoint.DEFAULT_AREA, help="e.g. 1um2")
    sp.add_argument("--k", type=_q("wavenumber"), default=zeropoint.DEFAULT_K,
                    help="wavenumber, e.g. 6.283/um")
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_zeropoint)

    sp = sub.add_parser("cavity", help="Bragg resonator Q budget (Table III, Fig. 3)",
                        description="Q sweep over groove depth (Fig. 3) or a design search "
                                    "against the Table III budget.")
    sp.add_argument("action", choices=("sweep", "design"))
    sp.add_argument("--material", default="LiNbO3")
    sp.add_argument("--fc", type=_q("frequency"), default=3e9, help="e.g. 3GHz")
    sp.add_argument("--N", type=int, default=300, help="grooves per mirror (sweep)")
    sp.add_argument("--D", type=float, default=5.25, help="mirror gap in wavelengths")
    sp.add_argument("--wp", type=float, default=0.5, help="groove width / period")
    sp.add_argument("--L-trans", dest="L_trans", type=_q("length"), default=1e-6)
    sp.add_argument("--h-min", type=float, default=0.0005)
    sp.add_argument("--h-max", type=float, default=0.1)
    sp.add_argument("--h-step", type=float, default=0.0005)
    sp.add_argument("--Q", type=float, default=1e3, help="target Q (design)")
    sp.add_argument("--ratio", type=float, default=20.0, help="minimum kappa_gd/kappa_bd (design)")
    sp.add_argument("--N-max", dest="N_max", type=int, default=1000)
    common(sp)
    sp.set_defaults(func=cmd_cavity)

    sp = sub.add_parser("couple", help="qubit-phonon couplings (Table I g column)",
                        description="Coupling strength for one platform; feeds the g column "
                                    "of Table I.  g is reported in s^-1.")
    sp.add_argument("platform", choices=("charge", "spin", "ion", "nv"))
    sp.add_argument("--material", help="host material (default per platform)")
    sp.add_argument("--barrier", default="Al0.3Ga0.7As", help="layer above the 2DEG")
    sp.add_argument("--wavelength", type=_q("length"), help="SAW wavelength, e.g. 1um")
    sp.add_argument("--fc", type=_q("frequency"),
                    help="SAW frequency; sets the wavelength from the host velocity when "
                         "--wavelength is not given")
    sp.add_argument("--area", type=_q("area"),
                    help="mode area (default 1 um^2; ion: 1 um x 40 wavelengths)")
    sp.add_argument("--d", type=_q("length"), default=50 * NM, help="2DEG depth")
    sp.add_argument("--l", type=_q("length"), help="dot separation")
    sp.add_argument("--tc", type=_q("energy"), default=5 * UEV, help="e.g. 5ueV")
    sp.add_argument("--epsilon", type=_q("energy"), default=-7 * UEV)
    sp.add_argument("--Delta", type=_q("energy"), default=1 * UEV)
    sp.add_argument("--eta-geo", dest="eta_geo", type=float)
    sp.add_argument("--trap", type=_q("frequency"), default=2e6, help="ion trap frequency")
    sp.add_argument("--ion-d", dest="ion_d", type=_q("length"), default=150 * MICRON)
    common(sp)
    sp.set_defaults(func=cmd_couple)

    sp = sub.add_parser("coop", help="cooperativities (Table I)",
                        description="Regenerate Table I with per-cell pass/fail flags.")
    sp.add_argument("action", choices=("table",))
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_coop)

    sp = sub.add_parser("transfer", help="state transfer (Figs. 4, 8, 10, 11)",
                        description="run: one transfer setting, Monte Carlo over quasi-static "
                                    "noise (Fig. 4) or Markovian dephasing (Figs. 10, 11); "
                                    "sweep: fidelity against sigma (Fig. 4(b)); "
                                    "fulljc: three-level dot against Jaynes-Cummings (Fig. 8). "
                                    "Rates are in units of kappa_gd.")
    sp.add_argument("action", choices=("run", "sweep", "fulljc"))
    sp.add_argument("--pulse", choices=("const", "optimal"), default="optimal")
    sp.add_argument("--eps", type=float, default=0.0, help="kappa_bd / kappa_gd")
    sp.add_argument("--sigma", type=float, default=0.0, help="sigma_nuc / kappa_gd")
    sp.add_argument("--sigmas", type=float, nargs="+", default=[0, 0.02, 0.04, 0.06, 0.08, 0.1])
    sp.add_argument("--gamma", type=float, default=0.0, help="Gamma_deph / kappa_gd")
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--cutoff", type=int, default=2, help="Fock cutoff")
    sp.add_argument("--trajectory-out", help="CSV of the delta = 0 trajectory")
    sp.add_argument("--points", type=int, default=201)
    common(sp)
    sp.set_defaults(func=cmd_transfer)

    sp = sub.add_parser("validate", help="run the invariant suite",
                        description="Run the invariant checks; exit status 2 if any fails.")
    common(sp)
    sp.set_defaults(func=cmd_validate)
    return p


_DEFAULT_MATERIAL = {"charge": "GaAs", "spin": "GaAs", "ion": "LiNbO3", "nv": "Terfenol-D"}
_DEFAULT_WAVELENGTH = {"charge": 1 * MICRON, "spin": 0.5 * MICRON, "nv": 1 * MICRON}
_DEFAULT_FC = {"ion": 2e6}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("sawqed: a subcommand is required (see --help)")
        if args.command == "couple":
            args.material = args.material or _DEFAULT_MATERIAL[args.platform]
            fc = args.fc or _DEFAULT_FC.get(args.platform)
            if args.wavelength is None and fc is not None:
                host = materials.get(_catalog(args), args.material)
                args.wavelength = zeropoint.surface_velocity(host)[0] / fc
            args.wavelength = args.wavelength or _DEFAULT_WAVELENGTH[args.platform]
            if args.area is None:
                args.area = (MICRON * 40 * args.wavelength if args.platform == "ion"
                             else zeropoint.DEFAULT_AREA)
        if args.command == "transfer" and (args.eps < 0 or args.sigma < 0 or args.gamma < 0
                                           or args.runs < 1):
            raise UsageError("transfer: --eps, --sigma, --gamma must be >= 0 and --runs >= 1")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        rc = args.func(args)
        return EXIT_OK if rc is None else rc
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SawqedError, ValueError, OSError) as exc:
        msg = str(exc.args[0]) if exc.args else type(exc).__name__
        print(f"error: {msg.splitlines()[0]}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
