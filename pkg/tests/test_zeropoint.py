import math

import numpy as np
import pytest
from scipy import constants as sc

from sawqed import materials, rayleigh, zeropoint
from sawqed.zeropoint import ModeGeometry

# (U0 fm, s0 1e-9, phi0 uV range, xi0 V/m range, B0 uT) at A = 1 um^2, k = 2 pi / um
TABLE_II = {
    "GaAs": (1.9, 11.7, (3.1, 3.1), (19.2, 19.2), None),
    "LiNbO3": (1.8, 11.3, (0.9, 25.8), (5.8, 162.2), None),
    "Quartz": (2.75, 17.3, (2.8, 12.0), (17.3, 75.4), None),
    "Terfenol-D": (2.2, 13.8, None, None, 2.3),
    "CoFe2O4": (1.8, 11.4, None, None, 6.3),
    "diamond": (1.17, 7.4, None, None, None),
}


@pytest.mark.parametrize("name", sorted(TABLE_II))
def test_table_ii_row(catalog, name):
    U0, s0, phi, xi, B0 = TABLE_II[name]
    z = zeropoint.zero_point_set(materials.get(catalog, name))
    assert z.U0 * 1e15 == pytest.approx(U0, rel=0.05)
    assert z.s0 * 1e9 == pytest.approx(s0, rel=0.05)
    if phi is None:
        assert z.phi0 is None
    else:
        assert [p * 1e6 for p in z.phi0] == pytest.approx(phi, rel=0.05)
        assert list(z.xi0) == pytest.approx(xi, rel=0.05)
    if B0 is None:
        assert z.B0 is None
    else:
        assert z.B0 * 1e6 == pytest.approx(B0, rel=0.05)


def test_piezomagnetic_rows_flagged(catalog):
    for name in ("Terfenol-D", "CoFe2O4"):
        assert zeropoint.zero_point_set(materials.get(catalog, name)).conservative
    assert not zeropoint.zero_point_set(materials.get(catalog, "GaAs")).conservative


def test_u0_simple_direct_formula(gaas):
    v = rayleigh.solve_110(gaas).v_s
    ref = math.sqrt(sc.hbar / (2 * 5307 * v * 1e-12))
    assert zeropoint.u0_simple(gaas, ModeGeometry()) == pytest.approx(ref, rel=1e-12)
    assert ref * 1e15 == pytest.approx(1.86, abs=0.01)


def test_area_scaling(gaas):
    g = ModeGeometry()
    assert zeropoint.u0_simple(gaas, g.scaled(4)) == pytest.approx(zeropoint.u0_simple(gaas, g) / 2)


def _delta_trapezoid(sol):
    kz = np.linspace(0, 60, 600001)
    chi, zeta = rayleigh.profile_110(sol, kz)
    return sol.alpha * np.trapezoid(chi ** 2 + zeta ** 2, kz) / 2


@pytest.mark.parametrize("name,factor,delta", [("GaAs", 0.64, 1.2), ("diamond", 1.17, 0.44)])
def test_normalization(catalog, name, factor, delta):
    m = materials.get(catalog, name)
    sol = rayleigh.solve_110(m)
    d = zeropoint.normalization_delta(sol)
    assert d == pytest.approx(_delta_trapezoid(sol), rel=1e-7)
    assert d == pytest.approx(delta, abs=0.05)
    assert math.sqrt(sol.alpha / d) == pytest.approx(factor, abs=0.02)
    U0, _ = zeropoint.u0_normalized(m, ModeGeometry(), sol)
    assert U0 == pytest.approx(math.sqrt(sol.alpha / d) * zeropoint.u0_simple(m, ModeGeometry()))


def test_normalized_amplitudes(gaas, diamond):
    assert zeropoint.u0_normalized(gaas, ModeGeometry())[0] * 1e15 == pytest.approx(1.2, abs=0.05)
    assert zeropoint.u0_normalized(diamond, ModeGeometry())[0] * 1e15 == pytest.approx(1.36, abs=0.05)


def test_energy_density_route():
    assert zeropoint.u0_energy_density(ModeGeometry()) * 1e15 == pytest.approx(1.05, rel=0.03)


def test_literature_form(gaas):
    val = zeropoint.u0_literature(gaas, ModeGeometry(), v_s=2878.0)
    assert val * 1e15 == pytest.approx(1.7, rel=0.03)


def test_large_area_order_of_magnitude(gaas):
    U0 = zeropoint.u0_simple(gaas, ModeGeometry(A=1e6 * 1e-12))
    assert 1e-18 < U0 < 3e-18  # about 2 am


def test_geometry_validation():
    with pytest.raises(ValueError):
        ModeGeometry(A=0)
    with pytest.raises(ValueError):
        ModeGeometry(A=1e-12, L_trans=1e-6, L_c=2e-6)
    g = ModeGeometry.from_lengths(1e-6, 2e-6)
    assert g.A == pytest.approx(2e-12)


def test_table_rows_complete(catalog):
    rows = zeropoint.table_rows(catalog)
    assert [r["material"] for r in rows] == [m.name for m in catalog]
    assert set(rows[0]) == set(zeropoint.TABLE_COLUMNS)
