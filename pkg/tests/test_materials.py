import json

import pytest

from sawqed import materials
from sawqed.errors import CatalogError, NotFoundError


def test_builtin_gaas(gaas):
    assert gaas.c11 == pytest.approx(12.26e10)
    assert gaas.e14 == 0.157
    assert gaas.density == 5307


def test_diamond_not_piezoelectric(diamond):
    assert diamond.e14 == 0
    assert not diamond.is_piezoelectric


def test_linbo3_mirror_coefficients(linbo3):
    assert (linbo3.mirror_C1, linbo3.mirror_C2, linbo3.bulk_Cb) == (0.67, 42, 8.7)


def test_quartz_has_surface_velocity(catalog):
    q = materials.get(catalog, "Quartz")
    assert q.saw_velocity == 3158


def test_lookup_is_case_sensitive(catalog):
    assert materials.get(catalog, "GaAs").name == "GaAs"
    with pytest.raises(NotFoundError):
        materials.get(catalog, "gaas")


def test_load_appends_record(tmp_path):
    p = tmp_path / "cat.json"
    p.write_text(json.dumps([{"name": "X", "density": 1000, "shear_velocity": 2000}]))
    cat = materials.load_catalog(p)
    assert len(cat) == len(materials.builtin_catalog()) + 1
    assert materials.get(cat, "X").shear_velocity == 2000


def test_negative_density_names_field(tmp_path):
    p = tmp_path / "cat.json"
    p.write_text(json.dumps([{"name": "X", "density": -1}]))
    with pytest.raises(CatalogError, match="density"):
        materials.load_catalog(p)


def test_user_record_shadows_builtin(tmp_path):
    p = tmp_path / "cat.json"
    p.write_text(json.dumps([{"name": "GaAs", "density": 5307, "c11": 12.26, "c12": 5.71,
                              "c44": 6.0, "e14": 0.2, "eps_rel": 10.9}]))
    cat = materials.load_catalog(p)
    assert materials.get(cat, "GaAs").e14 == 0.2
    assert sum(r.name == "GaAs" for r in cat) == 1


def test_malformed_json_reports_location(tmp_path):
    p = tmp_path / "cat.json"
    p.write_text('[{"name": "X",\n "density": }]')
    with pytest.raises(CatalogError, match=r":2:"):
        materials.load_catalog(p)


def test_unknown_field_rejected():
    with pytest.raises(CatalogError, match="unknown field"):
        materials.from_dict({"name": "X", "density": 1.0, "colour": "red"})


def test_partial_elastic_rejected():
    with pytest.raises(CatalogError, match="c11"):
        materials.from_dict({"name": "X", "density": 1.0, "c11": 1.0})


def test_piezo_needs_permittivity():
    with pytest.raises(CatalogError, match="eps_rel"):
        materials.from_dict({"name": "X", "density": 1.0, "e14": 0.1})


def test_env_catalog(tmp_path, monkeypatch):
    p = tmp_path / "cat.json"
    p.write_text(json.dumps([{"name": "Y", "density": 2.0, "saw_velocity": 100}]))
    monkeypatch.setenv("SAWQED_CATALOG", str(p))
    assert materials.get(materials.default_catalog(), "Y").density == 2.0


def test_serialize_round_trip(catalog):
    assert materials.parse_catalog(materials.serialize(catalog)) == catalog


def test_bulk_shear_velocity(gaas, catalog):
    assert materials.bulk_shear_velocity(gaas) == pytest.approx((6.0e10 / 5307) ** 0.5)
    assert materials.bulk_shear_velocity(materials.get(catalog, "Terfenol-D")) == 1190
