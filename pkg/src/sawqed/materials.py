"""Material constants catalog.

Records are held in SI units.  The JSON catalog format (and the built-in
table below) uses 10^10 N/m^2 for the elastic constants, which is how these
numbers are usually tabulated; the loader converts on the way in and
:func:`serialize` converts back.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence

from .errors import CatalogError, NotFoundError

ELASTIC_UNIT = 1e10  # N/m^2 per file unit
DEFAULT_QM_F = 1e5   # Q_m * f[GHz]


@dataclass(frozen=True)
class MaterialRecord:
    name: str
    density: float
    c11: Optional[float] = None
    c12: Optional[float] = None
    c44: Optional[float] = None
    e14: Optional[float] = None
    eps_rel: Optional[tuple[float, float]] = None
    e_range: Optional[tuple[float, float]] = None
    h15: Optional[float] = None
    shear_velocity: Optional[float] = None
    saw_velocity: Optional[float] = None
    mirror_C1: Optional[float] = None
    mirror_C2: Optional[float] = None
    bulk_Cb: Optional[float] = None
    qm_f_product: float = DEFAULT_QM_F

    @property
    def has_elastic(self) -> bool:
        return None not in (self.c11, self.c12, self.c44)

    @property
    def estimate_only(self) -> bool:
        """True for records that only support shear-velocity estimates."""
        return not self.has_elastic and self.saw_velocity is None

    @property
    def piezo_bounds(self) -> Optional[tuple[float, float]]:
        """(min, max) piezoelectric coefficient in C/m^2, or None."""
        if self.e_range is not None:
            return self.e_range
        if self.e14:
            return (self.e14, self.e14)
        return None

    @property
    def is_piezoelectric(self) -> bool:
        return self.piezo_bounds is not None

    def validate(self) -> None:
        validate(self)


_FIELD_NAMES = tuple(f.name for f in fields(MaterialRecord))
_ELASTIC = ("c11", "c12", "c44")
_PAIRS = ("eps_rel", "e_range")


def validate(rec: MaterialRecord) -> None:
    """Raise CatalogError naming the offending field if an invariant fails."""
    def bad(field, why):
        raise CatalogError(f"material {rec.name!r}: field {field!r} {why}")

    if not isinstance(rec.name, str) or not rec.name:
        bad("name", "must be a non-empty string")
    if not (rec.density > 0):
        bad("density", f"must be > 0 (got {rec.density})")
    present = [getattr(rec, f) is not None for f in _ELASTIC]
    if any(present) and not all(present):
        bad("c11", "c11, c12 and c44 must be given together")
    if rec.has_elastic:
        if not rec.c44 > 0:
            bad("c44", f"must be > 0 (got {rec.c44})")
        if not rec.c11 > abs(rec.c12):
            bad("c11", "must exceed |c12| (elastic stability)")
    if rec.eps_rel is not None:
        lo, hi = rec.eps_rel
        if lo < 1 or hi < lo:
            bad("eps_rel", f"needs 1 <= min <= max (got {rec.eps_rel})")
    if rec.e_range is not None:
        lo, hi = rec.e_range
        if lo < 0 or hi < lo:
            bad("e_range", f"needs 0 <= min <= max (got {rec.e_range})")
    if rec.e14 is not None and rec.e14 < 0:
        bad("e14", "must be >= 0")
    if rec.h15 is not None and rec.h15 < 0:
        bad("h15", "must be >= 0")
    for f in ("shear_velocity", "saw_velocity", "bulk_Cb", "qm_f_product"):
        v = getattr(rec, f)
        if v is not None and not v > 0:
            bad(f, "must be > 0")
    if rec.is_piezoelectric and rec.eps_rel is None:
        bad("eps_rel", "is required for a piezoelectric record")


def _pair(value, field, name):
    if isinstance(value, (int, float)):
        return (float(value), float(value))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (float(value[0]), float(value[1]))
    raise CatalogError(f"material {name!r}: field {field!r} must be a number or [min, max]")


def from_dict(d: dict) -> MaterialRecord:
    """Build a record from a catalog-file dict (file units)."""
    if not isinstance(d, dict):
        raise CatalogError("each catalog entry must be a JSON object")
    name = d.get("name", "<unnamed>")
    unknown = sorted(set(d) - set(_FIELD_NAMES))
    if unknown:
        raise CatalogError(f"material {name!r}: unknown field(s) {', '.join(unknown)}")
    if "name" not in d or "density" not in d:
        raise CatalogError(f"material {name!r}: 'name' and 'density' are required")
    kw = {}
    for key, value in d.items():
        if value is None:
            continue
        if key in _ELASTIC:
            kw[key] = float(value) * ELASTIC_UNIT
        elif key in _PAIRS:
            kw[key] = _pair(value, key, name)
        elif key == "name":
            kw[key] = value
        else:
            try:
                kw[key] = float(value)
            except (TypeError, ValueError):
                raise CatalogError(f"material {name!r}: field {key!r} must be numeric") from None
    rec = MaterialRecord(**kw)
    validate(rec)
    return rec


def to_dict(rec: MaterialRecord) -> dict:
    out = {}
    for f in _FIELD_NAMES:
        v = getattr(rec, f)
        if v is None:
            continue
        if f in _ELASTIC:
            v = v / ELASTIC_UNIT
        elif f in _PAIRS:
            v = list(v)
        out[f] = v
    return out


# Built-in table, file units.  Provenance notes for values that are not
# printed alongside the others live in the project's decision notes.
_BUILTIN = [
    dict(name="GaAs", c11=12.26, c12=5.71, c44=6.00, density=5307.0,
         e14=0.157, eps_rel=10.9),
    dict(name="Al0.3Ga0.7As", c11=12.38, c12=5.74, c44=5.95, density=4850.0,
         e14=0.145, eps_rel=12.05),
    dict(name="diamond", c11=107.9, c12=12.4, c44=57.8, density=3515.0,
         e14=0.0, eps_rel=5.7),
    # Y-Z cut; e_range spans the smallest and largest non-zero e_ij.
    dict(name="LiNbO3", density=4700.0, saw_velocity=3488.0,
         e_range=[0.2, 3.7], eps_rel=[29.0, 44.0],
         mirror_C1=0.67, mirror_C2=42.0, bulk_Cb=8.7),
    # ST cut
    dict(name="Quartz", density=2200.0, saw_velocity=3158.0,
         e_range=[0.0406, 0.171], eps_rel=[4.52, 4.68], bulk_Cb=10.0),
    dict(name="Terfenol-D", density=9250.0, h15=167.0, shear_velocity=1190.0),
    dict(name="CoFe2O4", density=5290.0, h15=550.0, shear_velocity=3020.0),
]


def builtin_catalog() -> list[MaterialRecord]:
    return [from_dict(d) for d in _BUILTIN]


def _line_context(text: str, lineno: int) -> str:
    lines = text.splitlines()
    if 1 <= lineno <= len(lines):
        return lines[lineno - 1].strip()
    return ""


def parse_catalog(text: str, source: str = "<string>") -> list[MaterialRecord]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        ctx = _line_context(text, exc.lineno)
        raise CatalogError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg} near: {ctx!r}"
        ) from None
    if not isinstance(data, list):
        raise CatalogError(f"{source}: top level must be a JSON array of records")
    return [from_dict(d) for d in data]


def merge(base: Iterable[MaterialRecord], extra: Iterable[MaterialRecord]) -> list[MaterialRecord]:
    """User records shadow base records with the same name; order is kept."""
    extra = list(extra)
    names = {r.name for r in extra}
    return [r for r in base if r.name not in names] + extra


def load_catalog(path: str | os.PathLike, include_builtin: bool = True) -> list[MaterialRecord]:
    """Load a JSON catalog file and merge it over the built-in records."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc.strerror}") from None
    user = parse_catalog(text, source=str(path))
    return merge(builtin_catalog(), user) if include_builtin else user


def serialize(catalog: Sequence[MaterialRecord]) -> str:
    return json.dumps([to_dict(r) for r in catalog], indent=2, ensure_ascii=False)


def get(catalog: Sequence[MaterialRecord], name: str) -> MaterialRecord:
    for rec in catalog:
        if rec.name == name:
            return rec
    available = ", ".join(r.name for r in catalog)
    raise NotFoundError(f"unknown material {name!r}; available: {available}")


def default_catalog() -> list[MaterialRecord]:
    """Built-ins, merged with $SAWQED_CATALOG when that variable is set."""
    path = os.environ.get("SAWQED_CATALOG")
    return load_catalog(path) if path else builtin_catalog()


def permittivity(rec: MaterialRecord) -> tuple[float, float]:
    """Absolute permittivity bounds (min, max) in F/m."""
    from .units import EPS0
    if rec.eps_rel is None:
        raise CatalogError(f"material {rec.name!r} has no permittivity")
    return (rec.eps_rel[0] * EPS0, rec.eps_rel[1] * EPS0)


def bulk_shear_velocity(rec: MaterialRecord) -> float:
    if rec.c44 is not None:
        return math.sqrt(rec.c44 / rec.density)
    if rec.shear_velocity is not None:
        return rec.shear_velocity
    raise CatalogError(f"material {rec.name!r} has neither c44 nor shear_velocity")
