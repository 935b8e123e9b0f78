"""Physical constants and unit-suffixed quantity parsing."""

from __future__ import annotations

import re

from scipy import constants as _c

HBAR = _c.hbar
E_CHARGE = _c.e
EPS0 = _c.epsilon_0
K_B = _c.k
AMU = _c.atomic_mass
UEV = 1e-6 * _c.e  # one micro-electronvolt in J

MICRON = 1e-6
NM = 1e-9

_SCALE = {
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9},
    "area": {"m2": 1.0, "um2": 1e-12, "µm2": 1e-12, "μm2": 1e-12},
    "energy": {"j": 1.0, "ev": _c.e, "mev": 1e-3 * _c.e, "uev": UEV, "µev": UEV, "μev": UEV},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9},
    "wavenumber": {"1/m": 1.0, "1/um": 1e6, "1/µm": 1e6},
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(text: str | float, kind: str) -> float:
    """Parse ``"3GHz"``, ``"50 nm"``, ``"-7ueV"`` into SI.

    A bare number is taken to be in SI already.
    """
    if isinstance(text, (int, float)):
        return float(text)
    if kind not in _SCALE:
        raise ValueError(f"unknown quantity kind {kind!r}")
    m = _NUM.match(str(text))
    if not m:
        raise ValueError(f"cannot parse {kind} value {text!r}")
    value, suffix = float(m.group(1)), m.group(2).lower()
    if not suffix:
        return value
    try:
        return value * _SCALE[kind][suffix]
    except KeyError:
        allowed = ", ".join(sorted(_SCALE[kind]))
        raise ValueError(f"unknown {kind} unit {m.group(2)!r} (allowed: {allowed})") from None
