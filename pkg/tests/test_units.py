import pytest

from sawqed.units import UEV, parse_quantity


@pytest.mark.parametrize("text,kind,value", [
    ("3GHz", "frequency", 3e9),
    ("2 MHz", "frequency", 2e6),
    ("50nm", "length", 50e-9),
    ("1.5µm", "length", 1.5e-6),
    ("1um2", "area", 1e-12),
    ("-7ueV", "energy", -7 * UEV),
    ("10ns", "time", 1e-8),
    ("4.2", "length", 4.2),
])
def test_parse(text, kind, value):
    assert parse_quantity(text, kind) == pytest.approx(value)


def test_bad_unit_lists_allowed():
    with pytest.raises(ValueError, match="allowed"):
        parse_quantity("3 furlongs", "length")


def test_garbage():
    with pytest.raises(ValueError):
        parse_quantity("abc", "frequency")
