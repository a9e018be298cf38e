import pytest

from faultres import build_and_validate, parse_config, parse_netlist, unroll
from faultres.fixtures import fixture_text

# Golden truth table of the 4-bit S-box, input value 0..15 (a msb), output wxyz.
SBOX = [
    "0110", "0101", "1100", "1010", "0001", "1110", "0111", "1001",
    "1011", "0000", "0011", "1101", "1000", "1111", "0100", "0010",
]

# Faulty tables for a single fault on gate s7 / gate z (all 16 inputs).
#
# Two cells are corrected misprints of the published table, re-derived by hand
# and confirmed by the table's own internal consistency:
#   - (s7, bf) at input 1010 is 1011, not 0011: an s7 bit-flip always flips
#     output w (w = s1 ^ s7), and the (s7, r) row itself shows 1011 there
#     (s7 = 1 at 1010, so reset and bit-flip must agree).
#   - (z, r) at input 1100 is 1000 (= golden): gate z is already 0 at 1100,
#     so a reset changes nothing, and z's fanout cone {x, z} cannot touch w.
SBOX_FAULTY = {
    ("s7", "s"): ["1110", "1101", "0100", "0010", "0001", "0110", "1111", "1001",
                  "1011", "1000", "0011", "0101", "0000", "0111", "1100", "1010"],
    ("s7", "r"): ["0110", "0101", "1100", "1010", "1001", "1110", "0111", "0001",
                  "0011", "0000", "1011", "1101", "1000", "1111", "0100", "0010"],
    ("s7", "bf"): ["1110", "1101", "0100", "0010", "1001", "0110", "1111", "0001",
                   "0011", "1000", "1011", "0101", "0000", "0111", "1100", "1010"],
    ("z", "s"): ["0011", "0101", "1101", "1011", "0001", "1111", "0111", "1001",
                 "1011", "0101", "0011", "1101", "1001", "1111", "0001", "0111"],
    ("z", "r"): ["0110", "0000", "1100", "1010", "0000", "1110", "0010", "1100",
                 "1110", "0000", "0010", "1100", "1000", "1110", "0100", "0010"],
    ("z", "bf"): ["0011", "0000", "1101", "1011", "0000", "1111", "0010", "1100",
                  "1110", "0101", "0010", "1100", "1001", "1110", "0001", "0111"],
}


def input_bits(value):
    return tuple((value >> (3 - i)) & 1 for i in range(4))


@pytest.fixture(scope="session")
def rect_parity_doc():
    return parse_netlist(fixture_text("rect_parity.nl"))


@pytest.fixture(scope="session")
def rect_parity(rect_parity_doc):
    return build_and_validate(rect_parity_doc)


@pytest.fixture(scope="session")
def rect_parity_unrolled(rect_parity):
    return unroll(rect_parity, 1)


@pytest.fixture(scope="session")
def rect_revised_doc():
    return parse_netlist(fixture_text("rect_revised.nl"))


@pytest.fixture(scope="session")
def rect_revised(rect_revised_doc):
    return build_and_validate(rect_revised_doc)


@pytest.fixture(scope="session")
def zeta_1_1_all_c(rect_parity_doc):
    return parse_config(fixture_text("zeta_1_1_all_c.json"), rect_parity_doc)


@pytest.fixture(scope="session")
def zeta_1_1_all_c_parity(rect_revised_doc):
    return parse_config(fixture_text("zeta_1_1_all_c_parity.json"), rect_revised_doc)
