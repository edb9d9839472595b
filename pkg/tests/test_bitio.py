import pytest
from hypothesis import given, strategies as st

from filmgrain.bitio import BitReader, BitWriter, BitstreamError


def test_fixed_width_known_bytes():
    w = BitWriter()
    w.write(0b101, 3)
    w.write(0, 1)
    w.write(0xF, 4)
    assert w.getvalue() == bytes([0b10101111])


def test_write_rejects_value_too_wide():
    w = BitWriter()
    with pytest.raises(ValueError):
        w.write(4, 2)
    with pytest.raises(ValueError):
        w.write(-1, 8)


def test_getvalue_requires_alignment():
    w = BitWriter()
    w.write(1, 3)
    with pytest.raises(ValueError):
        w.getvalue()
    w.align()
    # stop bit then zeros: 001 1 0000
    assert w.getvalue() == bytes([0b00110000])


def test_align_on_byte_boundary_adds_full_byte():
    w = BitWriter()
    w.write(0xAB, 8)
    w.align()
    assert w.getvalue() == bytes([0xAB, 0x80])


@given(st.lists(st.tuples(st.integers(0, 24), st.integers(min_value=0)), max_size=40))
def test_fixed_width_round_trip(fields):
    fields = [(width, value & ((1 << width) - 1)) for width, value in fields]
    w = BitWriter()
    for width, value in fields:
        w.write(value, width)
    w.align()
    r = BitReader(w.getvalue())
    for width, value in fields:
        assert r.read(width) == value
    r.check_trailing()


# first few exp-Golomb codewords, from the definition
_UE_CODES = {0: "1", 1: "010", 2: "011", 3: "00100", 4: "00101", 8: "0001001"}


@pytest.mark.parametrize("value,bits", sorted(_UE_CODES.items()))
def test_ue_known_codewords(value, bits):
    w = BitWriter()
    w.write_ue(value)
    assert w.bit_length == len(bits)
    w.align()
    got = "".join(f"{b:08b}" for b in w.getvalue())[: len(bits)]
    assert got == bits


@given(st.lists(st.integers(0, 2**32), max_size=50))
def test_ue_round_trip(values):
    w = BitWriter()
    for v in values:
        w.write_ue(v)
    w.align()
    r = BitReader(w.getvalue())
    assert [r.read_ue() for _ in values] == values
    r.check_trailing()


@given(st.lists(st.integers(-(2**31), 2**31), max_size=50))
def test_se_round_trip(values):
    w = BitWriter()
    for v in values:
        w.write_se(v)
    w.align()
    r = BitReader(w.getvalue())
    assert [r.read_se() for _ in values] == values
    r.check_trailing()


def test_se_mapping_order():
    # 0, 1, -1, 2, -2 ... is the standard signed exp-Golomb order
    for code, expect in enumerate([0, 1, -1, 2, -2, 3, -3]):
        w = BitWriter()
        w.write_ue(code)
        w.align()
        assert BitReader(w.getvalue()).read_se() == expect


def test_read_past_end_reports_offset():
    r = BitReader(bytes([0xFF]))
    r.read(6)
    with pytest.raises(BitstreamError) as exc:
        r.read(4)
    assert exc.value.bit_offset == 6


def test_ue_truncated_prefix():
    with pytest.raises(BitstreamError):
        BitReader(bytes([0x00])).read_ue()


def test_ue_prefix_regarded_as_corrupt_after_63_zeros():
    with pytest.raises(BitstreamError):
        BitReader(bytes(9)).read_ue()  # 72 zero bits


def test_check_trailing_rejects_missing_stop_bit():
    with pytest.raises(BitstreamError):
        BitReader(bytes([0x00])).check_trailing()


def test_check_trailing_rejects_data_after_stop_bit():
    r = BitReader(bytes([0b10000001]))
    with pytest.raises(BitstreamError):
        r.check_trailing()


def test_reader_positions():
    r = BitReader(bytes([0xAA, 0xAA]))
    assert r.bits_left == 16
    r.read(3)
    assert r.bit_position == 3
    assert r.bits_left == 13
