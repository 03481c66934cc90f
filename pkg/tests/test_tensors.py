import numpy as np
import pytest

from fabricflow import ParseError, Tensor, format_literal, parse_literal


def test_from_flat_and_roundtrip_i16():
    t = Tensor.from_flat("i16", (2, 3), [1, -2, 3, 4, -5, 6])
    assert t.array.dtype == np.int16
    text = format_literal(t)
    assert text.startswith("i16 2 3:")
    back = parse_literal(text)
    assert back.equals(t)


def test_f32_literal_roundtrips_exactly():
    values = [0.1, -1.5, 3.14159, 2.0**-24, 1e20]
    t = Tensor.from_flat("f32", (5,), values)
    back = parse_literal(format_literal(t))
    assert back.equals(t)


def test_i16_range_enforced():
    with pytest.raises(ValueError):
        Tensor.from_flat("i16", (1,), [40000])
    with pytest.raises(ValueError):
        Tensor.from_flat("i16", (1,), [-32769])
    # boundary values are fine
    t = Tensor.from_flat("i16", (2,), [32767, -32768])
    assert t.flat() == [32767, -32768]


def test_shape_must_be_positive_and_sized():
    with pytest.raises(ValueError):
        Tensor.from_flat("f32", (0, 2), [])
    with pytest.raises(ValueError):
        Tensor.from_flat("f32", (2,), [1.0])


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_literal("f32 2 2 1 2 3 4")  # missing colon
    with pytest.raises(ParseError):
        parse_literal("u8 2: 1 2")
    with pytest.raises(ParseError):
        parse_literal("i16 2: 1 x")
    with pytest.raises(ParseError):
        parse_literal("i16 2: 1")  # wrong count


def test_from_array_infers_dtype():
    t = Tensor.from_array(np.zeros((3, 1), dtype=np.float32))
    assert t.dtype == "f32" and t.shape == (3, 1)
    with pytest.raises(ValueError):
        Tensor.from_array(np.zeros(2, dtype=np.float64))
