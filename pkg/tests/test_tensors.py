import math
from unittest import TestCase

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from glassbox.errors import DTypeUnknown, MissingKey, ParseFailure, ShapeMismatch, UnknownTypeTag
from glassbox.tensors import (
    NDARRAY_LIST_KEY,
    DType,
    canonical_bytes,
    decode_scalar,
    decode_tensor,
    encode_scalar,
    encode_tensor,
    is_data_node,
    parse,
)
from tests.config import CONFIG

SINGULAR_BLOCK = {
    "pymiloed-ndarray-list": [1.618033988749895, 0.6180339887498948],
    "pymiloed-ndarray-dtype": "float64",
    "pymiloed-ndarray-shape": [2],
    "pymiloed-data-structure": "numpy.ndarray",
}

_DTYPES = st.sampled_from([np.dtype(np.float64), np.dtype(np.int64), np.dtype(np.bool_)])
_TENSORS = _DTYPES.flatmap(lambda dt: hnp.arrays(dt, hnp.array_shapes(min_dims=0, max_dims=3, min_side=0, max_side=4)))


def _same(a: np.ndarray, b: np.ndarray) -> bool:
    return a.dtype == b.dtype and a.shape == b.shape and np.array_equal(a, b, equal_nan=a.dtype == np.float64)


class TestTensorEncoding(TestCase):
    def test_encode_key_order(self):
        node = encode_tensor(np.array([1.0, 1.9999999999999993]))
        self.assertEqual(
            list(node), ["pymiloed-ndarray-list", "pymiloed-ndarray-dtype", "pymiloed-ndarray-shape", "pymiloed-data-structure"]
        )
        self.assertEqual(node["pymiloed-ndarray-list"], [1.0, 1.9999999999999993])
        self.assertEqual(node["pymiloed-ndarray-dtype"], "float64")
        self.assertEqual(node["pymiloed-ndarray-shape"], [2])
        self.assertEqual(node["pymiloed-data-structure"], "numpy.ndarray")

    def test_empty_and_matrix(self):
        self.assertEqual(encode_tensor(np.array([], dtype=np.float64))[NDARRAY_LIST_KEY], [])
        node = encode_tensor(np.array([[1, 2], [3, 4]], dtype=np.int64))
        self.assertEqual(node[NDARRAY_LIST_KEY], [1, 2, 3, 4])
        self.assertEqual(node["pymiloed-ndarray-shape"], [2, 2])

    def test_zero_dim(self):
        t = decode_tensor(encode_tensor(np.array(2.5)))
        self.assertEqual(t.shape, ())
        self.assertEqual(float(t), 2.5)

    def test_decode_figure_block(self):
        t = decode_tensor(SINGULAR_BLOCK)
        self.assertEqual(t.dtype, np.float64)
        self.assertEqual(t.tolist(), [1.618033988749895, 0.6180339887498948])

    def test_decode_errors(self):
        self.assertRaises(ShapeMismatch, decode_tensor, {**SINGULAR_BLOCK, "pymiloed-ndarray-list": [1.0, 2.0, 3.0]})
        self.assertRaises(ShapeMismatch, decode_tensor, {**SINGULAR_BLOCK, "pymiloed-ndarray-list": [[1.0], [2.0]]})
        self.assertRaises(DTypeUnknown, decode_tensor, {**SINGULAR_BLOCK, "pymiloed-ndarray-dtype": "complex128"})
        partial = dict(SINGULAR_BLOCK)
        del partial["pymiloed-ndarray-shape"]
        with self.assertRaises(MissingKey) as ctx:
            decode_tensor(partial, "coef_")
        self.assertEqual(ctx.exception.key, "pymiloed-ndarray-shape")

    def test_bool_dtype_tags(self):
        node = encode_tensor(np.array([True, False]))
        self.assertEqual(node["pymiloed-ndarray-dtype"], "bool")
        self.assertEqual(DType.of("bool_"), DType.bool_)
        for tag in ("bool", "bool_"):
            decoded = decode_tensor({**node, "pymiloed-ndarray-dtype": tag})
            self.assertEqual(decoded.dtype, np.bool_)
            self.assertEqual(decoded.tolist(), [True, False])

    def test_non_finite_sentinels(self):
        t = np.array([math.nan, math.inf, -math.inf, 1.0])
        node = encode_tensor(t)
        self.assertEqual(node[NDARRAY_LIST_KEY][:3], ["nan", "inf", "-inf"])
        self.assertTrue(is_data_node(node))
        self.assertTrue(_same(decode_tensor(parse(canonical_bytes(node))), t))

    def test_scalar(self):
        node = encode_scalar(np.float64(3.0000000000000018))
        self.assertEqual(node, {"value": 3.0000000000000018, "np-type": "numpy.float64"})
        s = decode_scalar(node)
        self.assertIs(type(s), np.float64)
        self.assertEqual(s, np.float64(3.0000000000000018))
        self.assertIs(type(decode_scalar(encode_scalar(np.int64(-4)))), np.int64)
        self.assertIs(type(decode_scalar(encode_scalar(np.bool_(True)))), np.bool_)
        self.assertRaises(UnknownTypeTag, decode_scalar, {"value": 1, "np-type": "numpy.float16"})

    def test_parse_rejects_non_json_literals(self):
        self.assertRaises(ParseFailure, parse, '{"a": NaN}')
        self.assertRaises(ParseFailure, parse, "[Infinity]")
        self.assertRaises(ParseFailure, parse, "{")

    def test_canonical_bytes(self):
        self.assertEqual(canonical_bytes({"b": 1, "a": [1.5, None, True]}), b'{"a":[1.5,null,true],"b":1}')

    @settings(max_examples=CONFIG.HYPOTHESIS_EXAMPLES, deadline=None)
    @given(_TENSORS)
    def test_round_trip(self, t):
        self.assertTrue(_same(decode_tensor(encode_tensor(t)), t))

    @settings(max_examples=CONFIG.HYPOTHESIS_EXAMPLES, deadline=None)
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_float_fidelity_through_text(self, x):
        node = parse(canonical_bytes(encode_scalar(np.float64(x))))
        self.assertEqual(decode_scalar(node).tobytes(), np.float64(x).tobytes())

    @settings(max_examples=CONFIG.HYPOTHESIS_EXAMPLES, deadline=None)
    @given(_TENSORS)
    def test_canonicalization_idempotent(self, t):
        once = canonical_bytes(encode_tensor(t))
        self.assertEqual(canonical_bytes(parse(once)), once)
