import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mint.fixtures import catalog, make_fixture, random_povm, random_tree
from mint.interpolation import interpolate_kkb
from mint.io import (
    DocumentError,
    decode_matrix,
    document_kind,
    dumps,
    encode_matrix,
    from_doc,
    load,
    result_from_doc,
    result_to_doc,
    to_doc,
    write_json,
)
from mint.measurement import Measurement, ProductBasis, von_neumann
from mint.progress import example_mu
from mint.protocol import Completion, ProtocolTree, leaf_povm


def same_measurement(a: Measurement, b: Measurement, atol=1e-12):
    assert a.labels == b.labels and (a.d_A, a.d_B) == (b.d_A, b.d_B)
    for x, y in zip(a.elements, b.elements):
        assert_allclose(x, y, atol=atol)


def round_trip(obj):
    return from_doc(json.loads(dumps(obj)))


def test_matrix_encoding():
    m = np.array([[1, 2j], [-2j, 3]])
    doc = encode_matrix(m)
    assert doc[0][1] == [0.0, 2.0]
    assert_allclose(decode_matrix(doc), m)


def test_ragged_matrix_rejected():
    with pytest.raises(DocumentError):
        decode_matrix([[[1, 0]], [[1, 0], [0, 0]]])


@pytest.mark.parametrize("name", sorted(catalog()) + ["computational-2x2"])
def test_catalog_round_trip(name):
    obj = make_fixture(name)
    back = round_trip(obj)
    assert type(back) is type(obj)
    if isinstance(obj, ProductBasis):
        assert back.labels == obj.labels
        assert_allclose(back.vectors, obj.vectors, atol=1e-12)
    elif isinstance(obj, Measurement):
        same_measurement(back, obj)
    elif isinstance(obj, ProtocolTree):
        same_measurement(leaf_povm(back), leaf_povm(obj))
    else:
        assert isinstance(back, Completion)
        assert back.assign == obj.assign and back.order == obj.order
        for leaf in obj.stages:
            same_measurement(back.stages[leaf], obj.stages[leaf])


def test_random_tree_round_trip():
    t = random_tree(2, 3, 3, 4)
    same_measurement(leaf_povm(round_trip(t)), leaf_povm(t))


def test_interpolation_result_round_trip():
    m = random_povm(3, 3, 2)
    mu = example_mu(np.eye(3))
    r = interpolate_kkb(m, mu, 0.0)
    doc = json.loads(dumps(result_to_doc(r)))
    assert doc["c_constants"] == ["inf"] * 3
    back = result_from_doc(doc)
    assert all(math.isinf(c) for c in back.c_constants)
    same_measurement(back.m1, r.m1)
    same_measurement(back.composed(), r.composed())


def test_file_round_trip(tmp_path):
    path = tmp_path / "m.json"
    m = von_neumann(np.eye(2))
    write_json(path, m)
    same_measurement(load(path, "measurement"), m)
    with pytest.raises(DocumentError):
        load(path, "basis")


def test_unknown_document():
    with pytest.raises(DocumentError):
        document_kind({"hello": 1})
    with pytest.raises(TypeError):
        to_doc(object())


def test_missing_fields():
    with pytest.raises(DocumentError):
        from_doc({"vectors": [{"alice": [[1, 0]]}], "d_A": 1, "d_B": 1})
