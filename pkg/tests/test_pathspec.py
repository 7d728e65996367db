import json

import numpy as np
import pytest

from chen_holonomy.pathspec import PathSpecError, parse_ambient, parse_path, path_from_dict


def test_line_string():
    g = parse_path("line:v=1,1")
    assert g.arity == 1 and np.allclose(g(1.0), [1.0, 1.0])
    g = parse_path("line:v=1,2,3,start=0,0,1")
    assert np.allclose(g(0.0), [0, 0, 1]) and np.allclose(g(1.0), [1, 2, 4])


def test_families():
    assert parse_path("full-twist:w=2").dim == 4
    assert parse_path("braid-generator:m=3,i=2").dim == 6
    assert parse_path("figure-wrap:w=1").arity == 3
    assert parse_path("circle-loop:w=1,r=2").dim == 2
    c = parse_path("constant:point=1,2,arity=2")
    assert c.arity == 2 and np.all(c(0.3, 0.7) == [1, 2])


def test_json_forms(tmp_path):
    coeffs = np.zeros((2, 2))
    coeffs[0, 1] = 1.0
    coeffs[1, 1] = 2.0
    spec = {"type": "polynomial", "arity": 1, "coeffs": coeffs.tolist()}
    g = path_from_dict(spec)
    assert np.allclose(g(1.0), [1.0, 2.0])
    (tmp_path / "p.json").write_text(json.dumps(spec))
    assert np.allclose(parse_path(str(tmp_path / "p.json"))(1.0), [1.0, 2.0])
    composed = parse_path(json.dumps({"type": "compose", "op": "compose1", "children": ["line:v=1,0", "line:v=0,1,start=1,0"]}))
    assert np.allclose(composed(1.0), [1.0, 1.0])


def test_errors():
    with pytest.raises(PathSpecError):
        parse_path("nosuch:v=1")
    with pytest.raises(PathSpecError):
        parse_path("line:w=1")
    with pytest.raises(PathSpecError):
        parse_path(json.dumps({"type": "compose", "op": "compose1", "children": ["line:v=1,0", "line:v=0,1"]}))
    with pytest.raises(PathSpecError):
        parse_path(json.dumps({"type": "compose", "op": "bogus", "children": []}))
    with pytest.raises(PathSpecError):
        path_from_dict({"type": "polynomial", "arity": 2, "coeffs": [[1.0, 2.0]]})
    with pytest.raises(PathSpecError):
        # a 2-path whose t = 0 face is not a point
        path_from_dict({"type": "polynomial", "arity": 2, "coeffs": [[[0.0, 0.0], [1.0, 0.0]]]})
    with pytest.raises(PathSpecError):
        parse_ambient("conf:m=3,n=2", 4)
