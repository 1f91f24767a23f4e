import json

import numpy as np
import pytest
from conftest import halving

from coarsemap.coarse import Relation, SiteSet, build_decay_matrix, epsilon_graph, growth_curve
from coarsemap.errors import ParseError
from coarsemap.io import (
    SCHEMA,
    dumps_matrix,
    loads_matrix,
    read_json,
    read_matrix,
    relation_dot,
    report,
    write_growth,
    write_matrix,
)


def test_round_trip_bit_exact(tmp_path, rng):
    raw = rng.random((7, 7)) ** 5
    f = build_decay_matrix(raw, SiteSet(tuple(f"q{i}" for i in range(7))))
    path = tmp_path / "m.csv"
    write_matrix(f, path)
    g = read_matrix(path)
    assert g.sites == f.sites
    assert np.array_equal(g.values, f.values)


def test_tiny_and_huge_values_survive():
    raw = np.array([[1.0, 5e-324], [5e-324, 1.0]])
    f = build_decay_matrix(raw)
    assert loads_matrix(dumps_matrix(f)).values[0, 1] == 5e-324


def test_bad_number_reports_line_and_column():
    text = "site,a,b\na,1,0.5\nb,0.5,x\n"
    with pytest.raises(ParseError) as exc:
        loads_matrix(text)
    assert exc.value.line == 3 and exc.value.column == 3


def test_structural_errors():
    for text in ("", "id,a\na,1\n", "site,a,a\na,1,0\na,0,1\n", "site,a,b\na,1,0\n", "site,a,b\na,1,0\nc,0,1\n",
                 "site,a,b\na,1\nb,0,1\n"):
        with pytest.raises(ParseError):
            loads_matrix(text)


def test_asymmetric_and_negative():
    with pytest.raises(ParseError):
        loads_matrix("site,a,b\na,1,-0.5\nb,-0.5,1\n")


def test_dot_lists_edges_and_components():
    e = epsilon_graph(halving(4), 0.5)
    dot = relation_dot(e, "demo")
    assert dot.startswith('graph "demo" {')
    assert dot.count("--") == 3
    assert "component=0" in dot


def test_dot_isolated_components():
    dot = relation_dot(Relation.diagonal(SiteSet.range(3)))
    assert "component=2" in dot and "--" not in dot


def test_growth_csv(tmp_path):
    from conftest import path_d

    path = tmp_path / "g.csv"
    write_growth(growth_curve(path_d(5), 2), path)
    assert path.read_text().splitlines() == ["r,gamma", "0,1", "1,3", "2,5"]


def test_report_schema_and_nonfinite():
    r = report("x", {"a": float("inf"), "b": np.float64(2.5), "c": np.bool_(True)})
    assert r["schema"] == SCHEMA and r["a"] is None and r["b"] == 2.5 and r["c"] is True
    json.dumps(r)


def test_read_json_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "n": 3,\n  oops\n}')
    with pytest.raises(ParseError) as exc:
        read_json(p)
    assert exc.value.line == 3
