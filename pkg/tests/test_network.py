"""Model assembly, evaluation bounds, serialization, topology reporting."""

import io
import json
import random
from fractions import Fraction

import pytest

from ksnet.errors import AssemblyError, DomainError, ModelFormatError
from ksnet.hashmaps import make_params, psi_eval
from ksnet.inner import default_inner_spec
from ksnet.network import (
    FORMAT_VERSION,
    FastEvaluator,
    assemble,
    describe,
    evaluate,
    evaluate_batch,
    load,
    save,
)
from ksnet.outer import SampleSet, fit_exact, g_eval

SPEC6 = default_inner_spec(6)
P26 = make_params(2, 6)


def _fit_model(seed=0, n=20, f=lambda p: p[0] * p[1], bits=50):
    rng = random.Random(seed)
    pts = set()
    while len(pts) < n:
        pts.add(tuple(Fraction(rng.getrandbits(bits), 2**bits) for _ in range(2)))
    pts = sorted(pts)
    samples = SampleSet(points=tuple(pts), targets=tuple(f(p) for p in pts))
    outer, report = fit_exact(samples, P26, SPEC6)
    model = assemble(SPEC6, P26, outer, meta={"fit_mode": "exact", "depth": report.depth})
    return model, samples


MODEL, SAMPLES = _fit_model()


def test_assemble_rejects_mismatches():
    with pytest.raises(AssemblyError, match="base"):
        assemble(default_inner_spec(8), P26, MODEL.outer)
    with pytest.raises(AssemblyError, match="d"):
        assemble(default_inner_spec(8), make_params(3, 8), MODEL.outer)


def test_evaluate_reproduces_fitted_samples():
    for p, t in zip(SAMPLES.points, SAMPLES.targets):
        w, err = evaluate(MODEL, p)
        assert w == t


def test_evaluate_decomposes_into_branches():
    x = (Fraction(2, 7), Fraction(3, 5))
    w, err, parts = evaluate(MODEL, x, with_branches=True)
    assert len(parts) == 5
    assert sum(parts) == w
    # each part is the outer function applied to that branch's hash value
    for q, v in enumerate(parts):
        y = psi_eval(P26, SPEC6, x, q, 30).value
        assert g_eval(MODEL.outer, y) == v


def test_evaluate_validates_input():
    with pytest.raises(DomainError):
        evaluate(MODEL, (Fraction(1, 2),))
    with pytest.raises(DomainError):
        evaluate(MODEL, (Fraction(1, 2), Fraction(-1, 10)))


def test_evaluate_batch_names_offending_point():
    points = [(Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 2), Fraction(3, 2))]
    with pytest.raises(DomainError, match="point 1"):
        evaluate_batch(MODEL, points)


def test_error_bound_brackets_deeper_evaluation():
    """Refining the depth moves the value by at most the reported bound."""
    rng = random.Random(5)
    for _ in range(20):
        x = tuple(Fraction(rng.getrandbits(60), 2**60) for _ in range(2))
        w30, err30 = evaluate(MODEL, x, depth=30)
        w60, err60 = evaluate(MODEL, x, depth=60)
        assert abs(w60 - w30) <= err30
        assert err60 <= err30


def test_exact_value_despite_positive_bound():
    """Branch shifts by q a are never terminating (the denominator keeps a
    factor gamma - 1), so the bound stays positive even at fitted samples;
    the value there is still exactly the target."""
    x, t = SAMPLES.points[0], SAMPLES.targets[0]
    w30, err30 = evaluate(MODEL, x, depth=30)
    assert w30 == t
    assert 0 < err30 < Fraction(1, 10**8)


def test_fast_evaluator_tracks_exact():
    fast = FastEvaluator(MODEL)
    rng = random.Random(6)
    for _ in range(40):
        x = tuple(Fraction(rng.getrandbits(60), 2**60) for _ in range(2))
        w, err = evaluate(MODEL, x)
        wf, _ = fast.evaluate(x)
        assert abs(wf - float(w)) <= float(err) + 1e-12


def test_fast_error_bound_tracks_exact():
    """Both paths keep the digit-cell window at terminating coordinates.

    The float bound rounds to zero when a branch window falls below double
    resolution, but it never lands more than rounding slack above the exact
    bound."""
    fast = FastEvaluator(MODEL)
    for x in [(Fraction(1, 3), Fraction(5, 6)), (Fraction(1, 2), Fraction(1, 2))]:
        _, err = evaluate(MODEL, x)
        _, errf = fast.evaluate(x)
        assert float(err) > 1e-12
        assert abs(errf - float(err)) <= 1e-5 * float(err)
    rng = random.Random(6)
    for _ in range(40):
        x = tuple(Fraction(rng.getrandbits(60), 2**60) for _ in range(2))
        _, err = evaluate(MODEL, x)
        _, errf = fast.evaluate(x)
        assert errf <= float(err) * (1 + 1e-6)


def test_fast_evaluator_validates_input():
    fast = FastEvaluator(MODEL)
    with pytest.raises(DomainError):
        fast.evaluate((Fraction(1, 2), Fraction(2)))


def test_save_load_round_trip():
    blob = save(MODEL)
    again = load(blob)
    assert save(again) == blob
    assert again.params == MODEL.params
    assert again.outer == MODEL.outer
    assert again.meta == MODEL.meta
    rng = random.Random(7)
    for _ in range(20):
        x = tuple(Fraction(rng.getrandbits(50), 2**50) for _ in range(2))
        assert evaluate(again, x) == evaluate(MODEL, x)


def test_save_load_path_and_handle(tmp_path):
    path = tmp_path / "model.json"
    blob = save(MODEL, path)
    assert path.read_bytes() == blob
    assert save(load(path)) == blob
    with open(path, "rb") as fh:
        assert save(load(fh)) == blob
    assert save(load(blob.decode())) == blob


def test_document_structure():
    doc = json.loads(save(MODEL))
    assert doc["format_version"] == FORMAT_VERSION == 1
    assert doc["d"] == 2 and doc["gamma"] == 6
    assert doc["lambda"] == ["1", "80542626049/470184984576"]
    assert doc["b"] == [0, 5, 10, 15, 20]
    assert len(doc["inner_weights"]) == 6
    assert [br["q"] for br in doc["branches"]] == [0, 1, 2, 3, 4]
    knot = doc["branches"][0]["knots"][0]
    assert set(knot) == {"y", "g"}


def test_load_rejects_malformed_documents():
    blob = save(MODEL)
    with pytest.raises(ModelFormatError):
        load(blob[: len(blob) // 2])
    doc = json.loads(blob)
    doc["format_version"] = 2
    with pytest.raises(ModelFormatError, match="newer"):
        load(json.dumps(doc))
    doc = json.loads(blob)
    doc["branches"][0], doc["branches"][1] = doc["branches"][1], doc["branches"][0]
    with pytest.raises(ModelFormatError, match="branches"):
        load(json.dumps(doc))
    doc = json.loads(blob)
    doc["lambda"][1] = "not-a-number"
    with pytest.raises(ModelFormatError, match="lambda"):
        load(json.dumps(doc))
    doc = json.loads(blob)
    del doc["gamma"]
    with pytest.raises(ModelFormatError, match="gamma"):
        load(json.dumps(doc))
    doc = json.loads(blob)
    doc["branches"][2]["knots"][0]["y"] = doc["branches"][2]["knots"][1]["y"]
    with pytest.raises(ModelFormatError):
        load(json.dumps(doc))


def test_depth_falls_back_to_meta():
    w_default, err_default = evaluate(MODEL, (Fraction(1, 7), Fraction(1, 9)))
    w_meta, err_meta = evaluate(MODEL, (Fraction(1, 7), Fraction(1, 9)), depth=MODEL.meta["depth"])
    assert (w_default, err_default) == (w_meta, err_meta)


def test_describe_topology():
    rep = describe(MODEL)
    assert rep.layer_widths == (2, 10, 5, 1)
    assert rep.knot_counts == tuple(len(t.ys) for t in MODEL.outer.tables)
    doc = rep.to_jsonable()
    assert doc["layer_widths"] == [2, 10, 5, 1]
    assert doc["a"] == "1/30"
    assert "digraph" in rep.dot()


def test_describe_topology_d3():
    params = make_params(3, 8)
    spec = default_inner_spec(8)
    pts = [
        (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)),
        (Fraction(1, 8), Fraction(5, 8), Fraction(7, 8)),
    ]
    samples = SampleSet(points=tuple(pts), targets=(Fraction(1), Fraction(2)))
    outer, report = fit_exact(samples, params, spec)
    rep = describe(assemble(spec, params, outer))
    assert rep.layer_widths == (3, 21, 7, 1)
