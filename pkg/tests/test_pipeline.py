import json

import numpy as np
import pytest

from lincvx import domains as D
from lincvx import pipeline as PL
from lincvx.report import dumps


@pytest.fixture(scope="module")
def model_chain(model):
    return PL.counterexample_pipeline(model, samples=500, seed=0)


def test_model_chain_is_complete(model, model_chain):
    res = model_chain
    assert res.status == "violation" and res.exit_code == 1
    defect, hull = res.reports
    assert defect.verdict == "fail" and defect.worst_margin < -0.5
    assert hull.verdict == "fail"
    chain = res.chain
    for key in ("boundary_point", "defect", "frame", "delta", "discriminant", "model_discs",
                "discs", "hull_witness"):
        assert key in chain
    assert chain["discriminant"] < 0
    w = np.array([complex(*x) for x in chain["hull_witness"]["point"]])
    assert model.rho(w) >= -1e-9


def test_ball_has_no_violation(ball):
    res = PL.counterexample_pipeline(ball, samples=300, seed=0)
    assert res.status == "no_violation" and res.exit_code == 0
    assert res.reports[0].worst_margin > 0.49
    assert "no violation" in res.chain["message"]


def test_flat_defect_is_inconclusive():
    dom = D.perturbed_ball(1.0, 1.0, 0.5)
    res = PL.counterexample_pipeline(dom, samples=300, seed=0)
    assert res.status == "inconclusive" and res.exit_code == 3
    assert abs(res.reports[0].worst_margin) <= PL.DEFECT_BAND


def test_pipeline_document_is_deterministic(model, model_chain):
    again = PL.counterexample_pipeline(model, samples=500, seed=0)
    cfg = {"samples": 500, "seed": 0}
    a = json.dumps(model_chain.document(cfg), sort_keys=True)
    b = json.dumps(again.document(cfg), sort_keys=True)
    assert a == b


def test_config_validation(ball):
    with pytest.raises(PL.ConfigError):
        PL.SuiteConfig(ball, ())
    with pytest.raises(PL.ConfigError):
        PL.SuiteConfig(ball, ("gauge", "sparkle"))
    with pytest.raises(PL.ConfigError):
        PL.SuiteConfig(ball, samples=0)
    with pytest.raises(PL.ConfigError):
        PL.SuiteConfig(ball, tol=0.0)
    assert "workers" not in PL.SuiteConfig(ball, workers=3).to_dict()


def test_derived_seeds_follow_criterion_order():
    assert [PL.derived_seed(10, c) for c in PL.CRITERIA] == list(range(10, 10 + len(PL.CRITERIA)))


def test_model_suite_fails_defect_and_hull(model):
    cfg = PL.SuiteConfig(model, ("gauge", "hull", "defect", "chord"), samples=300, seed=0)
    reps = {r.name: r for r in PL.run_suite(cfg)}
    for name in ("hull", "defect", "chord", "gauge"):
        assert reps[name].verdict == "fail", name
    w = np.array([complex(*x) for x in reps["defect"].witness["point"]])
    assert np.linalg.norm(w) < 0.05


def test_suite_is_deterministic_and_worker_independent(ellipsoid):
    base = PL.SuiteConfig(ellipsoid, ("gauge", "indicatrix", "hor22"), samples=200, seed=4)
    a = dumps(PL.run_suite(base), base.to_dict())
    b = dumps(PL.run_suite(PL.SuiteConfig(ellipsoid, base.criteria, 200, 4, workers=3)),
              base.to_dict())
    assert a == b


def test_numerical_trouble_becomes_inconclusive(ball):
    flat = D.custom(["sub", ["pow", "x1", 2], 1], (0, 0, 0, 0), 1.0)
    rep = PL.run_criterion("defect", PL.SuiteConfig(flat, ("defect",), samples=10))
    assert rep.verdict == "inconclusive" and "reason" in rep.details


def test_one_variable_domains_skip_curvature():
    dom = D.ball(1.0, n=1)
    res = PL.counterexample_pipeline(dom)
    assert res.status == "inconclusive"
    rep = PL.run_criterion("chord", PL.SuiteConfig(dom, ("chord",), samples=10))
    assert rep.verdict == "inconclusive"
