import math

import pytest

import riccilab


def test_catalog_and_providers():
    ids = [c["id"] for c in riccilab.catalog()]
    assert len(ids) == len(set(ids)) == 28
    assert "theorem_3_1_eq_3_4" in ids
    assert {"sphere2", "cigar", "grid", "pulled_cigar"} <= set(riccilab.known_providers())


def test_curvature_closed_forms():
    s2 = riccilab.curvature_at("sphere2", [0.3, -0.2])
    assert s2["scalar"] == pytest.approx(2.0, abs=1e-8)
    for i in range(2):
        for j in range(2):
            assert s2["ricci"][i][j] == pytest.approx(s2["metric"][i][j], abs=1e-8)
    assert riccilab.curvature_at("sphere3", [0.1, 0.2, 0.3])["scalar"] == pytest.approx(6.0, abs=1e-8)
    assert riccilab.curvature_at("cigar", [0.0, 0.0])["scalar"] == pytest.approx(4.0, abs=1e-8)
    with pytest.raises(riccilab.PointOutOfChart):
        riccilab.curvature_at("sphere2", [0.1])


def test_verify_round_trip():
    cfg = riccilab.config(checks=["lemma_2_2", "theorem_C"], providers=["sphere2"], samples=3)
    first = riccilab.verify(cfg)
    assert first["summary"]["pass"]
    assert first["summary"]["total"] == 2
    assert first == riccilab.verify(cfg)
    for r in first["reports"]:
        assert r["max_residual"] <= r["tolerance"]


def test_verify_mutation_fails():
    rep = riccilab.verify(checks=["theorem_C"], providers=["sphere3"], samples=3, mutation="flip_curvature_sign")
    assert not rep["summary"]["pass"]


def test_config_errors():
    with pytest.raises(riccilab.ConfigInvalid, match="grid.resolution"):
        riccilab.verify(grid={"resolution": 2})
    with pytest.raises(riccilab.ConfigInvalid, match="lemma_9_9"):
        riccilab.config(checks=["lemma_9_9"])
    assert issubclass(riccilab.ConfigInvalid, riccilab.Error)


def test_flow_trace_sphere():
    rows = riccilab.flow_trace(flow={"provider": "sphere2", "horizon": 0.2, "steps": 4, "points": 3, "frames": 4})
    assert len(rows) == 4
    for a, b in zip(rows, rows[1:]):
        assert b["min_tR"] > a["min_tR"]
    for r in rows:
        assert math.isclose(r["min_tR"], 2 * r["t"] / (1 - 2 * r["t"]), rel_tol=1e-10)
        assert r["min_Z"] >= -1e-9


def test_convergence_slopes():
    runs = riccilab.convergence(convergence={"providers": ["sphere2"], "points": 1, "n_grid": [1e2, 1e3, 1e4]})
    assert runs[0]["provider"] == "sphere2"
    for f in runs[0]["fits"]:
        if not f["exact"]:
            assert -1.1 <= f["slope"] <= -0.9
