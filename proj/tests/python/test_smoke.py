import math

import pytest

import traffic_maps as tm


def test_step_on_ring():
    cfg = tm.Configuration.ring(10.0, [0.0, 1.0, 5.0], 0.5)
    nxt = tm.step(cfg, tm.ProcessParams(1.0, 1.0), seed=0, t=0)
    assert nxt.positions == [0.0, 2.0, 6.0]
    assert tm.is_admissible(nxt)


def test_word_round_trip():
    assert tm.encode_word(tm.decode_word("0110100")) == "0110100"


def test_invariant_family_is_stationary():
    m = tm.build_invariant_matrix(0.3, 0.5)
    report = tm.verify_invariance(m, 0.5, max_len=5)
    assert report["stationary"]
    assert report["max_discrepancy"] < 1e-12


def test_bernoulli_is_not_stationary():
    m = tm.MarkovMatrix.from_entries(0.5, 0.5, 0.5, 0.5)
    assert tm.pushforward(m, "11", 0.5) == pytest.approx(15 / 64, abs=1e-15)
    assert not tm.verify_invariance(m, 0.5, max_len=2)["stationary"]


def test_velocity_formula():
    assert tm.theoretical_velocity(0.5, 1.0, 1.0, 0.5) == pytest.approx(1.0)
    p, rho = 0.5, 0.25
    expected = (1 - math.sqrt(1 - 4 * p * rho * (1 - rho))) / (2 * rho)
    assert tm.theoretical_velocity(rho, p, 1.0, 0.5) == pytest.approx(expected, rel=1e-12)


def test_simulated_velocity_matches_theory():
    cfg = tm.invariant_initial_condition(0.4, 0.5, 1.0, 0.5, 2000, seed=3)
    v_hat, err = tm.simulate_velocity(cfg, tm.ProcessParams(0.5, 1.0, tm.Space.Lattice), 4000, 1000, seed=9)
    v = tm.theoretical_velocity(tm.density(cfg), 0.5, 1.0, 0.5)
    assert abs(v_hat - v) < 5 * err + 1e-3


def test_radius_conjugation_preserves_gaps():
    cfg = tm.Configuration.ring(20.0, [0.0, 3.0, 7.5], [0.5, 1.0, 0.25])
    out = tm.radius_conjugate(cfg, 0.0)
    assert tm.gaps(out) == pytest.approx(tm.gaps(cfg))


def test_domain_errors():
    with pytest.raises(tm.DomainError):
        tm.build_invariant_matrix(1.5, 0.5)
    overlapping = tm.Configuration.ring(2.0, [0.0, 0.5], 0.5)
    with pytest.raises(ValueError):
        tm.run(overlapping, tm.ProcessParams(1.0, 1.0), 1, 0)
