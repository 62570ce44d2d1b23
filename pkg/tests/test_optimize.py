import numpy as np
import pytest

from starjam.channels import generate_channels
from starjam.config import SystemConfig
from starjam.optimize import SolutionRecord, evaluate_solution, optimize, repair_beams
from starjam.rates import BeamformerSolution, StarRisState


@pytest.fixture(scope="module")
def desk_record():
    cfg = SystemConfig(K=8, N=2).with_power_dbm(20)
    return cfg, generate_channels(cfg, 7), optimize(generate_channels(cfg, 7), cfg)


def test_huge_epsilon_stops_after_one_round(desk_cfg, desk_channels):
    rec = optimize(desk_channels, desk_cfg.replace_algo(epsilon=100.0))
    assert rec.status == "converged" and len(rec.outer_rates) == 1


def test_desk_instance(desk_record):
    _, _, rec = desk_record
    assert rec.status == "converged"
    assert len(rec.outer_rates) <= 15
    assert rec.report.leakage_ok and rec.report.sic_ok


def test_desk_solution_feasibility(desk_record):
    cfg, ch, rec = desk_record
    rep = rec.report
    assert rep.power_used <= cfg.power * (1 + 1e-6)
    assert rep.r_12 >= rep.r_22 - 1e-6 and rep.r_e1 <= cfg.tau + 1e-3
    beta = rec.state.beta
    assert set(np.unique(beta)) <= {0.0, 1.0} and np.all(beta.sum(axis=0) == 1)
    active = beta.astype(bool)
    for phi in (rec.state.phi_r, rec.state.phi_t, rec.state.phi_j):
        nz = np.abs(phi) > 0
        assert np.allclose(np.abs(phi[nz]), 1.0)
    for z, phi in enumerate((rec.state.phi_r, rec.state.phi_t, rec.state.phi_j)):
        assert np.array_equal(np.abs(phi) > 0, active[z])
    # the report is exactly what an independent evaluation gives
    assert evaluate_solution(ch, rec.beams, rec.state, cfg) == rep


def test_zero_power_budget(desk_channels, desk_cfg):
    cfg = desk_cfg.replace(Pmax=0.0)
    rec = optimize(desk_channels, cfg)
    assert rec.status == "converged" and rec.sum_rate == 0.0


def test_zero_beams_zero_report(desk_channels, desk_cfg):
    state = StarRisState.from_modes(np.vstack([np.ones(8), np.zeros(8), np.zeros(8)]), np.zeros(8))
    rep = evaluate_solution(desk_channels, BeamformerSolution.from_vectors(np.zeros(2), np.zeros(2)), state,
                            desk_cfg)
    assert rep.sum_rate == 0 and rep.power_used == 0


def test_leakage_flag_follows_tau(desk_record):
    cfg, ch, rec = desk_record
    r_e1 = rec.report.r_e1
    assert r_e1 > 0
    low = cfg.replace(tau=r_e1 / 2)
    assert not evaluate_solution(ch, rec.beams, rec.state, low).leakage_ok
    assert evaluate_solution(ch, rec.beams, rec.state, cfg.replace(tau=r_e1 * 2)).leakage_ok


@pytest.mark.parametrize("scheme", ["star", "conv-ris", "conv-ris-jam", "no-ris"])
def test_schemes_honor_their_masks(desk_channels, desk_cfg, scheme):
    from starjam.schemes import Scheme
    rec = optimize(desk_channels, desk_cfg, scheme)
    assert rec.status == "converged" and rec.scheme == scheme
    allowed = Scheme(scheme).allowed(desk_cfg.K)
    assert np.all(rec.state.beta[~allowed] == 0)
    assert rec.report.leakage_ok and rec.report.sic_ok


def test_no_ris_ignores_surface_size():
    a = SystemConfig(K=4).with_power_dbm(20)
    b = a.replace(K=12)
    ra = optimize(generate_channels(a, 3), a, "no-ris").sum_rate
    rb = optimize(generate_channels(b, 3), b, "no-ris").sum_rate
    assert ra == pytest.approx(rb, rel=1e-9)


def test_rerun_is_identical(desk_channels, desk_cfg, desk_record):
    rec = optimize(desk_channels, desk_cfg)
    assert rec.to_text() == desk_record[2].to_text()


def test_record_text_layout(desk_record):
    text = desk_record[2].to_text().splitlines()
    assert text[0] == "# starjam solution v1" and text[2] == "status converged"
    assert any(ln.startswith("outer ") for ln in text)
    assert text[-1].startswith("modes ") and len(text[-1].split()) == 9


def test_outer_rates_are_logged_per_round(desk_record):
    rec = desk_record[2]
    outer = [r for r in rec.trace if r.stage == "outer"]
    assert [r.iteration for r in outer] == list(range(len(outer)))


def test_repair_scales_into_feasibility(desk_record):
    cfg, ch, rec = desk_record
    # ten times the budget must come back within it and keep the flags
    out = repair_beams(ch, rec.state, 10 * rec.beams.w1, 10 * rec.beams.w2, cfg)
    value, w1, w2 = out
    rep = evaluate_solution(ch, BeamformerSolution.from_vectors(w1, w2), rec.state, cfg)
    assert rep.power_used <= cfg.power * (1 + 1e-6) and rep.leakage_ok and rep.sic_ok


def test_infeasible_record_shape():
    rec = SolutionRecord(None, None, None, None, status="infeasible", failed_stage="active")
    assert np.isnan(rec.sum_rate)
    assert "failed_stage active" in rec.to_text()
