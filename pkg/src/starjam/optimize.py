"""Alternating active/passive optimization with penalty escalation.

All subproblems run on normalized effective channels: every channel row is
scaled by sqrt(Pmax)/sigma, so the noise power and the power budget are both 1
inside the conic programs. Beams are mapped back to watts before evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .active import (RATIOS, StageParams, beam_matrices, block_scales, build_p2, evaluate_parts,
                     extract_beamformers, multipliers_at)
from .channels import ChannelRealization
from .config import SystemConfig
from .conic import ConicSolution, solve
from .passive import (DegenerateExtractionError, PassiveLifted, PenaltyState, build_p3,
                      extract_phases, one_hot_project, rank_gap, unpack_lifted, update_penalties)
from .rates import (BeamformerSolution, EffectiveChannels, RateReport, StarRisState,
                    build_effective_channels, compute_rates, lift, lifted_state)
from .schemes import Scheme, get_scheme

STATUSES = ("converged", "iteration-cap", "infeasible")


class StageFailure(RuntimeError):
    def __init__(self, stage: str, status: str):
        super().__init__(f"{stage} stage failed with solver status {status}")
        self.stage = stage
        self.status = status


@dataclass(frozen=True)
class TraceRow:
    stage: str          # active | passive | polish | outer
    iteration: int      # outer iteration index (0-based)
    inner: int          # inner index within the stage
    s: float
    rate: float


@dataclass
class SolutionRecord:
    beams: Optional[BeamformerSolution]
    state: Optional[StarRisState]
    lifted: Optional[PassiveLifted]
    report: Optional[RateReport]
    trace: list[TraceRow] = field(default_factory=list)
    status: str = "converged"
    failed_stage: Optional[str] = None
    scheme: str = "star-jam"
    # solves that hit the backend's numerical limit (the stage kept its last feasible point)
    numerical_events: int = 0

    @property
    def outer_rates(self) -> list[float]:
        return [row.rate for row in self.trace if row.stage == "outer"]

    @property
    def sum_rate(self) -> float:
        return self.report.sum_rate if self.report is not None else math.nan

    def to_text(self) -> str:
        """Trace rows followed by the final report, one whitespace-separated row each."""
        lines = ["# starjam solution v1", f"scheme {self.scheme}", f"status {self.status}",
                 f"failed_stage {self.failed_stage or '-'}",
                 f"numerical_events {self.numerical_events}", "trace stage iteration inner s rate"]
        lines += [f"{r.stage} {r.iteration} {r.inner} {r.s!r} {r.rate!r}" for r in self.trace]
        lines.append("report " + RateReport.header())
        lines.append(self.report.to_row() if self.report is not None else "-")
        if self.state is not None:
            lines.append("modes " + " ".join(str(int(i)) for i in np.argmax(self.state.beta, axis=0)))
        return "\n".join(lines) + "\n"


def evaluate_solution(ch: ChannelRealization, beams, state: StarRisState, cfg: SystemConfig) -> RateReport:
    return compute_rates(ch, beams, state, cfg.sigma2, cfg.tau,
                         full_jamming_leakage=cfg.algo_params.jamming_full_leakage)


# -- helpers -------------------------------------------------------------------

def _rng(ch: ChannelRealization, cfg: SystemConfig, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=[cfg.seed, ch.seed_used], spawn_key=(tag,)))


def _rate(s: float) -> float:
    return 2.0 * math.log2(max(s, 1e-300))


def _s_at(parts) -> float:
    """Objective value of the surrogate at a point where it is tight."""
    r = {t: max(parts[t][0], 0.0) / parts[t][1] for t in RATIOS}
    return math.sqrt((1.0 + r["11"]) * (1.0 + min(r["22"], r["12"])))


def _solve(prob, tol: float, stage: str) -> ConicSolution:
    """Solve; on a numerical limit fall back to a 10x looser tolerance, accepting
    whichever returned point is feasible to that tolerance."""
    sol = solve(prob, tol)
    if sol.status == "numerical-limit":
        if sol.max_constraint_violation <= 10.0 * tol:
            return sol
        sol = solve(prob, 10.0 * tol)
        if sol.status == "numerical-limit" and sol.max_constraint_violation <= 10.0 * tol:
            return sol
    if sol.status != "optimal":
        raise StageFailure(stage, sol.status)
    return sol


def _eve_scale(eff: EffectiveChannels, W1, W2, Z, params: StageParams) -> float:
    """Largest c <= 1 with c*W1 meeting the Eve constraint at Z."""
    _, (num, jam), _ = evaluate_parts(eff, W1, W2, *Z, params)
    g = params.leak_sinr
    excess = num - g * jam
    if excess <= 0:
        return 1.0
    return min(1.0, g * params.sigma2 / excess * (1.0 - 1e-9))


def _initial_beams(eff: EffectiveChannels, Z) -> tuple[np.ndarray, np.ndarray]:
    """Heuristic anchor: w1 matched to User1 with Eve's direction removed, w2 matched to User2."""
    R, T, _ = Z
    N = eff.H2.shape[1]

    def row(H, M):
        lam, U = np.linalg.eigh(0.5 * (M + M.conj().T))
        v = math.sqrt(max(lam[-1], 0.0)) * U[:, -1]
        return v.conj() @ H

    g1, g2, ge = row(eff.H1, R), row(eff.H2, T), row(eff.He, R)
    d1 = g1.conj() if np.linalg.norm(g1) > 0 else np.ones(N, dtype=complex)
    if N >= 2 and np.linalg.norm(ge) > 0:
        e = ge.conj() / np.linalg.norm(ge)
        proj = d1 - e * np.vdot(e, d1)
        if np.linalg.norm(proj) > 1e-9 * np.linalg.norm(d1):
            d1 = proj
    W1 = np.outer(d1, d1.conj()) / max(np.vdot(d1, d1).real, 1e-300)
    if np.linalg.norm(g2) == 0:
        # User2 unreachable: all power on w1
        return W1, np.zeros((N, N), dtype=complex)
    d2 = g2.conj() / np.linalg.norm(g2)
    return 0.5 * W1, 0.5 * np.outer(d2, d2.conj())


def _exact_lift(state: StarRisState) -> PassiveLifted:
    R, T, J = lifted_state(state)
    return PassiveLifted(R, T, J, state.beta)


def _relaxed_lift(beta: np.ndarray, rng: np.random.Generator) -> PassiveLifted:
    K = beta.shape[1]
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(3, K))
    v = np.sqrt(beta) * np.exp(1j * phases)
    return PassiveLifted(lift(v[0], 1.0), lift(v[1]), lift(v[2], 0.0), beta.copy())


# -- repair and scoring ----------------------------------------------------------

def repair_beams(ch: ChannelRealization, state: StarRisState, w1, w2, cfg: SystemConfig):
    """Scale a candidate pair into the power, leakage and SIC feasible set.

    Both beams are scaled to the budget; then |w1|^2 is scaled by the best
    c in the interval where the budget, full leakage and SIC order hold. The same search
    with w2 switched off is also tried and the better pair is returned as
    ``(sum_rate, w1, w2)``.
    """
    P, s2, tau = cfg.power, cfg.sigma2, cfg.tau
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    tot = float(np.vdot(w1, w1).real + np.vdot(w2, w2).real)
    if tot > P:
        f = math.sqrt(P / tot) * (1.0 - 1e-12)
        w1, w2 = w1 * f, w2 * f

    th = [np.diag(state.beta_of(m) * state.phi(m)) for m in ("reflect", "transmit", "jam")]
    g1 = ch.h_r1.conj() @ th[0] @ ch.H_br + ch.h_b1.conj()
    j1 = ch.h_r1.conj() @ th[2] @ ch.H_br
    g2 = ch.h_t2.conj() @ th[1] @ ch.H_br
    ge = ch.h_re.conj() @ th[0] @ ch.H_br + ch.h_be.conj()
    je = ch.h_re.conj() @ th[2] @ ch.H_br
    gam = 2.0 ** tau - 1.0

    def p(g, w):
        return float(abs(g @ w) ** 2)

    def best_scale(w1, w2):
        """Interval of c such that (sqrt(c) w1, w2) meets power, leakage and SIC."""
        e1, je1, je2 = p(ge, w1), p(je, w1), p(je, w2)
        jw2 = p(j1, w2) if cfg.algo_params.jamming_full_leakage else 0.0
        a11, a12, jw1 = p(g1, w1), p(g1, w2), p(j1, w1)
        b21, b22 = p(g2, w1), p(g2, w2)
        n1 = float(np.vdot(w1, w1).real)
        spare = P - float(np.vdot(w2, w2).real)
        hi = max(spare, 0.0) / n1 * (1.0 - 1e-12) if n1 > 0 else 1.0
        lo = 0.0
        if e1 - gam * je1 > 0:
            hi = min(hi, gam * (je2 + s2) / (e1 - gam * je1) * (1.0 - 1e-9))
        # SIC: c * alpha >= beta_
        alpha = a12 * b21 - b22 * (a11 + jw1)
        beta_ = b22 * (jw2 + s2) - a12 * s2
        if alpha > 0:
            lo = max(lo, beta_ / alpha * (1.0 + 1e-9))
        elif alpha < 0:
            hi = min(hi, beta_ / alpha * (1.0 - 1e-9))
        elif beta_ > 0:
            return None
        return (lo, hi) if hi >= lo else None

    def rate_of(c, w1, w2):
        cand = BeamformerSolution.from_vectors(math.sqrt(c) * w1, w2)
        rep = evaluate_solution(ch, cand, state, cfg)
        ok = rep.leakage_ok and rep.sic_ok
        return (rep.sum_rate if ok else -math.inf), cand.w1, cand.w2

    best = (0.0, np.zeros_like(w1), np.zeros_like(w2))
    # keep w2 or switch it off, whichever gives the higher feasible sum rate
    for cand2 in (w2, np.zeros_like(w2)):
        window = best_scale(w1, cand2)
        if window is None:
            continue
        lo, hi = window
        grid = np.unique(np.concatenate([[lo, hi], np.linspace(lo, hi, 17)]))
        for c in grid:
            val = rate_of(c, w1, cand2)
            if val[0] > best[0]:
                best = val
    return best


# -- stages ----------------------------------------------------------------------

@dataclass
class _Ctx:
    eff: EffectiveChannels
    params: StageParams
    cfg: SystemConfig
    allowed: np.ndarray
    trace: list[TraceRow]
    numerical_events: int = 0

    @property
    def algo(self):
        return self.cfg.algo_params


def _attempt(ctx: _Ctx, prob, stage: str) -> Optional[ConicSolution]:
    """Solve; a numerical limit returns None (the caller keeps its feasible anchor)."""
    try:
        return _solve(prob, ctx.algo.solver_tol, stage)
    except StageFailure as exc:
        if exc.status != "numerical-limit":
            raise
        ctx.numerical_events += 1
        return None


def _sca(ctx: _Ctx, Z: tuple, W: tuple, outer: int):
    """P2 inner loop from one anchor; returns (W, s, trace rows)."""
    algo, params, eff = ctx.algo, ctx.params, ctx.eff
    c = _eve_scale(eff, W[0], W[1], Z, params)
    W = (c * W[0], W[1])
    parts, _, _ = evaluate_parts(eff, *W, *Z, params)
    s_prev = s = _s_at(parts)
    rows = []
    for i in range(algo.max_inner):
        mus = multipliers_at(parts, params, algo.mu_update)
        sol = _attempt(ctx, build_p2(eff, Z, params, mus, block_scales(parts)), "active")
        if sol is None:
            break
        W = beam_matrices(sol, eff.H2.shape[1])
        s = float(sol["s"])
        rows.append(TraceRow("active", outer, i, s, _rate(s)))
        parts, _, _ = evaluate_parts(eff, *W, *Z, params)
        if abs(s - s_prev) <= algo.epsilon:
            break
        s_prev = s
    return W, s, rows


def _active_stage(ctx: _Ctx, Z: tuple, W: tuple, outer: int, record: bool = True):
    """Inner P2 loop from the carried-over beams and from the two single-user
    anchors (all power on one beam); the run with the largest s is kept."""
    total = float(np.real(np.trace(W[0]) + np.trace(W[1])))
    anchors = [W]
    N = W[0].shape[0]
    zero = np.zeros((N, N), dtype=complex)
    for keep in (0, 1):
        Wk = W[keep]
        tr = float(np.real(np.trace(Wk)))
        if tr > 0 and tr < total * (1 - 1e-9):
            solo = [zero, zero]
            solo[keep] = Wk * (max(total, 1e-12) / tr)
            anchors.append(tuple(solo))
    best = None
    for anchor in anchors:
        try:
            run = _sca(ctx, Z, anchor, outer)
        except StageFailure:
            if anchor is W:
                raise
            continue
        if best is None or run[1] > best[1] + 1e-9:
            best = run
    W, s, rows = best
    if record:
        ctx.trace.extend(rows)
    return W, s


def _passive_stage(ctx: _Ctx, W: tuple, pen: PenaltyState, outer: int):
    algo, params, eff = ctx.algo, ctx.params, ctx.eff
    cur = pen.iterate
    parts, _, _ = evaluate_parts(eff, *W, *cur.matrices(), params)
    s_prev = _s_at(parts)
    for i in range(algo.max_inner):
        mus = multipliers_at(parts, params, algo.mu_update)
        prob = build_p3(eff, W[0], W[1], pen, params, mus, allowed=ctx.allowed,
                        rank_variant=algo.rank_surrogate, binary_sign=algo.binary_penalty_sign,
                        scales=block_scales(parts))
        sol = _attempt(ctx, prob, "passive")
        if sol is None:
            break
        cur = unpack_lifted(sol, eff.H2.shape[0], prob.supports)
        s = float(sol["s"])
        ctx.trace.append(TraceRow("passive", outer, i, s, _rate(s)))
        if algo.penalty_schedule == "inner":
            pen = update_penalties(pen, algo.omega, cur)
        else:
            pen = replace(pen, iterate=cur)
        parts, _, _ = evaluate_parts(eff, *W, *cur.matrices(), params)
        if abs(s - s_prev) <= algo.epsilon:
            break
        s_prev = s
    if algo.penalty_schedule == "outer":
        pen = update_penalties(pen, algo.omega, cur)
    return cur, pen


def _polish(ctx: _Ctx, W: tuple, relaxed: PassiveLifted, modes: np.ndarray, xi: float, outer: int):
    """Phase refinement with the binary modes fixed, escalating the rank penalty until rank one."""
    algo, params, eff = ctx.algo, ctx.params, ctx.eff
    try:
        anchor = _exact_lift(extract_phases(*relaxed.matrices(), modes))
    except DegenerateExtractionError as exc:
        raise StageFailure("polish", "degenerate") from exc
    # the projected point may break the Eve constraint for the current w1
    c = _eve_scale(eff, W[0], W[1], anchor.matrices(), params)
    W = (c * W[0], W[1])
    pen = PenaltyState(zeta=0.0, xi=xi, iterate=anchor)
    cur = anchor
    parts, _, _ = evaluate_parts(eff, *W, *cur.matrices(), params)
    s = _s_at(parts)
    for i in range(algo.max_polish):
        mus = multipliers_at(parts, params, algo.mu_update)
        prob = build_p3(eff, W[0], W[1], pen, params, mus, fixed_beta=modes,
                        rank_variant=algo.rank_surrogate, scales=block_scales(parts))
        sol = _attempt(ctx, prob, "polish")
        if sol is None:
            break
        cur = unpack_lifted(sol, eff.H2.shape[0], prob.supports, beta=modes)
        s = float(sol["s"])
        ctx.trace.append(TraceRow("polish", outer, i, s, _rate(s)))
        gaps = [rank_gap(Z) for Z, act in zip(cur.matrices(), modes.any(axis=1)) if act]
        if max(gaps, default=0.0) <= algo.rank_tol:
            break
        pen = update_penalties(pen, algo.omega, cur)
        parts, _, _ = evaluate_parts(eff, *W, *cur.matrices(), params)
    return cur, W, s


# -- driver ----------------------------------------------------------------------

def optimize(ch: ChannelRealization, cfg: SystemConfig, scheme: str | Scheme = "star-jam") -> SolutionRecord:
    """Alternate P2 and P3 until the outer rate settles; returns a SolutionRecord."""
    scheme = get_scheme(scheme)
    K, N = ch.K, ch.N
    algo = cfg.algo_params
    P = cfg.power
    scale = math.sqrt(P / cfg.sigma2)
    raw = build_effective_channels(ch)
    eff = EffectiveChannels(raw.H1 * scale, raw.H2 * scale, raw.He * scale)
    params = StageParams(power=1.0, sigma2=1.0, tau=cfg.tau, sic_trace_order=algo.sic_trace_order,
                         full_jamming_leakage=algo.jamming_full_leakage)
    allowed = scheme.allowed(K)
    ctx = _Ctx(eff, params, cfg, allowed, [])
    rng = _rng(ch, cfg, 1)

    beta0 = scheme.initial_beta(K)
    lifted = _relaxed_lift(beta0, rng)
    W = _initial_beams(eff, lifted.matrices())
    record = SolutionRecord(None, None, None, None, ctx.trace, scheme=scheme.name)

    try:
        try:
            W, s1 = _active_stage(ctx, lifted.matrices(), W, 0)
        except StageFailure:
            jam = scheme.jam_capable(K)[: math.ceil(K / 4)]
            if jam.size == 0:
                raise
            beta0 = beta0.copy()
            beta0[:, jam] = 0.0
            beta0[2, jam] = 1.0
            lifted = _relaxed_lift(beta0, rng)
            ctx.trace.clear()
            W, s1 = _active_stage(ctx, lifted.matrices(), _initial_beams(eff, lifted.matrices()), 0)

        if not allowed.any():
            state = StarRisState(*(np.zeros(K) for _ in range(3)), *(np.zeros(K, complex) for _ in range(3)))
            lifted = _exact_lift(state)
            ctx.trace.append(TraceRow("outer", 0, 0, s1, _rate(s1)))
            status = "converged"
        else:
            pen = PenaltyState(algo.zeta0, algo.xi0, lifted)
            status = "iteration-cap"
            prev_r2 = None
            for outer in range(algo.max_outer):
                if outer > 0:
                    W, s1 = _active_stage(ctx, lifted_state(state), W, outer)
                r1 = _rate(s1)
                relaxed, pen = _passive_stage(ctx, W, pen, outer)
                modes = one_hot_project(relaxed.beta, allowed)
                lifted, W, s2 = _polish(ctx, W, relaxed, modes, pen.xi, outer)
                try:
                    state = extract_phases(*lifted.matrices(), modes)
                except DegenerateExtractionError as exc:
                    raise StageFailure("extract", "degenerate") from exc
                r2 = _rate(s2)
                ctx.trace.append(TraceRow("outer", outer, 0, s2, r2))
                pen = replace(pen, iterate=_exact_lift(state))
                if abs(r2 - r1) <= algo.epsilon and (prev_r2 is None or abs(r2 - prev_r2) <= algo.epsilon):
                    status = "converged"
                    break
                prev_r2 = r2
            # beams matched to the final surface configuration
            W, _ = _active_stage(ctx, lifted_state(state), W, len(record.outer_rates) - 1, record=False)
    except StageFailure as exc:
        record.status = "infeasible"
        record.failed_stage = exc.stage
        record.numerical_events = ctx.numerical_events
        if not record.trace:
            record.trace.append(TraceRow(exc.stage, 0, 0, math.nan, math.nan))
        return record

    amp = math.sqrt(P)

    def score(w1, w2):
        return repair_beams(ch, state, amp * w1, amp * w2, cfg)

    beams = extract_beamformers(W[0], W[1], score=score, rng=_rng(ch, cfg, 2),
                                samples=algo.randomization_samples)
    if beams.path_1 == "principal" and beams.path_2 == "principal":
        _, w1, w2 = score(beams.w1, beams.w2)
    else:
        w1, w2 = beams.w1, beams.w2
    beams = replace(beams, w1=w1, w2=w2, W1=W[0] * P, W2=W[1] * P)
    record.beams = beams
    record.state = state
    record.lifted = lifted
    record.report = evaluate_solution(ch, beams, state, cfg)
    record.status = status
    record.numerical_events = ctx.numerical_events
    return record
