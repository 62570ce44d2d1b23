"""Active beamforming stage: the convexified lifted subproblem with the STAR-RIS fixed.

Each SINR lower bound ``r <= A / Gamma`` is written in product form
``r * Gamma <= A`` and convexified with the arithmetic-geometric mean bound
``r * Gamma <= ((mu * Gamma)^2 + (r / mu)^2) / 2`` at a fixed multiplier ``mu``:

    y >= (mu * Gamma)^2,   a >= (r / mu)^2,   y + a <= 2 A.

The bound is tight when ``mu = sqrt(r / Gamma)``. The constraint on ``a`` is
the rotated cone ``r^2 <= mu^2 * a``. A multiplier of ``None`` pins the slack
``r`` to zero and drops its cones (used when the signal term is identically
zero at the anchor point).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .conic import Affine, ConicProblem, ConicSolution, solve
from .rates import BeamformerSolution, EffectiveChannels

MU_FLOOR = 1e-8
RATIOS = ("11", "22", "12")


@dataclass(frozen=True)
class StageParams:
    """Physical constants a subproblem needs (in whatever units the caller normalized to)."""

    power: float
    sigma2: float
    tau: float
    sic_trace_order: bool = False
    full_jamming_leakage: bool = False

    @property
    def leak_sinr(self) -> float:
        return 2.0 ** self.tau - 1.0


@dataclass(frozen=True)
class ActiveSlack:
    s: float
    r11: float
    r22: float
    r12: float
    a: dict
    mu: dict
    Gamma: dict


def update_mu12(r12: float, Gamma: float, tau: Optional[float] = None) -> float:
    """AGM multiplier sqrt(r12 / Gamma), floored at MU_FLOOR.

    With ``tau`` given, uses the literal variant sqrt(r12 / tau) instead.
    """
    if tau is None:
        if not Gamma > 0:
            raise ValueError(f"Gamma must be positive, got {Gamma}")
        denom = Gamma
    else:
        denom = tau
    if r12 < 0:
        raise ValueError(f"r12 must be nonnegative, got {r12}")
    return max(math.sqrt(r12 / denom), MU_FLOOR)


def ratio_parts(q: Callable, sigma2: float, full_jam: bool):
    """Signal/interference terms of the three SINRs and the Eve constraint.

    ``q(H, m, Z)`` must return the lifted form Tr(H W_m H^H Z) for
    ``H`` in {"H1", "H2", "He"}, beam ``m`` in {1, 2} and ``Z`` in {"R", "T", "J"},
    as a number or an affine expression.
    """
    jam1 = q("H1", 1, "J")
    if full_jam:
        jam1 = jam1 + q("H1", 2, "J")
    parts = {
        "11": (q("H1", 1, "R"), q("H1", 2, "R") + jam1 + sigma2),
        "22": (q("H2", 2, "T"), q("H2", 1, "T") + sigma2),
        "12": (q("H1", 2, "R"), q("H1", 1, "R") + jam1 + sigma2),
    }
    eve = (q("He", 1, "R"), q("He", 1, "J"))
    sic = (q("H1", 1, "R"), q("H2", 2, "T"))
    return parts, eve, sic


def add_ratio(prob: ConicProblem, tag: str, A, Gamma, mu: Optional[float],
              a_scale: float = 1.0, r_scale: float = 1.0):
    """AGM block for ``r * Gamma <= A``; returns ``r`` as an expression.

    Solver variables are stored divided by their expected magnitude (``a`` and
    ``y`` by ``a_scale``, ``r`` by ``r_scale``) so that all cones stay O(1).
    """
    if mu is None:
        return prob.define(f"r{tag}", Affine())
    rv = prob.add_variable(f"r{tag}_n")
    prob.add_ge(rv, 0.0)
    r = prob.define(f"r{tag}", rv * r_scale)
    a = prob.add_variable(f"a{tag}")
    y = prob.add_variable(f"y{tag}")
    k = 1.0 / math.sqrt(a_scale)
    prob.add_rotated_soc((mu * k) * Gamma, y, 1.0)
    prob.add_rotated_soc(rv * (r_scale * k / mu), a, 1.0)
    prob.add_le(y + a, (2.0 / a_scale) * A)
    return r


def add_common(prob: ConicProblem, parts, eve, sic, params: StageParams, mus: dict,
               scales: Optional[dict] = None):
    """Slack/AGM blocks, objective cone, rate order, Eve and optional SIC trace constraint.

    ``scales`` (from ``block_scales``) only changes the internal variable
    scaling, never the feasible set.
    """
    scales = scales or {}
    asc, rsc = scales.get("A", {}), scales.get("r", {})
    r = {t: add_ratio(prob, t, parts[t][0], parts[t][1], mus.get(t), asc.get(t, 1.0), rsc.get(t, 1.0))
         for t in RATIOS}
    u1, u2 = 1.0 + rsc.get("11", 0.0), 1.0 + rsc.get("22", 0.0)
    sn = prob.add_variable("s_n")
    prob.add_ge(sn, 0.0)
    s = prob.define("s", sn * math.sqrt(u1 * u2))
    # s^2 <= (1 + r11)(1 + r22), each factor divided by its expected size
    prob.add_rotated_soc(sn, (1.0 + r["11"]) / u1, (1.0 + r["22"]) / u2)
    if mus.get("22") is not None:
        prob.add_ge(r["12"] - r["22"], 0.0)
    num, jam = eve
    prob.add_le(num, params.leak_sinr * (params.sigma2 + jam))
    if params.sic_trace_order:
        prob.add_le(sic[0], sic[1])
    return s, r


def _quad_forms(eff: EffectiveChannels, R, T, J):
    H = {"H1": eff.H1, "H2": eff.H2, "He": eff.He}
    Z = {"R": R, "T": T, "J": J}
    cache = {}

    def form(h, z):
        key = (h, z)
        if key not in cache:
            Hm = H[h]
            cache[key] = Hm.conj().T @ Z[z] @ Hm
        return cache[key]

    return form


def build_p2(eff: EffectiveChannels, lifted: tuple, params: StageParams, mus: dict,
             scales: Optional[dict] = None) -> ConicProblem:
    """Lifted active-beamforming problem for fixed (R, T, J).

    ``mus`` maps "11", "22", "12" to AGM multipliers (``None`` pins that slack to 0).
    """
    R, T, J = lifted
    K, N = eff.H2.shape
    if R.shape != (K + 1, K + 1) or J.shape != (K + 1, K + 1) or T.shape != (K, K):
        raise ValueError(f"lifted state shapes {R.shape}, {T.shape}, {J.shape} do not match K={K}")
    for name, Z in (("R", R), ("T", T), ("J", J)):
        if np.linalg.eigvalsh(0.5 * (Z + Z.conj().T))[0] < -1e-7 * max(1.0, np.abs(Z).max()):
            raise ValueError(f"lifted {name} is not positive semidefinite")
    for t in RATIOS:
        if mus.get(t) is not None and not mus[t] > 0:
            raise ValueError(f"multiplier for ratio {t} must be positive")

    prob = ConicProblem("P2")
    # a beam whose own SINR slack is pinned to zero can only interfere, so it is fixed at zero
    W = {}
    power = Affine()
    for m, t in ((1, "11"), (2, "22")):
        if mus.get(t) is None:
            continue
        W[m] = prob.add_variable(f"W{m}", "hermitian", N)
        prob.add_psd(W[m])
        power = power + W[m].trace()
    if W:
        prob.add_le(power, params.power)

    form = _quad_forms(eff, R, T, J)
    parts, eve, sic = ratio_parts(lambda h, m, z: W[m].inner(form(h, z)) if m in W else Affine(), params.sigma2,
                                  params.full_jamming_leakage)
    s, _ = add_common(prob, parts, eve, sic, params, mus, scales)
    prob.set_objective(s, "maximize")
    return prob


def evaluate_parts(eff: EffectiveChannels, W1, W2, R, T, J, params: StageParams):
    """Numeric (A, Gamma) per ratio, plus Eve terms, at a given point."""
    Ws = {1: W1, 2: W2}
    form = _quad_forms(eff, R, T, J)
    q = lambda h, m, z: float(np.real(np.sum(form(h, z).T * Ws[m])))  # noqa: E731  Tr(Q W)
    return ratio_parts(q, params.sigma2, params.full_jamming_leakage)


def multipliers_at(parts, params: StageParams, mu_update: str = "agm", a_floor: float = 1e-6) -> dict:
    """AGM multipliers that make the bound tight at the given point.

    The slack is taken at its largest value there, r = A / Gamma. Ratios whose
    signal term is (numerically) zero get ``None``.
    """
    mus = {}
    for t in RATIOS:
        A, G = parts[t]
        if A <= a_floor * max(1.0, params.sigma2):
            mus[t] = None
            continue
        r = A / G
        mus[t] = update_mu12(r, G, tau=params.tau if mu_update == "literal" else None)
    # r12 only bounds r22 from above; with r22 pinned it can be pinned too
    if mus["22"] is None:
        mus["12"] = None
    return mus


def beam_matrices(sol: ConicSolution, N: int) -> tuple[np.ndarray, np.ndarray]:
    """(W1, W2) from a P2 solution; a beam fixed at zero is returned as the zero matrix."""
    z = np.zeros((N, N), dtype=complex)
    v = sol.variable_values
    return v.get("W1", z), v.get("W2", z)


def block_scales(parts) -> dict:
    """Expected magnitudes at a point: signal terms ("A") and SINR slacks ("r"), at least 1."""
    return {"A": {t: max(1.0, float(parts[t][0])) for t in RATIOS},
            "r": {t: max(1.0, float(parts[t][0] / parts[t][1])) for t in RATIOS}}


def solve_p2(eff, lifted, params: StageParams, mus: dict, tol: float,
             scales: Optional[dict] = None) -> tuple[ConicSolution, Optional[ActiveSlack]]:
    prob = build_p2(eff, lifted, params, mus, scales)
    sol = solve(prob, tol)
    if sol.status != "optimal":
        return sol, None
    v = sol.variable_values
    slack = ActiveSlack(
        s=v["s"], r11=v["r11"], r22=v["r22"], r12=v["r12"],
        a={t: v.get(f"a{t}", 0.0) * (scales or {}).get("A", {}).get(t, 1.0) for t in RATIOS}, mu=dict(mus),
        Gamma={t: p[1] for t, p in evaluate_parts(eff, *beam_matrices(sol, eff.H2.shape[1]), *lifted,
                                                      params)[0].items()},
    )
    return sol, slack


def _principal(W: np.ndarray) -> tuple[np.ndarray, float, np.ndarray, np.ndarray]:
    W = 0.5 * (W + W.conj().T)
    lam, U = np.linalg.eigh(W)
    lam = np.clip(lam, 0.0, None)
    l1 = lam[-1]
    w = math.sqrt(l1) * U[:, -1]
    resid = float(lam[-2] / l1) if (len(lam) > 1 and l1 > 0) else 0.0
    return w, resid, lam, U


def extract_beamformers(W1: np.ndarray, W2: np.ndarray, score=None, rng=None,
                        samples: int = 100, threshold: float = 1e-3) -> BeamformerSolution:
    """Rank-one beamformers from lifted matrices.

    Principal eigenvector scaled by sqrt(lambda_max). When a residual
    lambda_2/lambda_1 exceeds ``threshold`` the beam is marked "randomized":
    ``samples`` Gaussian draws from the lifted covariance (scaled to Tr(W)) are
    scored by ``score(w1, w2) -> (value, repaired_w1, repaired_w2)`` together with the
    principal candidate, and the best repaired pair is kept. Without a scorer the
    principal candidate is kept.
    """
    w1, res1, lam1, U1 = _principal(W1)
    w2, res2, lam2, U2 = _principal(W2)
    path1 = "randomized" if res1 > threshold else "principal"
    path2 = "randomized" if res2 > threshold else "principal"
    if (path1 == "randomized" or path2 == "randomized") and score is not None:
        rng = rng if rng is not None else np.random.default_rng(0)
        best = score(w1, w2)

        def draw(lam, U, W, principal, randomize):
            if not randomize:
                return principal
            z = (rng.standard_normal(len(lam)) + 1j * rng.standard_normal(len(lam))) / math.sqrt(2)
            v = U @ (np.sqrt(lam) * z)
            nv = np.linalg.norm(v)
            return v * math.sqrt(max(np.real(np.trace(W)), 0.0)) / nv if nv > 0 else principal

        for _ in range(samples):
            c1 = draw(lam1, U1, W1, w1, path1 == "randomized")
            c2 = draw(lam2, U2, W2, w2, path2 == "randomized")
            cand = score(c1, c2)
            if cand[0] > best[0]:
                best = cand
        w1, w2 = best[1], best[2]
    return BeamformerSolution(w1=w1, w2=w2, W1=W1, W2=W2, rank_residual_1=res1, rank_residual_2=res2,
                              path_1=path1, path_2=path2)
