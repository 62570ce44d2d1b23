"""Exhaustive reference optimizer for tiny instances (K <= 3, N <= 2).

Enumerates every mode assignment and every element phase on a uniform grid.
For each surface configuration the beam directions are mixtures
``cos(t) u1 + sin(t) exp(1j p) u2`` of the unit matched filters ``u1, u2``
toward the two users' effective channels (a single direction when N = 1).
Powers come from a grid over p2 in [0, Pmax]; for each (directions, p2) the
interval of p1 satisfying the budget, full leakage and SIC order is computed
in closed form and sampled on ``power_split_grid`` points including both ends.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import ChannelRealization
from .config import SystemConfig
from .optimize import evaluate_solution
from .rates import BeamformerSolution, StarRisState
from .schemes import get_scheme


class GridGuardError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    phase_grid: int = 16
    power_split_grid: int = 33
    direction_grid: int = 8      # per mixing angle, N = 2 only

    def __post_init__(self):
        if self.phase_grid < 2:
            raise GridGuardError(f"phase_grid must be >= 2, got {self.phase_grid}")
        if self.power_split_grid < 2:
            raise GridGuardError(f"power_split_grid must be >= 2, got {self.power_split_grid}")


@dataclass(frozen=True)
class OracleResult:
    sum_rate: float
    state: Optional[StarRisState]
    beams: Optional[BeamformerSolution]
    evaluated: int


def _directions(N: int, u1: np.ndarray, u2: np.ndarray, n: int) -> np.ndarray:
    if N == 1:
        return np.ones((1, 1), dtype=complex)
    out = [u1, u2]
    for t in np.linspace(0.0, math.pi / 2, n + 1)[1:-1]:
        for ph in np.arange(n) * (2 * math.pi / n):
            d = math.cos(t) * u1 + math.sin(t) * np.exp(1j * ph) * u2
            nd = np.linalg.norm(d)
            if nd > 1e-12:
                out.append(d / nd)
    return np.array(out)


def _unit(v: np.ndarray, N: int) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 1e-300 else np.eye(N, dtype=complex)[0]


def brute_force_best(ch: ChannelRealization, cfg: SystemConfig, grid: GridSpec = GridSpec(),
                     scheme: str = "star-jam") -> OracleResult:
    K, N = ch.K, ch.N
    if K > 3 or N > 2:
        raise GridGuardError(f"brute force limited to K <= 3 and N <= 2, got K={K}, N={N}")
    P, s2 = cfg.power, cfg.sigma2
    gam = 2.0 ** cfg.tau - 1.0
    full = cfg.algo_params.jamming_full_leakage
    allowed = get_scheme(scheme).allowed(K)
    phases = np.arange(grid.phase_grid) * (2 * math.pi / grid.phase_grid)
    mode_choices = [[z for z in range(3) if allowed[z, k]] or [None] for k in range(K)]
    p2_grid = np.linspace(0.0, P, grid.power_split_grid)
    frac = np.linspace(0.0, 1.0, grid.power_split_grid)

    best_val, best_cfg, count = -math.inf, None, 0
    for modes in itertools.product(*mode_choices):
        beta = np.zeros((3, K))
        for k, z in enumerate(modes):
            if z is not None:
                beta[z, k] = 1.0
        active = [k for k in range(K) if modes[k] is not None]
        for ph_active in itertools.product(phases, repeat=len(active)):
            ph = np.zeros(K)
            ph[active] = ph_active
            state = StarRisState.from_modes(beta, ph)
            resp = [state.beta_of(m) * state.phi(m) for m in ("reflect", "transmit", "jam")]
            g1 = (ch.h_r1.conj() * resp[0]) @ ch.H_br + ch.h_b1.conj()
            j1 = (ch.h_r1.conj() * resp[2]) @ ch.H_br
            g2 = (ch.h_t2.conj() * resp[1]) @ ch.H_br
            ge = (ch.h_re.conj() * resp[0]) @ ch.H_br + ch.h_be.conj()
            je = (ch.h_re.conj() * resp[2]) @ ch.H_br
            D = _directions(N, _unit(g1.conj(), N), _unit(g2.conj(), N), grid.direction_grid)

            def gain(g):
                return np.abs(D @ g) ** 2

            G1, J1, G2, E, JE = gain(g1), gain(j1), gain(g2), gain(ge), gain(je)
            # axes: (direction of w1, direction of w2, p2, split)
            a11, jw1, b21, e1, je1 = (x[:, None, None, None] for x in (G1, J1, G2, E, JE))
            a12u, b22u, je2u, j12u = (x[None, :, None, None] for x in (G1, G2, JE, J1))
            p2 = p2_grid[None, None, :, None]
            a12, b22, je2 = a12u * p2, b22u * p2, je2u * p2
            jw2 = j12u * p2 if full else 0.0
            hi = np.broadcast_to(P - p2, np.broadcast_shapes(a11.shape, a12.shape)).copy()
            with np.errstate(divide="ignore", invalid="ignore"):
                leak = gam * (je2 + s2) / (e1 - gam * je1)
                hi = np.where(e1 - gam * je1 > 0, np.minimum(hi, leak), hi)
                alpha = a12 * b21 - b22 * (a11 + jw1)
                beta_ = b22 * (jw2 + s2) - a12 * s2
                lo = np.where(alpha > 0, np.maximum(beta_ / alpha, 0.0), 0.0)
                hi = np.where(alpha < 0, np.minimum(hi, beta_ / alpha), hi)
            ok = (hi >= lo) & ~((alpha == 0) & (beta_ > 0))
            hi = np.where(ok, hi * (1.0 - 1e-9), 0.0)
            lo = np.where(ok, np.minimum(lo * (1.0 + 1e-9), hi), 0.0)
            p1 = lo + (hi - lo) * frac[None, None, None, :]
            den11 = a12 + p1 * jw1 + jw2 + s2
            r11 = np.log2(1.0 + p1 * a11 / den11)
            r22 = np.log2(1.0 + b22 / (p1 * b21 + s2))
            val = np.where(ok, r11 + r22, -math.inf)
            count += val.size
            idx = np.unravel_index(int(np.argmax(val)), val.shape)
            if val[idx] > best_val:
                i1, i2, ip, _ = idx
                w1 = math.sqrt(float(p1[idx])) * D[i1]
                w2 = math.sqrt(float(p2_grid[ip])) * D[i2]
                best_val, best_cfg = float(val[idx]), (state, BeamformerSolution.from_vectors(w1, w2))

    if best_cfg is None:
        return OracleResult(0.0, None, None, count)
    state, beams = best_cfg
    rep = evaluate_solution(ch, beams, state, cfg)
    return OracleResult(rep.sum_rate, state, beams, count)
