"""Passive beamforming stage: penalized lifted STAR-RIS subproblem with beams fixed."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .active import StageParams, add_common, ratio_parts
from .conic import Affine, ConicProblem
from .rates import EffectiveChannels, StarRisState


class ProjectionError(ValueError):
    pass


class DegenerateExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class PassiveLifted:
    R: np.ndarray          # (K+1) x (K+1)
    T: np.ndarray          # K x K
    J: np.ndarray          # (K+1) x (K+1)
    beta: np.ndarray       # 3 x K

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.R, self.T, self.J


@dataclass(frozen=True)
class PenaltyState:
    zeta: float
    xi: float
    iterate: PassiveLifted


def update_penalties(pen: PenaltyState, omega: float, iterate: Optional[PassiveLifted] = None) -> PenaltyState:
    return replace(pen, zeta=pen.zeta * omega, xi=pen.xi * omega,
                   iterate=iterate if iterate is not None else pen.iterate)


def dominant(Z: np.ndarray) -> tuple[float, np.ndarray]:
    lam, U = np.linalg.eigh(0.5 * (Z + Z.conj().T))
    return float(lam[-1]), U[:, -1]


def rank_gap(Z: np.ndarray) -> float:
    """(||Z||_* - ||Z||_2) / max(||Z||_2, 1e-12) for a PSD matrix."""
    lam = np.clip(np.linalg.eigvalsh(0.5 * (Z + Z.conj().T)), 0.0, None)
    return float((lam.sum() - lam[-1]) / max(lam[-1], 1e-12))


def binary_surrogate(beta: np.ndarray, beta0: np.ndarray) -> np.ndarray:
    """Upper bound of beta - beta^2, tight at beta0 (elementwise)."""
    return beta - beta0 ** 2 - 2.0 * beta0 * (beta - beta0)


def rank_surrogate(Z: np.ndarray, Z0: np.ndarray, variant: str = "dc") -> float:
    """Linearized nuclear-minus-spectral-norm penalty of Z around Z0."""
    l0, u = dominant(Z0)
    lin = float(np.real(u.conj() @ (Z - Z0) @ u))
    tr = float(np.real(np.trace(Z)))
    if variant == "dc":
        return tr - l0 - lin
    return tr + l0 + lin


def supports(K: int, allowed: Optional[np.ndarray] = None, fixed_beta: Optional[np.ndarray] = None) -> dict:
    """Index sets each lifted matrix lives on; every other row/column is identically zero.

    R keeps its augmented slot K. J's augmented slot is pinned to zero and is
    always dropped, so the PSD blocks keep a strictly feasible interior.
    """
    if fixed_beta is not None:
        on = np.asarray(fixed_beta) > 0.5
    else:
        on = np.ones((3, K), dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    idx = [np.flatnonzero(on[zi]) for zi in range(3)]
    return {"R": np.append(idx[0], K), "T": idx[1], "J": idx[2]}


def unpack_lifted(sol, K: int, supp: dict, beta: Optional[np.ndarray] = None) -> PassiveLifted:
    """Full-size (R, T, J) from a P3 solution, with zero rows/columns restored."""
    sizes = {"R": K + 1, "T": K, "J": K + 1}
    full = {}
    for name, n in sizes.items():
        Z = np.zeros((n, n), dtype=complex)
        S = supp[name]
        if S.size:
            Z[np.ix_(S, S)] = sol[name]
        full[name] = Z
    if beta is None:
        beta = np.vstack([np.real(np.diag(full["R"]))[:K], np.real(np.diag(full["T"])),
                          np.real(np.diag(full["J"]))[:K]])
        beta = np.clip(beta, 0.0, 1.0)
    return PassiveLifted(full["R"], full["T"], full["J"], np.asarray(beta, dtype=float).copy())


def build_p3(eff: EffectiveChannels, W1: np.ndarray, W2: np.ndarray, pen: PenaltyState, params: StageParams,
             mus: dict, allowed: Optional[np.ndarray] = None, fixed_beta: Optional[np.ndarray] = None,
             rank_variant: str = "dc", binary_sign: int = 1, scales: Optional[dict] = None) -> ConicProblem:
    """Penalized passive problem over (R, T, J, beta) for fixed W1, W2.

    ``allowed`` (3 x K bool) marks the modes each element may take; disallowed
    coefficients are fixed to zero. ``fixed_beta`` pins all mode coefficients
    (the polish solve after one-hot projection). Each lifted matrix is declared
    only on its support (see ``supports``); use ``unpack_lifted`` to recover
    the full matrices.
    """
    K, N = eff.H2.shape
    if W1.shape != (N, N) or W2.shape != (N, N):
        raise ValueError(f"beam matrices must be {N}x{N}")
    allowed = np.ones((3, K), dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    supp = supports(K, allowed, fixed_beta)

    prob = ConicProblem("P3")
    prob.supports = supp
    Zv = {}
    for name in "RTJ":
        if supp[name].size:
            Zv[name] = prob.add_variable(name, "hermitian", supp[name].size)
            prob.add_psd(Zv[name])
    pos = {name: {int(k): i for i, k in enumerate(supp[name])} for name in "RTJ"}

    def diag(name, k):
        return Zv[name].diag(pos[name][k])

    beta: list[list] = [[Affine() for _ in range(K)] for _ in range(3)]
    free: list[tuple[int, int]] = []
    for zi, name in enumerate("RTJ"):
        for k in supp[name]:
            k = int(k)
            if k == K:
                continue
            if fixed_beta is not None:
                prob.add_eq(diag(name, k), float(fixed_beta[zi, k]))
                beta[zi][k] = Affine(const=float(fixed_beta[zi, k]))
            else:
                # the diagonal entry is the relaxed mode coefficient
                beta[zi][k] = diag(name, k)
                prob.add_le(beta[zi][k], 1.0)
                free.append((zi, k))
    prob.add_eq(diag("R", K), 1.0)
    if fixed_beta is None:
        for k in range(K):
            if allowed[:, k].any():
                prob.add_eq(beta[0][k] + beta[1][k] + beta[2][k], 1.0)

    H = {"H1": eff.H1, "H2": eff.H2, "He": eff.He}
    Ws = {1: W1, 2: W2}
    cache = {}

    def q(h, m, z):
        if z not in Zv:
            return Affine()
        key = (h, m, z)
        if key not in cache:
            Q = H[h] @ Ws[m] @ H[h].conj().T
            S = supp[z]
            cache[key] = Q[np.ix_(S, S)]
        return Zv[z].inner(cache[key])

    parts, eve, sic = ratio_parts(q, params.sigma2, params.full_jamming_leakage)
    s, _ = add_common(prob, parts, eve, sic, params, mus, scales)

    obj = Affine.lift(s)
    it = pen.iterate
    if free:
        pen_bin = Affine()
        for zi, k in free:
            b0 = float(it.beta[zi, k])
            pen_bin = pen_bin + (beta[zi][k] * (1.0 - 2.0 * b0) + b0 ** 2)
        obj = obj - (binary_sign * pen.zeta) * pen_bin
    pen_rank = Affine()
    for name, Z0 in zip("RTJ", it.matrices()):
        if name not in Zv:
            continue
        S = supp[name]
        # lambda^H Z0 lambda = ||Z0||_2, so both variants reduce to Tr(Z) -/+ lambda^H Z lambda
        _, u = dominant(Z0[np.ix_(S, S)])
        sub = Zv[name].inner(np.outer(u, u.conj()))
        if rank_variant == "dc":
            pen_rank = pen_rank + Zv[name].trace() - sub
        else:
            pen_rank = pen_rank + Zv[name].trace() + sub
    obj = obj - pen.xi * pen_rank
    prob.set_objective(obj, "maximize")
    return prob


def one_hot_project(beta: np.ndarray, allowed: Optional[np.ndarray] = None) -> np.ndarray:
    """Largest entry of each column to 1, others to 0; ties go reflect > transmit > jam."""
    beta = np.asarray(beta, dtype=float)
    K = beta.shape[1]
    allowed = np.ones((3, K), dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    out = np.zeros_like(beta)
    for k in range(K):
        if not allowed[:, k].any():
            continue
        col = beta[:, k]
        if abs(col.sum() - 1.0) > 1e-3:
            raise ProjectionError(f"column {k} sums to {col.sum():.6f}, expected 1")
        masked = np.where(allowed[:, k], col, -np.inf)
        out[int(np.argmax(masked)), k] = 1.0
    return out


def extract_phases(R: np.ndarray, T: np.ndarray, J: np.ndarray, modes: np.ndarray) -> StarRisState:
    """Unit-modulus responses from the dominant eigenvectors of the lifted matrices."""
    modes = np.asarray(modes, dtype=float)
    K = modes.shape[1]
    phis = []
    deviation = 0.0
    for zi, (name, Z) in enumerate((("R", R), ("T", T), ("J", J))):
        active = modes[zi] > 0.5
        phi = np.zeros(K, dtype=complex)
        if active.any():
            lam, u = dominant(Z)
            if lam <= 1e-10:
                raise DegenerateExtractionError(f"{name} has no dominant direction but {active.sum()} active elements")
            v = np.sqrt(lam) * u
            if name == "R" and abs(v[K]) >= 1e-6:
                v = v / v[K]
            entries = np.conj(v[:K])[active]
            mod = np.abs(entries)
            deviation = max(deviation, float(np.max(np.abs(mod - 1.0))))
            unit = np.where(mod > 0, entries / np.where(mod > 0, mod, 1.0), 1.0)
            phi[active] = unit
        phis.append(phi)
    return StarRisState(modes[0].copy(), modes[1].copy(), modes[2].copy(), *phis,
                        modulus_deviation=deviation)
