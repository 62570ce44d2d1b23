"""SINRs, rates, effective channels and the lifted trace forms.

Lifting convention: ``phi_z`` holds the diagonal of ``Theta_z``. The lifted
STAR-RIS matrices are ``R = v_r v_r^H`` with ``v_r = conj([phi_r; 1])``,
``T = v_t v_t^H`` with ``v_t = conj(phi_t)`` and ``J = v_j v_j^H`` with
``v_j = conj([phi_j; 0])``. With the row-augmented effective channels this gives
``Tr(H1 W H1^H R) = |(h_r1^H Theta_r H_br + h_b1^H) w|^2`` for ``W = w w^H``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .channels import ChannelRealization

Mode = Literal["reflect", "transmit", "jam"]
MODES: tuple[Mode, ...] = ("reflect", "transmit", "jam")


@dataclass(frozen=True)
class StarRisState:
    beta_r: np.ndarray
    beta_t: np.ndarray
    beta_j: np.ndarray
    phi_r: np.ndarray
    phi_t: np.ndarray
    phi_j: np.ndarray
    # max_k ||entry_k| - 1| before the unit-modulus projection, when extracted
    modulus_deviation: float = 0.0

    @property
    def K(self) -> int:
        return len(self.beta_r)

    @property
    def beta(self) -> np.ndarray:
        """3 x K mode matrix, rows (reflect, transmit, jam)."""
        return np.vstack([self.beta_r, self.beta_t, self.beta_j])

    def phi(self, mode: Mode) -> np.ndarray:
        return {"reflect": self.phi_r, "transmit": self.phi_t, "jam": self.phi_j}[mode]

    def beta_of(self, mode: Mode) -> np.ndarray:
        return {"reflect": self.beta_r, "transmit": self.beta_t, "jam": self.beta_j}[mode]

    def counts(self) -> tuple[int, int, int]:
        b = np.rint(self.beta).astype(int)
        return int(b[0].sum()), int(b[1].sum()), int(b[2].sum())

    @classmethod
    def from_modes(cls, modes: np.ndarray, phases: np.ndarray) -> "StarRisState":
        """Binary state from a 3 x K 0/1 matrix and a K-vector of phases (radians)."""
        modes = np.asarray(modes, dtype=float)
        resp = np.exp(1j * np.asarray(phases, dtype=float))
        return cls(modes[0].copy(), modes[1].copy(), modes[2].copy(),
                   modes[0] * resp, modes[1] * resp, modes[2] * resp)


@dataclass(frozen=True)
class BeamformerSolution:
    w1: np.ndarray
    w2: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    rank_residual_1: float = 0.0
    rank_residual_2: float = 0.0
    path_1: str = "principal"
    path_2: str = "principal"

    @classmethod
    def from_vectors(cls, w1: np.ndarray, w2: np.ndarray) -> "BeamformerSolution":
        w1 = np.asarray(w1, dtype=complex)
        w2 = np.asarray(w2, dtype=complex)
        return cls(w1, w2, np.outer(w1, w1.conj()), np.outer(w2, w2.conj()))


@dataclass(frozen=True)
class RateReport:
    sinr_11: float
    sinr_22: float
    sinr_12: float
    sinr_e1: float
    r_11: float
    r_22: float
    r_12: float
    r_e1: float
    sum_rate: float
    leakage_ok: bool
    sic_ok: bool
    power_used: float

    FIELDS = ("sinr_11", "sinr_22", "sinr_12", "sinr_e1", "r_11", "r_22", "r_12", "r_e1",
              "sum_rate", "leakage_ok", "sic_ok", "power_used")

    def to_row(self) -> str:
        """One whitespace-separated text row in ``FIELDS`` order."""
        out = []
        for name in self.FIELDS:
            v = getattr(self, name)
            out.append(str(int(v)) if isinstance(v, (bool, np.bool_)) else repr(float(v)))
        return " ".join(out)

    @classmethod
    def header(cls) -> str:
        return " ".join(cls.FIELDS)


@dataclass(frozen=True)
class EffectiveChannels:
    H1: np.ndarray   # (K+1) x N
    H2: np.ndarray   # K x N
    He: np.ndarray   # (K+1) x N


def assemble_theta(state: StarRisState, mode: Mode) -> np.ndarray:
    """diag(beta_z * phi_z); for relaxed states the mode weight scales the response."""
    return np.diag(state.beta_of(mode) * state.phi(mode).astype(complex))


def build_effective_channels(ch: ChannelRealization) -> EffectiveChannels:
    H1 = np.vstack([ch.h_r1.conj()[:, None] * ch.H_br, ch.h_b1.conj()[None, :]])
    H2 = ch.h_t2.conj()[:, None] * ch.H_br
    He = np.vstack([ch.h_re.conj()[:, None] * ch.H_br, ch.h_be.conj()[None, :]])
    return EffectiveChannels(H1, H2, He)


def lift(phi: np.ndarray, tail: float | None = None) -> np.ndarray:
    """Rank-one lifted matrix of a response vector (see module docstring)."""
    v = np.conj(np.asarray(phi, dtype=complex))
    if tail is not None:
        v = np.append(v, tail)
    return np.outer(v, v.conj())


def lifted_state(state: StarRisState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(R, T, J) rank-one lifts of a binary state."""
    return lift(state.phi_r, 1.0), lift(state.phi_t), lift(state.phi_j, 0.0)


def lifted_trace(H: np.ndarray, W: np.ndarray, M: np.ndarray) -> float:
    """Re Tr(H W H^H M); asserts the imaginary part is numerically zero."""
    if H.shape[1] != W.shape[0] or W.shape[0] != W.shape[1] or M.shape != (H.shape[0], H.shape[0]):
        raise ValueError(f"dimension mismatch: H {H.shape}, W {W.shape}, M {M.shape}")
    val = np.trace(H @ W @ H.conj().T @ M)
    scale = max(1.0, np.linalg.norm(H) ** 2 * np.linalg.norm(W) * np.linalg.norm(M))
    assert abs(val.imag) <= 1e-10 * scale, f"trace has imaginary part {val.imag}"
    return float(val.real)


def compute_rates(ch: ChannelRealization, beams, state: StarRisState, sigma2: float, tau: float,
                  full_jamming_leakage: bool = False) -> RateReport:
    """Evaluate the four SINRs and rates for given beamformers and STAR-RIS state.

    ``beams`` needs ``w1`` and ``w2`` attributes. With ``full_jamming_leakage``
    the User1 SINR denominators also include the w2 jamming term.
    """
    w1 = np.asarray(beams.w1, dtype=complex)
    w2 = np.asarray(beams.w2, dtype=complex)
    K, N = ch.H_br.shape
    if w1.shape != (N,) or w2.shape != (N,) or state.K != K:
        raise ValueError(f"dimension mismatch: w1 {w1.shape}, w2 {w2.shape}, K={state.K}, channels {K}x{N}")

    Tr, Tt, Tj = (assemble_theta(state, m) for m in MODES)
    g1 = ch.h_r1.conj() @ Tr @ ch.H_br + ch.h_b1.conj()
    j1 = ch.h_r1.conj() @ Tj @ ch.H_br
    g2 = ch.h_t2.conj() @ Tt @ ch.H_br
    ge = ch.h_re.conj() @ Tr @ ch.H_br + ch.h_be.conj()
    je = ch.h_re.conj() @ Tj @ ch.H_br

    p = lambda g, w: float(abs(g @ w) ** 2)  # noqa: E731
    jam1 = p(j1, w1) + (p(j1, w2) if full_jamming_leakage else 0.0)
    sinr_11 = p(g1, w1) / (p(g1, w2) + jam1 + sigma2)
    sinr_22 = p(g2, w2) / (p(g2, w1) + sigma2)
    sinr_12 = p(g1, w2) / (p(g1, w1) + jam1 + sigma2)
    sinr_e1 = p(ge, w1) / (p(je, w1) + p(je, w2) + sigma2)

    r = {k: float(np.log2(1.0 + v)) for k, v in
         (("11", sinr_11), ("22", sinr_22), ("12", sinr_12), ("e1", sinr_e1))}
    return RateReport(
        sinr_11=sinr_11, sinr_22=sinr_22, sinr_12=sinr_12, sinr_e1=sinr_e1,
        r_11=r["11"], r_22=r["22"], r_12=r["12"], r_e1=r["e1"],
        sum_rate=r["11"] + r["22"],
        leakage_ok=r["e1"] <= tau + 1e-6,
        sic_ok=r["12"] >= r["22"] - 1e-6,
        power_used=float(np.vdot(w1, w1).real + np.vdot(w2, w2).real),
    )
