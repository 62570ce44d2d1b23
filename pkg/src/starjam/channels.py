"""Path loss, fading draws and per-realization channel generation.

Random numbers come from numpy's PCG64. Each link has its own stream seeded by
``SeedSequence(entropy=seed, spawn_key=(link_index,))`` with ``link_index`` from
``LINKS``, so a link's draw never depends on the dimensions of other links.
Complex Gaussian entries are ``(x + 1j*y)/sqrt(2)`` with ``x`` then ``y``
drawn as standard normal arrays of the target shape.

LoS components use a far-field uniform linear array model with half-wavelength
spacing along the y axis (the STAR-RIS surface and the BS array both lie along
y): entry ``k`` of the steering vector toward a node seen at angle ``phi`` from
the surface normal is ``exp(1j*pi*k*sin(phi))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .config import SystemConfig

LINKS = ("H_br", "h_r1", "h_t2", "h_re", "h_b1", "h_be")


def path_loss(distance: float, exponent: float, lambda0: float) -> float:
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return lambda0 * distance ** (-exponent)


def _cn(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    x = rng.standard_normal(shape)
    y = rng.standard_normal(shape)
    return (x + 1j * y) / math.sqrt(2.0)


def draw_rayleigh(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return _cn(rng, (rows, cols))


def draw_rician(rows: int, cols: int, k_factor: float, rng: np.random.Generator,
                los: np.ndarray | None = None) -> np.ndarray:
    """sqrt(k/(1+k)) * LoS + sqrt(1/(1+k)) * CN(0, 1), unit per-entry power.

    ``los`` must be unit-modulus with shape (rows, cols); all-ones if omitted.
    """
    if k_factor < 0:
        raise ValueError(f"k_factor must be >= 0, got {k_factor}")
    if los is None:
        los = np.ones((rows, cols), dtype=complex)
    scatter = _cn(rng, (rows, cols))
    if math.isinf(k_factor):
        return np.asarray(los, dtype=complex).copy()
    return math.sqrt(k_factor / (1 + k_factor)) * los + math.sqrt(1 / (1 + k_factor)) * scatter


def steering(n: int, sin_angle: float) -> np.ndarray:
    return np.exp(1j * math.pi * np.arange(n) * sin_angle)


def _sin_from_normal(src: tuple[float, float], dst: tuple[float, float]) -> float:
    # arrays lie along y, so the angle from the normal has sine dy / d
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    return dy / math.hypot(dx, dy)


@dataclass(frozen=True)
class ChannelRealization:
    H_br: np.ndarray   # K x N
    h_r1: np.ndarray   # K
    h_t2: np.ndarray   # K
    h_re: np.ndarray   # K
    h_b1: np.ndarray   # N
    h_be: np.ndarray   # N
    seed_used: int = 0

    @property
    def K(self) -> int:
        return self.H_br.shape[0]

    @property
    def N(self) -> int:
        return self.H_br.shape[1]

    def __post_init__(self):
        K, N = self.H_br.shape
        for name, n in (("h_r1", K), ("h_t2", K), ("h_re", K), ("h_b1", N), ("h_be", N)):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
        for name in LINKS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")

    def scaled(self, factor: float) -> "ChannelRealization":
        """Every link multiplied by ``factor`` (cascades pick up factor**2)."""
        return ChannelRealization(self.H_br * factor, self.h_r1 * factor, self.h_t2 * factor,
                                  self.h_re * factor, self.h_b1 * factor, self.h_be * factor,
                                  self.seed_used)


def link_rng(seed: int, link: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(LINKS.index(link),))
    return np.random.Generator(np.random.PCG64(ss))


def los_components(cfg: SystemConfig) -> dict[str, np.ndarray]:
    """Deterministic unit-modulus LoS parts of the Rician links (geometry only)."""
    g, K, N = cfg.geometry, cfg.K, cfg.N
    a_ris_bs = steering(K, _sin_from_normal(g.ris, g.bs))
    a_bs_ris = steering(N, _sin_from_normal(g.bs, g.ris))
    return {
        "H_br": np.outer(a_ris_bs, a_bs_ris.conj()),
        "h_r1": steering(K, _sin_from_normal(g.ris, g.user1)),
        "h_t2": steering(K, _sin_from_normal(g.ris, g.user2)),
        "h_re": steering(K, _sin_from_normal(g.ris, g.eve)),
    }


def link_gains(cfg: SystemConfig) -> dict[str, float]:
    """Mean per-entry power of every link."""
    g, c = cfg.geometry, cfg.channel_params
    return {
        "H_br": path_loss(g.distance("bs", "ris"), c.alpha_los, c.lambda0),
        "h_r1": path_loss(g.distance("ris", "user1"), c.alpha_nlos_r, c.lambda0),
        "h_t2": path_loss(g.distance("ris", "user2"), c.alpha_nlos_t, c.lambda0),
        "h_re": path_loss(g.distance("ris", "eve"), c.alpha_nlos_r, c.lambda0),
        "h_b1": path_loss(g.distance("bs", "user1"), c.alpha_direct, c.lambda0),
        "h_be": path_loss(g.distance("bs", "eve"), c.alpha_direct, c.lambda0),
    }


def generate_channels(cfg: SystemConfig, seed: int) -> ChannelRealization:
    """One fading draw: Rician on BS-RIS and RIS-side links, Rayleigh on direct links."""
    from .config import ValidationError, validate

    problems = validate(cfg)
    if problems:
        raise ValidationError(problems)
    K, N, kf = cfg.K, cfg.N, cfg.channel_params.rician_k
    los = los_components(cfg)
    gains = link_gains(cfg)
    out = {}
    out["H_br"] = draw_rician(K, N, kf, link_rng(seed, "H_br"), los["H_br"])
    for name in ("h_r1", "h_t2", "h_re"):
        out[name] = draw_rician(K, 1, kf, link_rng(seed, name), los[name][:, None])[:, 0]
    for name in ("h_b1", "h_be"):
        out[name] = draw_rayleigh(N, 1, link_rng(seed, name))[:, 0]
    for name in LINKS:
        out[name] = out[name] * math.sqrt(gains[name])
    return ChannelRealization(seed_used=seed, **out)


# -- text dump -------------------------------------------------------------

_HEADER = "# starjam channel dump v1"


def dump_channels(ch: ChannelRealization, path: Union[str, Path]) -> None:
    """One realization per file: ``link <name> <rows> <cols>`` then ``re im`` lines."""
    lines = [_HEADER, f"seed {ch.seed_used}"]
    for name in LINKS:
        arr = np.atleast_2d(getattr(ch, name))
        if arr.shape[0] == 1 and name != "H_br":
            arr = arr.reshape(-1, 1)
        lines.append(f"link {name} {arr.shape[0]} {arr.shape[1]}")
        lines.extend(f"{float(z.real)!r} {float(z.imag)!r}" for z in arr.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def load_channels(path: Union[str, Path]) -> ChannelRealization:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != _HEADER:
        raise ValueError(f"{path}: not a channel dump")
    seed = int(lines[1].split()[1])
    arrays = {}
    i = 2
    while i < len(lines):
        _, name, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        vals = [complex(float(a), float(b)) for a, b in (ln.split() for ln in lines[i + 1:i + 1 + rows * cols])]
        arr = np.array(vals, dtype=complex).reshape(rows, cols)
        arrays[name] = arr if name == "H_br" else arr[:, 0]
        i += 1 + rows * cols
    return ChannelRealization(seed_used=seed, **arrays)
