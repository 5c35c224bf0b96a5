"""Closed-form survival curves of the data-generating models, with optional degradation."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .datagen import GompertzCphSpec, SIM1, SIM2, SIM3

__all__ = ["OracleModel", "survival", "degrade"]

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(h):
    h = h ^ (h >> np.uint64(30))
    h = h * _M1
    h = h ^ (h >> np.uint64(27))
    h = h * _M2
    return h ^ (h >> np.uint64(31))


def _row_noise(Z, seed: int) -> np.ndarray:
    """Standard normal value that is a fixed pseudo-random function of each covariate row."""
    Z = np.ascontiguousarray(np.atleast_2d(np.asarray(Z, dtype=float)) + 0.0)  # drops -0.0
    bits = Z.view(np.uint64)
    start = (int(seed) * 0x9E3779B97F4A7C15 + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    h = np.full(Z.shape[0], start, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for k in range(bits.shape[1]):
            h = _mix(h ^ bits[:, k])
        h = _mix(h + _GOLDEN)
    u = ((h >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53
    return ndtri(u)


@dataclass(frozen=True)
class OracleModel:
    """Exact survival curve ``exp(-(lam/alpha) e^{eta} (e^{alpha t} - 1))`` of a Gompertz spec.

    ``noise_level`` in [0, 1] mixes the linear predictor with a seeded
    per-covariate-row normal draw: ``(1-level)*eta + level*noise_scale*xi(Z)``.
    The result stays a deterministic function of ``(t, Z)``.
    """

    spec: GompertzCphSpec
    noise_level: float = 0.0
    noise_scale: float = 1.0
    noise_seed: int = 0

    @property
    def kind(self) -> str:
        if self.spec.alpha_rule is not None:
            return "nonph"
        return "sim2" if self.spec.offset else "cph"

    @classmethod
    def cph(cls, alpha=SIM1.alpha, lam=SIM1.lam, beta=SIM1.beta):
        return cls(replace(SIM1, alpha=alpha, lam=lam, beta=tuple(beta)))

    @classmethod
    def nonph(cls, lam=SIM3.lam, beta=SIM3.beta):
        return cls(replace(SIM3, lam=lam, beta=tuple(beta)))

    @classmethod
    def sim2(cls, alpha=SIM2.alpha, lam=SIM2.lam):
        return cls(replace(SIM2, alpha=alpha, lam=lam))

    def linear_predictor(self, Z) -> np.ndarray:
        eta = self.spec.linear_predictor(Z)
        if self.noise_level:
            eta = ((1.0 - self.noise_level) * eta
                   + self.noise_level * self.noise_scale * _row_noise(Z, self.noise_seed))
        return eta

    def log_survival(self, t, Z) -> np.ndarray:
        """``log S(t; Z)``; shape ``(n,)`` for scalar ``t``, else ``(n, len(t))``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("t must be nonnegative")
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        alpha = self.spec.alpha_of(Z)
        scale = self.spec.lam * np.exp(self.linear_predictor(Z)) / alpha
        if t.ndim == 0:
            return -scale * np.expm1(alpha * t)
        return -scale[:, None] * np.expm1(alpha[:, None] * t.reshape(1, -1))

    def survival(self, t, Z) -> np.ndarray:
        return np.exp(self.log_survival(t, Z))


def survival(model: OracleModel, t, Z):
    return model.survival(t, Z)


def degrade(model: OracleModel, level: float, seed: int = 0, scale: float = None) -> OracleModel:
    """Blend the model's linear predictor with seeded noise; ``level=0`` is the model itself."""
    if not 0 <= level <= 1:
        raise ValueError("degradation level must lie in [0, 1]")
    kw = {"noise_level": float(level), "noise_seed": int(seed)}
    if scale is not None:
        kw["noise_scale"] = float(scale)
    return replace(model, **kw)
