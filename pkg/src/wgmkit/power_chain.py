"""Input-line power budget and intracavity energy bookkeeping.

Two coupling conventions coexist here, as in the measurement accounting they
reproduce:

* the probe "coupling loss" in the dB budget is ``-10 log10(beta1)``
  (0.02 -> 16.99 dB), applied by :func:`chain_apply`;
* the on-resonance absorbed fraction ``4 beta1 / (1 + beta1 + beta2)**2`` is
  applied separately by :func:`intracavity_state` when turning incident
  power into dissipated power and stored energy.

Feeding the output of :func:`chain_apply` into :func:`intracavity_state`
therefore counts the probe coupling twice. With Q_L = 2e8 and -140 dBm this
still gives a mean photon number of order 10^2 rather than ~1; no combination
of the stated numbers gives unity, and the calculator reports what the
formulas give.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.constants import h as PLANCK_H

from .errors import ValidationError


@dataclass(frozen=True)
class ChainStage:
    name: str
    gain_db: float

    def __post_init__(self):
        if not math.isfinite(self.gain_db):
            raise ValidationError(f"stage {self.name!r}: gain_db must be finite")


@dataclass(frozen=True)
class PowerChain:
    """Ordered input-line stages plus probe couplings. Output-side amplifiers do not belong here."""

    stages: tuple = field(default_factory=tuple)
    beta1: float = 1.0
    beta2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        for s in self.stages:
            if not isinstance(s, ChainStage):
                raise ValidationError("stages must be ChainStage instances")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")

    @property
    def total_gain_db(self) -> float:
        return math.fsum(s.gain_db for s in self.stages)

    def to_dict(self) -> dict:
        return {
            "stages": [{"name": s.name, "gain_db": s.gain_db} for s in self.stages],
            "beta1": self.beta1,
            "beta2": self.beta2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PowerChain":
        try:
            stages = [ChainStage(str(s["name"]), float(s["gain_db"])) for s in d.get("stages", [])]
            return cls(stages, float(d.get("beta1", 1.0)), float(d.get("beta2", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"invalid chain config: {exc}") from None


@dataclass(frozen=True)
class IntracavityState:
    p_abs: float
    energy: float
    photon_number: float
    photon_energy: float

    def to_dict(self) -> dict:
        return {
            "p_abs": self.p_abs,
            "energy": self.energy,
            "photon_number": self.photon_number,
            "photon_energy": self.photon_energy,
        }


def measurement_chain(beta1: float = 0.02) -> PowerChain:
    """The cryogenic measurement input line: 50 dB cold, 40 dB warm attenuation, 7 dB cables."""
    return PowerChain(
        stages=(
            ChainStage("cryogenic attenuation", -50.0),
            ChainStage("room-temperature attenuation", -40.0),
            ChainStage("cables", -7.0),
        ),
        beta1=beta1,
        beta2=0.0,
    )


def dbm_to_watts(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watts_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValidationError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_w / 1e-3)


def coupling_loss_db(beta: float) -> float:
    """Probe coupling loss ``-10 log10(beta)`` in dB."""
    if not (math.isfinite(beta) and beta > 0):
        raise ValidationError(f"coupling coefficient must be > 0, got {beta}")
    return -10.0 * math.log10(beta)


def chain_apply(source_dbm: float, chain: PowerChain) -> float:
    """Power at the resonator in dBm: source plus stage gains minus the probe coupling loss."""
    if not math.isfinite(source_dbm):
        raise ValidationError("source power must be finite")
    return math.fsum([source_dbm, *(s.gain_db for s in chain.stages), -coupling_loss_db(chain.beta1)])


def coupling_factor(beta1: float, beta2: float = 0.0) -> float:
    """On-resonance fraction of incident power dissipated in the resonator."""
    return 4.0 * beta1 / (1.0 + beta1 + beta2) ** 2


def intracavity_state(p_inc: float, chain: PowerChain, q_loaded: float, f0: float) -> IntracavityState:
    """Absorbed power, stored energy ``Q_L P_abs / omega0`` and mean photon number."""
    if not (p_inc >= 0 and math.isfinite(p_inc)):
        raise ValidationError("p_inc must be finite and >= 0")
    if not (q_loaded > 0 and f0 > 0):
        raise ValidationError("q_loaded and f0 must be positive")
    p_abs = p_inc * coupling_factor(chain.beta1, chain.beta2)
    energy = q_loaded * p_abs / (2.0 * math.pi * f0)
    photon_energy = PLANCK_H * f0
    return IntracavityState(p_abs, energy, energy / photon_energy, photon_energy)

