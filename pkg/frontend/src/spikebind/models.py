"""Neuron model parameter holders used when building networks."""

from __future__ import annotations

from dataclasses import dataclass

SHIFT_MIN, SHIFT_MAX = -17, 17
LEAK_MIN, LEAK_MAX = 0, 63
THRESHOLD_MAX = (1 << 31) - 1
WEIGHT_MIN, WEIGHT_MAX = -(1 << 15), (1 << 15) - 1


class NetworkBuildError(ValueError):
    """A network passed to the constructor violates a structural rule."""


@dataclass(frozen=True)
class LIF:
    """Leaky integrate-and-fire: strict threshold, shifted 17-bit noise, leak.

    leak is a shift exponent: each step v decays by trunc(v / 2**leak), so
    leak=63 means no visible decay and leak=0 drains the membrane entirely.
    shift=-17 silences the noise term.
    """

    threshold: int
    shift: int = -17
    leak: int = 63

    def check(self, where: str) -> None:
        if not (0 <= self.threshold <= THRESHOLD_MAX):
            raise NetworkBuildError(f"{where}: threshold {self.threshold} out of range")
        if not (SHIFT_MIN <= self.shift <= SHIFT_MAX):
            raise NetworkBuildError(f"{where}: shift {self.shift} out of [-17, 17]")
        if not (LEAK_MIN <= self.leak <= LEAK_MAX):
            raise NetworkBuildError(f"{where}: leak {self.leak} out of [0, 63]")

    def canonical(self) -> tuple:
        return ("lif", self.threshold, self.shift, self.leak)


@dataclass(frozen=True)
class Binary:
    """Stateless thresholding unit: fires on this step's input alone."""

    threshold: int

    def check(self, where: str) -> None:
        if not (0 <= self.threshold <= THRESHOLD_MAX):
            raise NetworkBuildError(f"{where}: threshold {self.threshold} out of range")

    def canonical(self) -> tuple:
        return ("binary", self.threshold, 0, 0)
