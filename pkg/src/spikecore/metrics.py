"""Energy and latency estimates from memory-access counts.

Energy is modeled as (total row accesses) x (energy per access); per-step
latency as ceil(accesses / parallel ports) x (latency per access).  The
default coefficients are placeholders for unpublished hardware constants;
pass calibrated values through the run configuration when available.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidCostModel
from .runtime import AccessCounters, RunResult


@dataclass(frozen=True)
class CostModel:
    energy_per_row_access_pj: float = 100.0
    latency_per_row_access_ns: float = 50.0
    parallel_ports: int = 16

    def check(self) -> None:
        if self.energy_per_row_access_pj <= 0:
            raise InvalidCostModel("energy_per_row_access_pj must be positive")
        if self.latency_per_row_access_ns <= 0:
            raise InvalidCostModel("latency_per_row_access_ns must be positive")
        if self.parallel_ports < 1:
            raise InvalidCostModel("parallel_ports must be >= 1")

    @staticmethod
    def from_mapping(raw: dict) -> "CostModel":
        model = CostModel(
            energy_per_row_access_pj=float(
                raw.get("energy_per_row_access_pj", CostModel.energy_per_row_access_pj)
            ),
            latency_per_row_access_ns=float(
                raw.get("latency_per_row_access_ns", CostModel.latency_per_row_access_ns)
            ),
            parallel_ports=int(raw.get("parallel_ports", CostModel.parallel_ports)),
        )
        model.check()
        return model


@dataclass(frozen=True)
class EnergyEstimate:
    total_accesses: int
    energy_total_pj: float
    energy_per_step_pj: float
    latency_per_step_ns: tuple[float, ...]
    latency_mean_ns: float
    latency_max_ns: float


def estimate(
    counters: AccessCounters,
    model: CostModel,
    steps: int,
    per_step_accesses: list[int] | None = None,
) -> EnergyEstimate:
    """Pure function of counters and coefficients; linear in access count."""
    model.check()
    if steps < 1:
        raise ValueError("steps must be >= 1")
    total = counters.total()
    energy = total * model.energy_per_row_access_pj

    if per_step_accesses is None:
        per_step_accesses = [total // steps] * steps
    lat = tuple(
        -(-a // model.parallel_ports) * model.latency_per_row_access_ns
        for a in per_step_accesses
    )
    return EnergyEstimate(
        total_accesses=total,
        energy_total_pj=energy,
        energy_per_step_pj=energy / steps,
        latency_per_step_ns=lat,
        latency_mean_ns=sum(lat) / len(lat) if lat else 0.0,
        latency_max_ns=max(lat) if lat else 0.0,
    )


def _histogram(per_step: list[int]) -> list[str]:
    if not per_step:
        return ["per_step_accesses: (none)"]
    lines = ["per_step_accesses:"]
    for t, n in enumerate(per_step):
        lines.append(f"  step {t}: {n}")
    return lines


def report(
    result: RunResult,
    steps: int,
    model: CostModel | None = None,
    neurons: int | None = None,
    axons: int | None = None,
    density: float | None = None,
) -> str:
    """Deterministic structured-text summary of one run."""
    lines = [f"steps: {steps}", f"output_spikes: {len(result.raster)}"]
    if neurons is not None:
        lines.append(f"neurons: {neurons}")
    if axons is not None:
        lines.append(f"axons: {axons}")
    if density is not None:
        lines.append(f"packing_density: {density:.6f}")
    c = result.counters
    if c is not None:
        lines += [
            f"locator_reads: {c.locator_reads}",
            f"synapse_row_reads: {c.synapse_row_reads}",
            f"image_writes: {c.image_writes}",
            f"total_accesses: {c.total()}",
        ]
        if model is not None and steps >= 1:
            est = estimate(c, model, steps, result.per_step_accesses or None)
            lines += [
                f"energy_total_pj: {est.energy_total_pj:.3f}",
                f"energy_per_step_pj: {est.energy_per_step_pj:.3f}",
                f"latency_mean_ns: {est.latency_mean_ns:.3f}",
                f"latency_max_ns: {est.latency_max_ns:.3f}",
            ]
        lines += _histogram(result.per_step_accesses)
    if result.traffic is not None:
        t0, t1, t2 = result.traffic.totals()
        lines += [
            f"routed_events_board: {t0}",
            f"routed_events_server: {t1}",
            f"routed_events_cross_server: {t2}",
            f"max_inbox: {result.traffic.max_inbox}",
        ]
    return "\n".join(lines) + "\n"
