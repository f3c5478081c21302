"""Multiplicative efficiency chain of the pigtailed source.

The chain runs first-lens brightness -> pillar-to-fiber coupling ->
splice transmission -> filter transmission -> fibered brightness.
Uncertainties are propagated to first order: relative variances add in
quadrature for products and ratios.  predict_brightness computes the
chain forward; infer_coupling inverts it for the one factor that cannot
be measured directly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import MissingFactorError


@dataclass(frozen=True)
class Measured:
    """A dimensionless value with a one-sigma absolute uncertainty."""

    value: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")

    @property
    def relative(self) -> float:
        return self.sigma / self.value if self.value != 0.0 else np.inf

    def __str__(self) -> str:
        return f"{self.value:.4f} +/- {self.sigma:.4f}"


# Measured chain values of the characterized reference device.
REFERENCE_BUDGET_VALUES = {
    "first_lens_brightness": Measured(0.468, 0.025),
    "pillar_to_fiber": Measured(0.75, 0.05),
    "splice_transmission": Measured(0.90, 0.02),
    "filter_transmission": Measured(0.66, 0.02),
    "fibered_brightness": Measured(0.208, 0.008),
}


@dataclass(frozen=True)
class EfficiencyBudget:
    """The loss chain from first-lens brightness to fibered brightness.

    Any factor may be None, meaning unknown; the two inference
    operations each require a specific subset to be present.
    """

    first_lens_brightness: Measured | None = None
    pillar_to_fiber: Measured | None = None
    splice_transmission: Measured | None = None
    filter_transmission: Measured | None = None
    fibered_brightness: Measured | None = None

    def __post_init__(self):
        for name in self.factor_names():
            m = getattr(self, name)
            if m is not None and not 0.0 <= m.value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {m.value}")

    @staticmethod
    def factor_names() -> tuple[str, ...]:
        return (
            "first_lens_brightness",
            "pillar_to_fiber",
            "splice_transmission",
            "filter_transmission",
            "fibered_brightness",
        )

    @classmethod
    def reference_values(cls) -> "EfficiencyBudget":
        return cls(**REFERENCE_BUDGET_VALUES)

    def with_factor(self, name: str, measured: Measured | None) -> "EfficiencyBudget":
        return replace(self, **{name: measured})


def _product_with_quadrature(factors: list[Measured]) -> Measured:
    value = 1.0
    rel_var = 0.0
    for m in factors:
        value *= m.value
        if m.value == 0.0:
            return Measured(0.0, 0.0)
        rel_var += m.relative**2
    return Measured(value, abs(value) * float(np.sqrt(rel_var)))


def predict_brightness(budget: EfficiencyBudget) -> Measured:
    """Fibered brightness predicted from the four upstream factors.

    Product of first-lens brightness, pillar-to-fiber coupling, splice
    and filter transmissions, with relative errors added in quadrature.
    Raises MissingFactorError when an upstream factor is absent.
    """
    names = (
        "first_lens_brightness",
        "pillar_to_fiber",
        "splice_transmission",
        "filter_transmission",
    )
    factors = []
    for name in names:
        m = getattr(budget, name)
        if m is None:
            raise MissingFactorError(f"cannot predict brightness without {name}")
        factors.append(m)
    return _product_with_quadrature(factors)


def infer_coupling(budget: EfficiencyBudget) -> tuple[Measured, bool]:
    """Pillar-to-fiber coupling inferred from the measured brightness.

    Divides the fibered brightness by the product of the other measured
    factors; relative errors add in quadrature.  Returns the inferred
    coupling and an in-range flag that is False when the central value
    falls outside [0, 1] (the value itself is NOT clamped).
    """
    names = ("first_lens_brightness", "splice_transmission", "filter_transmission")
    denom = []
    for name in names:
        m = getattr(budget, name)
        if m is None:
            raise MissingFactorError(f"cannot infer coupling without {name}")
        if m.value == 0.0:
            raise ZeroDivisionError(f"{name} is zero; chain cannot be inverted")
        denom.append(m)
    fibered = budget.fibered_brightness
    if fibered is None:
        raise MissingFactorError("cannot infer coupling without fibered_brightness")
    if fibered.value == 0.0:
        return Measured(0.0, 0.0), True

    value = fibered.value
    rel_var = fibered.relative**2
    for m in denom:
        value /= m.value
        rel_var += m.relative**2
    result = Measured(value, abs(value) * float(np.sqrt(rel_var)))
    in_range = 0.0 <= result.value <= 1.0
    return result, in_range


# Candidate explanations the measurement-vs-simulation comparison can
# point at when the values disagree only mildly.
DISCREPANCY_NOTES = (
    "imperfections on the measured micropillar size",
    "overestimation of the splice transmission loss",
    "overestimation of the filtering-system transmission loss",
)

FIRST_LENS_ASSUMPTION = (
    "assumes the first-lens brightness is unaltered by the pigtailing process"
)


@dataclass(frozen=True)
class DiscrepancyReport:
    """Outcome of comparing an inferred coupling to a simulated one."""

    inferred: Measured
    simulated: float
    difference: float
    sigma_distance: float
    verdict: str
    notes: tuple[str, ...]
    assumptions: tuple[str, ...] = (FIRST_LENS_ASSUMPTION,)

    def as_text(self) -> str:
        lines = [
            f"inferred  = {self.inferred}",
            f"simulated = {self.simulated:.4f}",
            f"difference = {self.difference:+.4f} ({self.sigma_distance:.2f} sigma)",
            f"verdict = {self.verdict}",
            "assumptions:",
        ]
        lines += [f"  - {a}" for a in self.assumptions]
        if self.notes:
            lines.append("candidate explanations:")
            lines += [f"  - {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def compare_to_simulation(inferred: Measured, simulated: float) -> DiscrepancyReport:
    """Compare an inferred coupling against a simulated prediction.

    The verdict is "consistent" within 2 sigma, "marginal" within 3,
    "inconsistent" beyond that.
    """
    diff = inferred.value - simulated
    sigma_distance = abs(diff) / inferred.sigma if inferred.sigma > 0 else (
        0.0 if diff == 0.0 else np.inf
    )
    if sigma_distance < 2.0:
        verdict = "consistent"
    elif sigma_distance < 3.0:
        verdict = "marginal"
    else:
        verdict = "inconsistent"
    notes = DISCREPANCY_NOTES if diff != 0.0 else ()
    return DiscrepancyReport(
        inferred=inferred,
        simulated=simulated,
        difference=diff,
        sigma_distance=float(sigma_distance),
        verdict=verdict,
        notes=notes,
    )


def write_budget_file(budget: EfficiencyBudget, path) -> None:
    """Write the key-value budget format: ``name = value +- sigma`` lines.

    Unknown factors are omitted.  Lines starting with '#' are comments.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# efficiency budget: factor = value +- sigma\n")
        for name in EfficiencyBudget.factor_names():
            m = getattr(budget, name)
            if m is not None:
                fh.write(f"{name} = {m.value:.9g} +- {m.sigma:.9g}\n")


def read_budget_file(path) -> EfficiencyBudget:
    """Parse the key-value budget format written by write_budget_file."""
    values: dict[str, Measured] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed budget line: {raw!r}")
            name, rhs = (part.strip() for part in line.split("=", 1))
            if name not in EfficiencyBudget.factor_names():
                raise ValueError(f"unknown budget factor {name!r}")
            if "+-" in rhs:
                val_s, sig_s = (part.strip() for part in rhs.split("+-", 1))
            else:
                val_s, sig_s = rhs, "0"
            values[name] = Measured(float(val_s), float(sig_s))
    return EfficiencyBudget(**values)
