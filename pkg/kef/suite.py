"""Runs several distributional equations on one law and summarizes the verdicts."""

import logging
from collections.abc import Sequence

import numpy as np

from kef.constants import EQUATIONS
from kef.errors import DomainError
from kef.estimators import LawRep
from kef.generator import bump_family, generator_report
from kef.levy import LevyTriplet
from kef.residuals import RESIDUALS, ResidualReport
from kef.resolve import log

logger = logging.getLogger(__name__)

# a passing share at or above these levels is reported OK / WARN
PASS_RATE_OK = 100.0
PASS_RATE_WARN = 50.0


def run_equation(
    equation: str,
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    workers: int = 1,
) -> ResidualReport:
    """Dispatches one equation id to its residual operator.

    The generator check reads the grid as bump centers spanning [min, max].

    Raises:
        DomainError: For an unknown equation or unmet preconditions.
    """
    if equation == "generator":
        points = np.asarray(grid, dtype=float)
        positive = points[points > 0]
        lo, hi = (float(positive.min()), float(positive.max())) if positive.size else (0.1, 3.0)
        return generator_report(bump_family(lo, hi), xi, eta, q, law, tol)
    operator = RESIDUALS.get(equation)
    if operator is None:
        raise DomainError(f"unknown equation {equation!r}; choose from {', '.join(EQUATIONS)}")
    return operator(grid, xi, eta, q, law, tol=tol, workers=workers)


class CheckSuite:
    """Collects residual reports of several equations and their pass rate."""

    def __init__(self, law: LawRep, xi: LevyTriplet, eta: LevyTriplet, q: float):
        """Initializes the CheckSuite.

        Args:
            law: The law under test.
            xi: Process in the exponent.
            eta: Integrator process.
            q: Killing rate.
        """
        self.law = law
        self.xi = xi
        self.eta = eta
        self.q = q
        self.reports: dict[str, ResidualReport] = {}
        self.skipped: dict[str, str] = {}

    def run(
        self,
        equation: str,
        grid: Sequence[float],
        tol: float | None = None,
        workers: int = 1,
    ) -> ResidualReport | None:
        """Runs one equation; unmet preconditions are recorded as skips.

        Args:
            equation: Equation id.
            grid: Evaluation points (u for transforms, z for densities).
            tol: Tolerance override.
            workers: Threads for the grid loop.

        Returns:
            The report, or None when the equation does not apply.
        """
        try:
            report = run_equation(equation, grid, self.xi, self.eta, self.q, self.law, tol, workers)
        except DomainError as exc:
            logger.debug("Skipping %s", equation, exc_info=True)
            self.skipped[equation] = str(exc)
            return None
        self.reports[equation] = report
        return report

    def run_all(self, grids: dict[str, Sequence[float]], tol: float | None = None, workers: int = 1) -> None:
        """Runs every equation with a grid in `grids`, in the canonical order."""
        for equation in EQUATIONS:
            if equation in grids:
                self.run(equation, grids[equation], tol, workers)

    @property
    def passed(self) -> bool:
        return bool(self.reports) and all(r.passed for r in self.reports.values())

    def to_dict(self) -> dict:
        return {
            "law": self.law.name,
            "reports": {name: r.to_dict() for name, r in self.reports.items()},
            "skipped": dict(self.skipped),
            "pass": self.passed,
        }

    def print_summary(self) -> None:
        """Prints one line per equation and the overall pass rate."""
        for name, report in self.reports.items():
            log(
                "OK" if report.passed else "FAIL",
                f"{name}: sup {report.norm_sup:.3g} vs tolerance {report.tolerance:.3g}"
                f" + budget {report.budget:.3g}",
            )
        for name, reason in self.skipped.items():
            log("WARN", f"{name} skipped: {reason}")

        total = len(self.reports)
        if total == 0:
            log("FAIL", "No equation applied to this law.")
            return
        good = sum(r.passed for r in self.reports.values())
        rate = good / total * 100
        if rate >= PASS_RATE_OK:
            level = "OK"
        elif rate >= PASS_RATE_WARN:
            level = "WARN"
        else:
            level = "FAIL"
        log(level, f"Pass rate: {rate:.1f}% ({good}/{total})")
