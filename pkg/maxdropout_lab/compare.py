"""Compare MaxDropout and MaxDropoutV2 benchmark reports and training timings."""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict

from .bench import BenchReport
from .config import PUBLISHED_EPOCH_SECONDS_V1, PUBLISHED_EPOCH_SECONDS_V2
from .errors import BenchError
from .train import MetricsLog

# End-to-end seconds-per-epoch ratio reported for ResNet-18 on CIFAR-10 (V2 / V1).
PUBLISHED_EPOCH_RATIO = PUBLISHED_EPOCH_SECONDS_V2 / PUBLISHED_EPOCH_SECONDS_V1


@dataclass(frozen=True)
class CompareSummary:
    baseline: str
    candidate: str
    shape: tuple
    time_ratio: float
    comparison_ratio: Fraction
    gate: float
    passed: bool

    def to_record(self) -> Dict:
        return {
            "baseline": self.baseline,
            "candidate": self.candidate,
            "shape": list(self.shape),
            "time_ratio": self.time_ratio,
            "comparison_ratio": f"{self.comparison_ratio.numerator}/{self.comparison_ratio.denominator}",
            "comparison_ratio_value": float(self.comparison_ratio),
            "gate": self.gate,
            "passed": self.passed,
            "published_epoch_ratio": PUBLISHED_EPOCH_RATIO,
        }

    def describe(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{self.candidate} vs {self.baseline} on {self.shape}: time ratio {self.time_ratio:.3f} "
            f"(gate {self.gate:g}), comparison ratio {self.comparison_ratio} -> {verdict}; "
            f"published end-to-end epoch ratio {PUBLISHED_EPOCH_RATIO:.3f}"
        )


def compare(v1: BenchReport, v2: BenchReport, gate: float = 1.0) -> CompareSummary:
    """
    Ratio summary of two reports taken on the same shape and iteration count.

    PASS requires the median time ratio v2/v1 to be below 1 and at most `gate`.
    """
    if v1.shape != v2.shape:
        raise BenchError(f"Cannot compare reports on different shapes {v1.shape} and {v2.shape}")
    if v1.iterations != v2.iterations:
        raise BenchError(f"Cannot compare reports with {v1.iterations} and {v2.iterations} iterations")
    if v1.median_ns <= 0 or v1.comparison_count <= 0:
        raise BenchError(f"Baseline report {v1.kernel} has no measurable time or comparisons")

    time_ratio = v2.median_ns / v1.median_ns
    return CompareSummary(
        baseline=v1.kernel,
        candidate=v2.kernel,
        shape=tuple(v1.shape),
        time_ratio=time_ratio,
        comparison_ratio=Fraction(v2.comparison_count, v1.comparison_count),
        gate=gate,
        passed=time_ratio < 1.0 and time_ratio <= gate,
    )


@dataclass(frozen=True)
class TimingSummary:
    baseline_epoch_seconds: float
    candidate_epoch_seconds: float
    ratio: float


def compare_training_time(baseline: MetricsLog, candidate: MetricsLog) -> TimingSummary:
    """Mean seconds-per-epoch of two training runs and their ratio candidate/baseline."""
    if not baseline.rows or not candidate.rows:
        raise BenchError("Both training logs need at least one epoch")
    base = baseline.mean_epoch_seconds
    cand = candidate.mean_epoch_seconds
    return TimingSummary(base, cand, cand / base if base > 0 else float("inf"))
