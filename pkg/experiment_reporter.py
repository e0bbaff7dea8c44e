# experiment_reporter.py
"""
Result rendering for qroute
CSV tables for sweeps and benchmarks, JSON lines for routing solutions,
console summaries for allocations and a markdown sweep report
"""
import csv
import io
import json
import os
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from experiments import Algorithm, BenchResult, ExperimentConfig, MetricsRow
from multipair import AllocationResult
from routing import RoutingSolution

METRICS_HEADER = [
    "algorithm", "sweep_param", "sweep_value", "throughput_mean", "throughput_se",
    "fidelity_mean", "utilization_mean", "denial_rate", "runtime_ms",
]
BENCH_HEADER = ["nodes", "algorithm", "runtime_ms_mean", "samples"]


def _fixed(value: float) -> str:
    return f"{value:.6f}"


# === CSV ===

def metrics_csv_text(rows: Iterable[MetricsRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for row in rows:
        writer.writerow([
            row.algorithm.value,
            row.sweep_param,
            row.sweep_value,
            _fixed(row.throughput_mean),
            _fixed(row.throughput_se),
            _fixed(row.fidelity_mean),
            _fixed(row.utilization_mean),
            _fixed(row.denial_rate),
            _fixed(row.runtime_ms),
        ])
    return buffer.getvalue()


def bench_csv_text(result: BenchResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(BENCH_HEADER)
    for row in result.rows:
        writer.writerow([row.nodes, row.algorithm.value, _fixed(row.runtime_ms_mean), row.samples])
    return buffer.getvalue()


def write_text(path: str, content: str) -> str:
    """Write content to path, creating parent directories; returns the absolute path"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(content)
    return os.path.abspath(path)


# === Routing solutions ===

def solutions_to_jsonl(solutions: Sequence[RoutingSolution]) -> str:
    """One JSON object per solution, keys in a fixed order"""
    return "".join(json.dumps(s.as_dict()) + "\n" for s in solutions)


def format_allocation_summary(result: AllocationResult, label: str) -> str:
    """
    Console summary of an allocation run

    Args:
        result: AllocationResult to format
        label: algorithm name shown in the heading
    """
    stats = result.summary()
    summary = f"""📡 {label}: {stats['accepted']}/{stats['requests']} requests served
✅ Expected throughput: {stats['throughput']:.3f} ({stats['served_connections']} connections)
🎯 Mean fidelity: {stats['mean_fidelity']:.4f}
📊 Utilization: {stats['utilization']:.4f}
"""
    if stats["denied"]:
        summary += f"❌ Denied requests: {', '.join(str(i) for i in result.denied)}\n"
    if stats["violations"]:
        summary += f"⚠️  Connections below threshold: {stats['violations']}\n"
    if stats["reroutes"]:
        summary += f"🔁 Re-routes: {stats['reroutes']}\n"

    for index in sorted(result.accepted):
        request = result.requests[index]
        summary += f"\n• request {index} ({request.source} → {request.destination}, R={request.demand}, F_th={request.threshold})\n"
        for solution in result.accepted[index]:
            summary += (
                f"  └─ {solution.path} rounds={list(solution.decision.rounds)} "
                f"F={solution.end_to_end_fidelity:.4f} served={solution.served} "
                f"T={solution.expected_throughput:.3f}\n"
            )
    return summary


# === Markdown report ===

def sweep_markdown(rows: Sequence[MetricsRow], config: Optional[ExperimentConfig] = None) -> str:
    """Markdown section with one table per algorithm"""
    if not rows:
        return "## 📈 Sweep Results\n\nNo sweep points were run.\n"

    report = "## 📈 Sweep Results\n\n"
    if config is not None:
        report += f"""### Setup
- **Trials per point:** {config.trials}
- **Demand per pair:** {config.demand_per_pair}
- **Seed:** {config.rng_seed}
- **Fidelity draw:** N({config.fidelity_mean}, {config.fidelity_stddev}) clamped to [0.5, 0.99]
- **Timestep:** {config.timestep_ms} ms

"""

    by_algorithm: Dict[Algorithm, List[MetricsRow]] = defaultdict(list)
    for row in rows:
        by_algorithm[row.algorithm].append(row)

    for algorithm, algorithm_rows in by_algorithm.items():
        report += f"### {algorithm.value}\n"
        report += f"| {algorithm_rows[0].sweep_param} | Throughput | SE | Fidelity | Utilization | Denied | Violations | ms |\n"
        report += "|---|---|---|---|---|---|---|---|\n"
        for row in algorithm_rows:
            report += (
                f"| {row.sweep_value} | {row.throughput_mean:.3f} | {row.throughput_se:.3f} "
                f"| {row.fidelity_mean:.4f} | {row.utilization_mean:.4f} | {row.denial_rate:.3f} "
                f"| {row.violation_rate:.3f} | {row.runtime_ms:.2f} |\n"
            )
        report += "\n"
    return report


def bench_markdown(result: BenchResult) -> str:
    report = "## ⏱️ Runtime Benchmark\n\n"
    report += "| Nodes | Algorithm | Mean ms | Samples |\n|---|---|---|---|\n"
    for row in result.rows:
        report += f"| {row.nodes} | {row.algorithm.value} | {row.runtime_ms_mean:.3f} | {row.samples} |\n"
    status = "holds" if result.ordering_holds else "does not hold"
    report += f"\nExpected ordering q_leap < baseline < q_path {status}.\n"
    return report


class SweepReporter:
    """
    Write sweep results to disk
    """

    def __init__(self, rows: Sequence[MetricsRow], config: Optional[ExperimentConfig] = None):
        self.rows = list(rows)
        self.config = config

    def write_csv(self, path: str) -> Tuple[bool, str, str]:
        """
        Write the metrics CSV

        Returns:
            Tuple of (success, file_path, message)
        """
        try:
            file_path = write_text(path, metrics_csv_text(self.rows))
            return True, file_path, f"Wrote {len(self.rows)} rows to {os.path.basename(file_path)}"
        except OSError as e:
            return False, "", f"Failed to write CSV: {str(e)}"

    def write_markdown(self, path: str) -> Tuple[bool, str, str]:
        try:
            file_path = write_text(path, sweep_markdown(self.rows, self.config))
            return True, file_path, f"Markdown report written: {os.path.basename(file_path)}"
        except OSError as e:
            return False, "", f"Failed to write report: {str(e)}"
