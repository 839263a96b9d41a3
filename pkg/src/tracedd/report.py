"""Minimization reports: JSON stats, a plain-text table and figures.

The table columns follow the usual layout for delta-debugging experiments:
granularity schedule, wall time, oracle tests, and the iterations /
queries / runs left in the resulting trace.
"""

from __future__ import annotations

import json
from typing import Dict, List, Optional, Sequence

from .ddmin import MinimalityReport, ScheduleStats, worst_case_tests
from .trace import Granularity, Trace

__all__ = [
    "schedule_notation",
    "stats_report",
    "dump_stats",
    "format_table",
    "format_minimality",
    "render_figure",
    "strip_timings",
]


def schedule_notation(schedule: Sequence[Granularity]) -> str:
    """``[iterations, queries]`` (application order) -> ``queries o iterations``."""
    return " o ".join(g.value for g in reversed(schedule))


def stats_report(
    schedule: Sequence[Granularity],
    stats: ScheduleStats,
    original: Trace,
    result: Trace,
    oracle: str,
) -> Dict[str, object]:
    it, qu, r = result.counts()
    largest = max((s.input_units for s in stats.stages), default=0)
    return {
        "schedule": [g.value for g in schedule],
        "notation": schedule_notation(schedule),
        "oracle": oracle,
        "input": dict(zip(("iterations", "queries", "runs"), original.counts())),
        "stages": [s.as_dict() for s in stats.stages],
        "total": {
            "tests": stats.tests_executed,
            "cache_hits": stats.cache_hits,
            "unresolved": stats.unresolved,
            "time_s": round(stats.wall_time, 6),
            "result": {"iterations": it, "queries": qu, "runs": r},
        },
        "worst_case_bound": worst_case_tests(largest),
    }


def strip_timings(report: object) -> object:
    """Copy of a report without wall-time fields (for reproducibility checks)."""
    if isinstance(report, dict):
        return {k: strip_timings(v) for k, v in report.items() if k != "time_s"}
    if isinstance(report, list):
        return [strip_timings(v) for v in report]
    return report


def dump_stats(report: Dict[str, object]) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def format_table(report: Dict[str, object]) -> str:
    rows: List[List[str]] = [["stage", "granularity", "time", "tests", "hits", "It", "Qu", "R"]]
    for k, st in enumerate(report["stages"], 1):  # type: ignore[arg-type]
        res = st.get("result", {})
        rows.append(
            [
                str(k),
                str(st["granularity"]),
                f"{st['time_s']:.2f}s",
                str(st["tests"]),
                str(st["cache_hits"]),
                str(res.get("iterations", "")),
                str(res.get("queries", "")),
                str(res.get("runs", "")),
            ]
        )
    tot = report["total"]  # type: ignore[index]
    res = tot["result"]
    rows.append(
        [
            "",
            str(report["notation"]),
            f"{tot['time_s']:.2f}s",
            str(tot["tests"]),
            str(tot["cache_hits"]),
            str(res["iterations"]),
            str(res["queries"]),
            str(res["runs"]),
        ]
    )
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.rjust(w) if c >= 2 else cell.ljust(w) for c, (cell, w) in enumerate(zip(row, widths))))
        if i == 0 or i == len(rows) - 2:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def format_minimality(rep: MinimalityReport, size: int, describe=str) -> str:
    lines = [f"units: {size}", f"1-minimal: {'yes' if rep.is_one_minimal else 'no'}"]
    lines.append(f"global minimum size: {rep.global_min_size if rep.global_min_size is not None else 'unknown'}")
    for w in rep.witnesses:
        lines.append(f"removable: {describe(w)}")
    return "\n".join(lines) + "\n"


def _stage_color(k: int) -> str:
    palette = ["#1b6ca8", "#d1495b", "#edae49", "#00798c", "#66a182", "#8d96a3"]
    return palette[k % len(palette)]


def render_figure(report: Dict[str, object], path: str, title: Optional[str] = None) -> None:
    """Two panels: slice size against oracle tests, and tests per stage."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stages = report["stages"]  # type: ignore[assignment]
    with plt.rc_context({"font.size": 9, "axes.spines.top": False, "axes.spines.right": False}):
        fig, (ax_prog, ax_bar) = plt.subplots(1, 2, figsize=(9, 3.4), gridspec_kw={"width_ratios": [2, 1]})
        offset = 0
        for k, st in enumerate(stages):  # type: ignore[arg-type]
            hist = st["history"] or [[0, st["input_units"]]]
            xs = [offset + h[0] for h in hist] + [offset + st["tests"]]
            ys = [h[1] for h in hist] + [hist[-1][1]]
            ax_prog.step(xs, ys, where="post", color=_stage_color(k), label=st["granularity"])
            offset += st["tests"]
            if k + 1 < len(stages):
                ax_prog.axvline(offset, color="0.8", lw=0.8, ls="--")
        ax_prog.set_yscale("log")
        ax_prog.set_xlabel("oracle tests")
        ax_prog.set_ylabel("units in slice")
        ax_prog.legend(frameon=False)

        labels = [f"{k + 1}: {st['granularity']}" for k, st in enumerate(stages)]  # type: ignore[arg-type]
        tests = [st["tests"] for st in stages]  # type: ignore[union-attr]
        hits = [st["cache_hits"] for st in stages]  # type: ignore[union-attr]
        ax_bar.bar(labels, tests, color=[_stage_color(k) for k in range(len(stages))], label="tests")  # type: ignore[arg-type]
        ax_bar.bar(labels, hits, bottom=tests, color="0.85", label="cache hits")
        ax_bar.set_ylabel("count")
        ax_bar.legend(frameon=False)
        fig.suptitle(title or str(report["notation"]))
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)

