"""Per-cell analysis pipeline and table rendering (JSON and markdown).

Every section is a list of row dicts ordered by (platform, app, machine).
Markdown tables put machines in columns and apps in rows; ms and MIPS values
are shown with 2 decimals, p-values with 4 (scientific below 1e-4).
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .errors import InputError, StochPerfError
from .rate_metrics import InstructionCount, calibrate_instructions, mips_series, point_mips
from .resampling import bootstrap_ci, jackknife_ci
from .scheduling import CLOUD, EDGE, EtcMatrix, build_etc
from .stat_tests import NO_DISTRIBUTION, fit_and_select, shapiro_wilk
from .traces import TraceSample, TraceSet, summarize

SECTIONS = ("summary", "normality", "fit", "mips", "ci", "etc")


@dataclass(frozen=True)
class PipelineConfig:
    trace_path: Optional[str] = None
    alpha: float = 0.05
    bootstrap_k: int = 100
    confidence: float = 0.95
    master_seed: int = 0
    calibration: tuple[Mapping[str, Any], ...] = ()
    output_format: str = "json"
    cloud_machines: tuple[str, ...] = ()
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError("alpha must lie in (0, 1)")
        if not 0.0 < self.confidence < 1.0:
            raise InputError("confidence must lie in (0, 1)")
        if self.bootstrap_k < 2:
            raise InputError("bootstrap k must be at least 2")
        if self.master_seed < 0:
            raise InputError("seed must be non-negative")
        if self.output_format not in ("json", "markdown"):
            raise InputError("format must be json or markdown")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "k": self.bootstrap_k,
            "confidence": self.confidence,
            "seed": self.master_seed,
        }


def load_calibration(path: str | Path) -> tuple[dict, ...]:
    """Read a calibration JSON file: one object or a list of objects."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"calibration file is not valid JSON: {exc}") from None
    items = data if isinstance(data, list) else [data]
    out = []
    for item in items:
        if not isinstance(item, dict) or not {"app_type", "reference_machine", "reference_mips"} <= item.keys():
            raise InputError(f"calibration entry needs app_type, reference_machine, reference_mips: {item!r}")
        out.append(dict(item))
    return tuple(out)


def _ordered(traces: TraceSet) -> list[TraceSample]:
    return sorted(traces, key=lambda s: (s.platform, s.app_type, s.machine_type))


def _cell(s: TraceSample) -> dict:
    return {"platform": s.platform, "app_type": s.app_type, "machine_type": s.machine_type}


def cell_seed(master: int, s: TraceSample) -> int:
    tag = zlib.crc32(f"{s.platform}\x1f{s.machine_type}\x1f{s.app_type}".encode())
    return int(np.random.SeedSequence([master, tag]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _guard(fn: Callable[[], dict]) -> dict:
    try:
        return fn()
    except StochPerfError as exc:
        return {"error": type(exc).__name__, "message": str(exc)}


# ------------------------------------------------------------------ sections

def summary_rows(traces: TraceSet) -> list[dict]:
    return [{**_cell(s), **summarize(s).to_dict()} for s in _ordered(traces)]


def normality_rows(traces: TraceSet, alpha: float) -> list[dict]:
    return [{**_cell(s), **_guard(lambda s=s: shapiro_wilk(s.times_ms, alpha).to_dict())} for s in _ordered(traces)]


def fit_rows(traces: TraceSet, alpha: float) -> list[dict]:
    return [{**_cell(s), **_guard(lambda s=s: fit_and_select(s.times_ms, alpha).to_dict())} for s in _ordered(traces)]


def resolve_calibrations(traces: TraceSet, calibration: Iterable[Mapping]) -> dict[tuple[str, str], InstructionCount]:
    """Instruction counts keyed by (platform, app).

    Each entry applies to the platform(s) on which its reference machine ran
    the app, unless it names a ``platform`` explicitly.
    """
    counts: dict[tuple[str, str], InstructionCount] = {}
    for entry in calibration:
        app, ref, ref_mips = entry["app_type"], entry["reference_machine"], float(entry["reference_mips"])
        platforms = [entry["platform"]] if entry.get("platform") else traces.platforms()
        matched = False
        for p in platforms:
            key = (p, ref, app)
            if key in set(traces.keys()):
                counts[(p, app)] = calibrate_instructions(app, traces[key].times_ms, ref_mips, ref, p)
                matched = True
        if not matched:
            raise InputError(f"calibration for {app!r}: no trace for reference machine {ref!r}")
    return counts


def mips_rows(traces: TraceSet, counts: Mapping[tuple[str, str], InstructionCount]) -> list[dict]:
    rows = []
    for s in _ordered(traces):
        n = counts.get((s.platform, s.app_type))
        if n is None:
            rows.append({**_cell(s), "error": "NotCalibrated", "message": "no calibration for this app/platform"})
            continue
        rows.append({**_cell(s), "n_instructions": n.n_instructions, "mips": point_mips(n, s.times_ms)})
    return rows


def ci_rows(traces: TraceSet, counts: Mapping[tuple[str, str], InstructionCount], cfg: PipelineConfig) -> list[dict]:
    rows = []
    for s in _ordered(traces):
        n = counts.get((s.platform, s.app_type))
        if n is None:
            rows.append({**_cell(s), "error": "NotCalibrated", "message": "no calibration for this app/platform"})
            continue
        series = mips_series(n, s.times_ms)

        def run(series=series, s=s):
            jk = jackknife_ci(series, cfg.confidence)
            bs = bootstrap_ci(series, cfg.bootstrap_k, cfg.alpha, cell_seed(cfg.master_seed, s), cfg.workers)
            return {"mips": point_mips(n, s.times_ms), "jackknife": jk.to_dict(), "bootstrap": bs.to_dict()}

        rows.append({**_cell(s), **_guard(run)})
    return rows


def etc_matrices(traces: TraceSet, cfg: PipelineConfig, fits: Optional[list[dict]] = None) -> dict[str, EtcMatrix]:
    """One ETC matrix per platform; ``dist`` is attached when every cell has a fitted family."""
    from .distributions import spec_from_dict

    fit_by_key = {}
    for row in fits or fit_rows(traces, cfg.alpha):
        if row.get("fitted") is not None and row.get("family") != NO_DISTRIBUTION:
            fit_by_key[(row["platform"], row["app_type"], row["machine_type"])] = spec_from_dict(row["fitted"])
    out = {}
    for p in traces.platforms():
        sub = traces.for_platform(p)
        machines = sub.machines(p)
        roles = {m: (CLOUD if m in cfg.cloud_machines else EDGE) for m in machines}
        stats = {(s.app_type, s.machine_type): summarize(s) for s in sub}
        dists = {(a, m): fit_by_key[(p, a, m)] for (a, m) in stats if (p, a, m) in fit_by_key}
        out[p] = build_etc(stats, roles, sub.apps(p), machines, dists)
    return out


def run_pipeline(traces: TraceSet, cfg: PipelineConfig, sections: Sequence[str] = SECTIONS) -> dict:
    doc: dict[str, Any] = {"tool": "stochperf", "version": __version__, "config": cfg.to_dict(), "sections": {}}
    sec = doc["sections"]
    counts = resolve_calibrations(traces, cfg.calibration) if cfg.calibration else {}
    fits = None
    for name in sections:
        if name == "summary":
            sec["summary"] = summary_rows(traces)
        elif name == "normality":
            sec["normality"] = normality_rows(traces, cfg.alpha)
        elif name == "fit":
            fits = sec["fit"] = fit_rows(traces, cfg.alpha)
        elif name == "mips":
            sec["mips"] = mips_rows(traces, counts) if counts else {"skipped": "no calibration supplied"}
        elif name == "ci":
            sec["ci"] = ci_rows(traces, counts, cfg) if counts else {"skipped": "no calibration supplied"}
        elif name == "etc":
            sec["etc"] = {p: m.to_dict() for p, m in etc_matrices(traces, cfg, fits).items()}
        else:
            raise InputError(f"unknown section {name!r}")
    if "fit" in sec:
        doc["notes"] = [
            "K-S p-values use the asymptotic Kolmogorov distribution with parameters "
            "estimated from the same sample; they are optimistic (Lilliefors effect).",
            "Fits: Normal/LogNormal use the n-1 standard deviation, Exponential uses "
            "location = sample minimum, Student's t is a profile-likelihood location-scale fit.",
        ]
    return doc


def dumps_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


# ------------------------------------------------------------------ markdown

def fmt_ms(v: float) -> str:
    return f"{v:.2f}"


def fmt_p(p: float) -> str:
    if p == 0.0 or p >= 1e-4:
        return f"{p:.4f}"
    return f"{p:.4e}"


def _grid(rows: list[dict], render: Callable[[dict], str]) -> list[str]:
    out = []
    for platform in sorted({r["platform"] for r in rows}):
        prow = [r for r in rows if r["platform"] == platform]
        machines = sorted({r["machine_type"] for r in prow})
        apps = sorted({r["app_type"] for r in prow})
        cells = {(r["app_type"], r["machine_type"]): r for r in prow}
        out.append(f"**{platform}**")
        out.append("")
        out.append("| app \\ machine | " + " | ".join(machines) + " |")
        out.append("|---|" + "---|" * len(machines))
        for a in apps:
            vals = []
            for m in machines:
                r = cells.get((a, m))
                if r is None:
                    vals.append("N/A")
                elif "error" in r:
                    vals.append(f"error: {r['error']}")
                else:
                    vals.append(render(r))
            out.append(f"| {a} | " + " | ".join(vals) + " |")
        out.append("")
    return out


_TITLES = {
    "summary": "Mean and standard deviation of execution times (ms)",
    "normality": "Shapiro-Wilk normality test",
    "fit": "Kolmogorov-Smirnov best-fit distribution",
    "mips": "MIPS per machine and application",
    "ci": "MIPS confidence intervals",
    "etc": "Expected time to compute (ETC) matrix (ms)",
}


def render_markdown(doc: dict) -> str:
    cfg = doc["config"]
    lines = [
        "# stochperf report",
        "",
        f"alpha = {cfg['alpha']}, bootstrap k = {cfg['k']}, confidence = {cfg['confidence']}, seed = {cfg['seed']}",
        "",
    ]
    sec = doc["sections"]
    for name, body in sec.items():
        lines.append(f"## {_TITLES[name]}")
        lines.append("")
        if isinstance(body, dict) and "skipped" in body:
            lines += [f"_skipped: {body['skipped']}_", ""]
            continue
        if name == "summary":
            lines += _grid(body, lambda r: f"μ={fmt_ms(r['mean'])} σ={fmt_ms(r['std_dev'])}")
        elif name == "normality":
            lines += _grid(
                body, lambda r: f"{'Gaussian' if r['is_gaussian'] else 'Not Gaussian'} (W={r['w']:.4f}, P={fmt_p(r['p'])})"
            )
        elif name == "fit":
            lines += _grid(
                body,
                lambda r: r["family"] if r["family"] == NO_DISTRIBUTION else f"{r['family']} (P={fmt_p(r['p'])})",
            )
        elif name == "mips":
            lines += _grid(body, lambda r: fmt_ms(r["mips"]))
        elif name == "ci":
            lines.append("### Jackknife")
            lines.append("")
            lines += _grid(body, lambda r: f"[{fmt_ms(r['jackknife']['ci_low'])}, {fmt_ms(r['jackknife']['ci_high'])}]")
            lines.append("### Bootstrap")
            lines.append("")
            lines += _grid(body, lambda r: f"[{fmt_ms(r['bootstrap']['ci_low'])}, {fmt_ms(r['bootstrap']['ci_high'])}]")
        elif name == "etc":
            for platform, m in body.items():
                rows = [
                    {"platform": platform, "app_type": a, "machine_type": mach["id"], "v": m["expected_ms"][i][j]}
                    for i, a in enumerate(m["apps"])
                    for j, mach in enumerate(m["machines"])
                ]
                lines += _grid(rows, lambda r: fmt_ms(r["v"]))
                roles = ", ".join(f"{mach['id']}={mach['role']}" for mach in m["machines"])
                lines += [f"roles: {roles}", ""]
    for note in doc.get("notes", []):
        lines.append(f"> {note}")
    return "\n".join(lines).rstrip() + "\n"
