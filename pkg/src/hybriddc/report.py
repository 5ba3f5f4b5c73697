"""JSON solve reports and the bench table layout."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .dc import SolveStats

FORMAT_VERSION = "1.0"

BENCH_COLUMNS = (
    "n",
    "path",
    "flops_update_top_merge",
    "total_flops",
    "hss_rank",
    "deflation_fraction",
    "wall_time",
    "orthogonality",
    "residual",
)


def plain(obj):
    """Recursively convert numpy scalars and arrays to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


class ReportFormatError(ValueError):
    pass


@dataclass
class SolveReport:
    input: dict
    options: dict
    merges: list
    totals: dict
    verification: dict
    seed: int
    rng: str
    wall_time: float = 0.0
    format_version: str = FORMAT_VERSION
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(plain(asdict(self)), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        data = json.loads(text)
        version = str(data.get("format_version", ""))
        major = version.split(".")[0]
        if major != FORMAT_VERSION.split(".")[0]:
            raise ReportFormatError(f"unsupported report format version {version!r}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ReportFormatError(str(exc)) from None


def build_report(input_desc: dict, stats: SolveStats, metrics: dict, wall_time: float,
                 rng: str) -> SolveReport:
    merges = [asdict(m) for m in stats.merges]
    total_n = sum(m.n_merge for m in stats.merges)
    total_defl = sum(m.n_merge - m.K for m in stats.merges)
    ranks = [m.hss_rank for m in stats.merges if m.hss_rank is not None]
    top = stats.top
    totals = {
        "flops": stats.total_flops,
        "base_flops": stats.base_flops,
        "merge_flops_secular": sum(m.flops_secular for m in stats.merges),
        "merge_flops_update": sum(m.flops_update for m in stats.merges),
        "deflation_fraction": total_defl / total_n if total_n else 0.0,
        "top_deflation_fraction": top.deflation_fraction if top else 0.0,
        "top_flops_update": top.flops_update if top else 0,
        "max_hss_rank": max(ranks) if ranks else None,
        "merges": len(stats.merges),
    }
    return SolveReport(
        input=input_desc,
        options=dict(stats.options),
        merges=merges,
        totals=totals,
        verification=metrics,
        seed=int(stats.options["seed"]),
        rng=rng,
        wall_time=wall_time,
    )


def load_schema(name: str = "report.v1.json") -> dict:
    return json.loads(resources.files("hybriddc").joinpath("schemas", name).read_text())
