"""Aggregated metric report for one (layer, threshold, pooling, K) cell."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .metrics.lexicon import MatchingReport
from .metrics.segmentation import AreaReport, BoundaryReport, TokenReport


@dataclass(frozen=True)
class WordReport:
    """Word metrics across clustering reruns (mean and std over seeds)."""

    purity_mean: float
    purity_std: float
    wd_mean: float
    wd_std: float
    n_seeds: int


@dataclass(frozen=True)
class MetricReport:
    layer: int
    threshold: float
    pooling: Optional[str] = None
    k: Optional[int] = None
    area: Optional[AreaReport] = None
    boundary: Optional[BoundaryReport] = None
    token: Optional[TokenReport] = None
    word: Optional[WordReport] = None
    matching: Optional[MatchingReport] = None

    def to_dict(self) -> dict:
        out: dict = {
            "layer": self.layer,
            "threshold": self.threshold,
            "pooling": self.pooling,
            "k": self.k,
        }
        if self.area:
            out["area"] = {
                "wc": self.area.wc,
                "tiou": self.area.tiou,
                "cd_ms": self.area.cd_ms,
                "a_score": self.area.a_score,
            }
        if self.boundary:
            out["boundary"] = {
                "precision": self.boundary.precision,
                "recall": self.boundary.recall,
                "f1": self.boundary.f1,
                "os": self.boundary.os,
                "r_value": self.boundary.r_value,
            }
        if self.token:
            out["token"] = {
                "precision": self.token.precision,
                "recall": self.token.recall,
                "f1": self.token.f1,
            }
        if self.word:
            out["word"] = {
                "purity_mean": self.word.purity_mean,
                "purity_std": self.word.purity_std,
                "wd_mean": self.word.wd_mean,
                "wd_std": self.word.wd_std,
                "n_seeds": self.word.n_seeds,
            }
        if self.matching:
            out["matching"] = {
                "n_words": self.matching.n_words,
                "ned": self.matching.ned,
                "coverage": self.matching.coverage,
                "m_score": self.matching.m_score,
            }
        return out


_COLUMNS = (
    ("config", 22),
    ("WC", 7),
    ("tIoU", 7),
    ("CD(ms)", 7),
    ("A-score", 8),
    ("Prec", 7),
    ("Recall", 7),
    ("F1", 7),
    ("OS", 8),
    ("R-val", 8),
    ("Purity", 13),
    ("WD", 13),
)


def _fmt(value: Optional[float], width: int, decimals: int = 2) -> str:
    if value is None:
        return "-".rjust(width)
    return f"{value:.{decimals}f}".rjust(width)


def _row(report: MetricReport) -> str:
    config = f"L{report.layer} p={report.threshold:.2f}"
    if report.k:
        config += f" K={report.k}"
    area, boundary, word = report.area, report.boundary, report.word
    cells = [config.ljust(_COLUMNS[0][1])]
    cells.append(_fmt(area.wc if area else None, 7))
    cells.append(_fmt(area.tiou if area else None, 7))
    cells.append(_fmt(area.cd_ms if area else None, 7, 1))
    cells.append(_fmt(area.a_score if area else None, 8))
    cells.append(_fmt(boundary.precision if boundary else None, 7))
    cells.append(_fmt(boundary.recall if boundary else None, 7))
    cells.append(_fmt(boundary.f1 if boundary else None, 7))
    cells.append(_fmt(boundary.os if boundary else None, 8))
    cells.append(_fmt(boundary.r_value if boundary else None, 8))
    if word:
        cells.append(f"{word.purity_mean:.1f} ± {word.purity_std:.1f}".rjust(13))
        cells.append(f"{word.wd_mean:.1f} ± {word.wd_std:.1f}".rjust(13))
    else:
        cells.append("-".rjust(13))
        cells.append("-".rjust(13))
    return " ".join(cells)


def render_table(reports: Sequence[MetricReport]) -> str:
    """Aligned plain-text table: Area block, Boundary block, Word block."""
    header = " ".join(name.rjust(width) if i else name.ljust(width)
                      for i, (name, width) in enumerate(_COLUMNS))
    rule = "-" * len(header)
    lines = [header, rule]
    lines.extend(_row(r) for r in reports)
    extras = []
    for r in reports:
        if r.token:
            extras.append(
                f"L{r.layer} p={r.threshold:.2f} token: "
                f"P={r.token.precision:.2f} R={r.token.recall:.2f} F1={r.token.f1:.2f}"
            )
        if r.matching:
            extras.append(
                f"L{r.layer} p={r.threshold:.2f} matching: "
                f"n_words={r.matching.n_words} NED={r.matching.ned:.1f} "
                f"Cov={r.matching.coverage:.1f} M-score={r.matching.m_score:.1f}"
            )
    if extras:
        lines.append(rule)
        lines.extend(extras)
    return "\n".join(lines) + "\n"
