"""
Gross and fine pitch error scoring.

A reference-voiced frame is a gross pitch error (GPE) when the tracker
calls it unvoiced or when the estimated pitch period is more than 10
samples (0.625 ms at 16 kHz) away from the reference period. All other
reference-voiced frames are fine pitch error (FPE) frames; their signed
period errors, in milliseconds, give the FPE mean (bias) and standard
deviation (accuracy). Reference-unvoiced frames are not scored.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, ConfigError
from .targets import GroundTruthF0
from .tracker import F0Track

GPE_THRESHOLD_MS = 0.625


@dataclass
class EvalReport:
    n_voiced: int
    n_gpe: int
    n_fpe: int
    fpe_sum: float = 0.0        # ms
    fpe_sq_sum: float = 0.0     # ms^2
    labels: dict[str, str] = field(default_factory=dict)

    @property
    def gpe_rate(self) -> float:
        """Fraction of scored frames with gross error; NaN if none were scored."""
        return self.n_gpe / self.n_voiced if self.n_voiced else math.nan

    @property
    def defined(self) -> bool:
        return self.n_voiced > 0

    @property
    def mu_fpe(self) -> float:
        return self.fpe_sum / self.n_fpe if self.n_fpe else math.nan

    @property
    def sigma_fpe(self) -> float:
        if not self.n_fpe:
            return math.nan
        var = self.fpe_sq_sum / self.n_fpe - self.mu_fpe ** 2
        return math.sqrt(max(var, 0.0))

    def as_row(self) -> dict:
        row = dict(self.labels)
        row.update(n_voiced=self.n_voiced, n_gpe=self.n_gpe, n_fpe=self.n_fpe,
                   gpe_rate=self.gpe_rate, mu_fpe_ms=self.mu_fpe, sigma_fpe_ms=self.sigma_fpe)
        return row


def _as_arrays(estimates) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(estimates, F0Track):
        return estimates.f0.astype(float), estimates.voiced.astype(bool)
    est = list(estimates)
    f0 = np.array([e.f0 for e in est], dtype=float)
    voiced = np.array([e.voiced for e in est], dtype=bool)
    return f0, voiced


def period_errors(est_f0: np.ndarray, ref_f0: np.ndarray, sample_rate: int) -> np.ndarray:
    """Signed period error ``fs/est - fs/ref`` in samples."""
    return sample_rate / est_f0 - sample_rate / ref_f0


def score(estimates, truth: GroundTruthF0, unvoiced_is_gpe: bool = True,
          threshold_ms: float = GPE_THRESHOLD_MS, labels: dict | None = None) -> EvalReport:
    """Score ``estimates`` (an :class:`F0Track` or iterable of estimates) against ``truth``.

    With ``unvoiced_is_gpe=False`` frames the tracker left unvoiced are
    skipped instead of counted as gross errors.
    """
    est_f0, est_voiced = _as_arrays(estimates)
    ref = truth.f0
    if len(est_f0) != len(ref):
        raise AlignmentError(f"{len(est_f0)} estimates vs {len(ref)} truth frames")
    fs = truth.sample_rate
    limit = threshold_ms * 1e-3 * fs
    scored = ref > 0
    has_est = est_voiced & (est_f0 > 0)
    if not unvoiced_is_gpe:
        scored &= has_est
    both = scored & has_est
    err = np.zeros_like(ref)
    err[both] = period_errors(est_f0[both], ref[both], fs)
    gross = scored & (~has_est | (np.abs(err) > limit))
    fine = scored & ~gross
    err_ms = err[fine] * 1e3 / fs
    return EvalReport(int(scored.sum()), int(gross.sum()), int(fine.sum()),
                      float(err_ms.sum()), float((err_ms ** 2).sum()), dict(labels or {}))


def aggregate(reports: Sequence[EvalReport], group_by: Iterable[str] = ()) -> list[EvalReport]:
    """Pool counts and FPE sums of reports sharing the same ``group_by`` labels.

    Groups come back in first-seen order.
    """
    if not reports:
        raise ConfigError("no reports to aggregate")
    keys = list(group_by)
    groups: dict[tuple, EvalReport] = {}
    for rep in reports:
        missing = [k for k in keys if k not in rep.labels]
        if missing:
            raise ConfigError(f"report lacks labels {missing}")
        gk = tuple(rep.labels[k] for k in keys)
        acc = groups.get(gk)
        if acc is None:
            groups[gk] = EvalReport(rep.n_voiced, rep.n_gpe, rep.n_fpe, rep.fpe_sum,
                                    rep.fpe_sq_sum, {k: rep.labels[k] for k in keys})
        else:
            acc.n_voiced += rep.n_voiced
            acc.n_gpe += rep.n_gpe
            acc.n_fpe += rep.n_fpe
            acc.fpe_sum += rep.fpe_sum
            acc.fpe_sq_sum += rep.fpe_sq_sum
    return list(groups.values())


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def format_table(reports: Sequence[EvalReport], sep: str = "\t") -> str:
    """Delimited table, one row per report, header first."""
    if not reports:
        return ""
    rows = [r.as_row() for r in reports]
    cols = list(rows[0])
    lines = [sep.join(cols)]
    lines += [sep.join(_fmt(r.get(c, "")) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def scatter_rows(reports: Sequence[EvalReport]) -> list[dict]:
    """(mu_fpe, sigma_fpe) points per condition for external plotting."""
    return [dict(r.labels, mu_fpe_ms=r.mu_fpe, sigma_fpe_ms=r.sigma_fpe, n_fpe=r.n_fpe)
            for r in reports]


def to_jsonl(reports: Sequence[EvalReport]) -> str:
    out = []
    for r in reports:
        rec = asdict(r)
        rec.update(gpe_rate=r.gpe_rate, mu_fpe_ms=r.mu_fpe, sigma_fpe_ms=r.sigma_fpe)
        rec = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in rec.items()}
        out.append(json.dumps(rec, sort_keys=True))
    return "\n".join(out) + ("\n" if out else "")
