"""
End-to-end check of the counting law: prediction, measured counting curve,
log-log fit and the tolerance verdicts, written to an output directory.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .asymptotics import (
    AsymptoticPrediction,
    FitResult,
    InsufficientData,
    constant_C,
    fit_counting_curve,
    tau,
    trend_toward_one,
)
from .config import ExperimentConfig
from .laplace import M_tilde_grid, laplace_counting_curve
from .lattice import Box, SubdividedZ2, build_lattice
from .operators import PotentialSpec
from .spectra import BoxSizeWarning, CountingCurve, counting_curve

__all__ = ["VerifyReport", "prediction_for", "measure_curve", "run_verify", "write_curve_csv"]

DOUBLING_TOL = 0.05


@dataclass
class VerifyReport:
    config: ExperimentConfig
    prediction: AsymptoticPrediction
    curve: Optional[CountingCurve] = None
    fit: Optional[FitResult] = None
    ratios: Optional[np.ndarray] = None
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    doubling: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def summary(self) -> dict:
        out = {
            "model": self.config.model,
            "predicted_exponent": self.prediction.exponent,
            "predicted_prefactor": self.prediction.prefactor,
            "C": self.prediction.C,
            "tau": self.prediction.tau,
        }
        if self.fit is not None:
            out.update(fitted_exponent=self.fit.exponent_hat, fitted_prefactor=self.fit.prefactor_hat,
                       r_squared=self.fit.r_squared)
        out["checks"] = {k: bool(v) for k, v in self.checks.items()}
        out["passed"] = self.passed
        if self.notes:
            out["notes"] = list(self.notes)
        if self.doubling is not None:
            out["l_doubling"] = self.doubling
        return out


def spec_from(config: ExperimentConfig) -> PotentialSpec:
    return PotentialSpec(config.gamma, config.Gamma, check_admissible=config.check_admissible)


def prediction_for(config: ExperimentConfig) -> AsymptoticPrediction:
    """Prediction depends on the config only."""
    fibre = M_tilde_grid if config.model == "laplace" else None
    if not config.check_admissible and not any(g > 0 for g in config.Gamma[1:]):
        # outside the admissible class the constant is simply zero
        t = tau(config.n)
        return AsymptoticPrediction(config.n, config.gamma, tuple(config.Gamma), config.n / config.gamma,
                                    t, 0.0, 0.0, config.q, 0.0, 0.0, 0.0, True)
    return constant_C(config.n, config.gamma, config.Gamma, q=config.q, fibre=fibre)


def measure_curve(config: ExperimentConfig, L: Optional[int] = None) -> CountingCurve:
    L = config.L if L is None else L
    spec = spec_from(config)
    lam = config.lambda_grid()
    if config.model == "laplace":
        g = build_lattice(2, SubdividedZ2(Box(L)))
        return laplace_counting_curve(g, spec, lam, seed=config.seed)
    g = build_lattice(config.n, Box(L))
    return counting_curve(g, config.m, spec, lam, seed=config.seed)


def write_curve_csv(path, curve: CountingCurve, prediction: AsymptoticPrediction,
                    runtime: bool = False) -> Path:
    """CSV of the counting curve; timings are optional so that default output is reproducible."""
    path = Path(path)
    L = curve.metadata.get("L", curve.metadata.get("q", ""))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["lambda", "N", "L", "predicted", "ratio", "flagged"]
        if runtime:
            head.append("runtime_ms")
        w.writerow(head)
        for k, (lam, N) in enumerate(zip(curve.lambdas, curve.counts)):
            pred = prediction.prefactor * lam ** (-prediction.exponent)
            ratio = N / pred if pred > 0 else float("nan")
            row = [repr(float(lam)), int(N), L, f"{pred:.10g}", f"{ratio:.10g}", int(curve.flagged[k])]
            if runtime:
                row.append(f"{curve.runtime_ms[k]:.1f}")
            w.writerow(row)
    return path


def _doubling(config: ExperimentConfig, curve: CountingCurve) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoxSizeWarning)
        big = measure_curve(config, 2 * config.L)
    sel = curve.lambdas <= config.ratio_lambda_max
    base = np.maximum(curve.counts[sel], 1)
    change = np.abs(big.counts[sel] - curve.counts[sel]) / base
    worst = float(change.max()) if change.size else 0.0
    return {
        "L": config.L,
        "L2": 2 * config.L,
        "N_L": [int(x) for x in curve.counts],
        "N_2L": [int(x) for x in big.counts],
        "max_relative_change": worst,
        "stable": worst <= DOUBLING_TOL,
    }


def run_verify(config: ExperimentConfig, outdir=None, figure: bool = True) -> VerifyReport:
    """Prediction, counting curve, fit and verdicts.

    Files (when ``outdir`` is given): ``counts.csv``, ``report.jsonl`` and
    ``timings.jsonl``, plus ``counting.svg``.  The CSV is written as soon as
    the curve exists, before fitting.
    """
    out = Path(outdir) if outdir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    pred = prediction_for(config)
    report = VerifyReport(config=config, prediction=pred)
    report.checks["quadrature_converged"] = pred.converged

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoxSizeWarning)
        curve = measure_curve(config)
    report.notes.extend(str(w.message) for w in caught if issubclass(w.category, BoxSizeWarning))
    report.curve = curve
    if out is not None:
        write_curve_csv(out / "counts.csv", curve, pred)
        with (out / "timings.jsonl").open("w") as fh:
            for lam, t in zip(curve.lambdas, curve.runtime_ms):
                fh.write(json.dumps({"lambda": float(lam), "runtime_ms": round(float(t), 1)}) + "\n")

    if not np.any(curve.counts > 0):
        report.notes.append("N is identically zero on the lambda grid")
    try:
        fit = fit_counting_curve(curve, pred)
    except InsufficientData as exc:
        report.notes.append(f"fit refused: {exc}")
        report.checks["fit"] = False
        fit = None
    if fit is not None:
        report.fit = fit
        p = pred.exponent
        report.checks["exponent"] = abs(fit.exponent_hat - p) <= config.exponent_tol * p
        if pred.prefactor > 0:
            ratios = curve.ratios(pred.prefactor, p)
            report.ratios = ratios
            sel = curve.lambdas <= config.ratio_lambda_max
            inside = (ratios[sel] >= config.ratio_low) & (ratios[sel] <= config.ratio_high)
            report.checks["ratio_window"] = bool(sel.any() and inside.all())
            report.checks["ratio_trend"] = trend_toward_one(curve.lambdas, ratios)
        else:
            report.checks["ratio_window"] = False
            report.notes.append("predicted prefactor is zero; ratios undefined")

    failed = not report.passed
    if config.l_doubling == "always" or (config.l_doubling == "auto" and failed and fit is not None):
        report.doubling = _doubling(config, curve)

    if out is not None:
        with (out / "report.jsonl").open("w") as fh:
            fh.write(json.dumps({"config": config.to_dict()}) + "\n")
            fh.write(json.dumps({"prediction": pred.to_dict()}) + "\n")
            fh.write(json.dumps({"summary": report.summary()}) + "\n")
        if figure:
            from .plotting import plot_counting

            fit_pair = (fit.exponent_hat, fit.prefactor_hat) if fit is not None else None
            plot_counting(curve.lambdas, curve.counts, pred.prefactor, pred.exponent,
                          path=out / "counting.svg", fit=fit_pair,
                          title=f"{config.model}: counting function")
    return report
