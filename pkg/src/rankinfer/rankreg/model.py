"""Model specification, design building, and OLS fitting for
regressions on ranked variables.

A model names a response and regressors, each optionally marked for
rank transformation (at most one ranked regressor). Marked columns are
replaced by their fractional ranks; an optional grouping column
interacts every regressor and the intercept with the group levels,
while the ranks themselves stay pooled over the whole sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import erfc, ndtri

from ..errors import (
    EmptyGroup,
    FormulaError,
    InputError,
    MissingColumn,
    MissingValues,
    NonFinite,
)
from ..numerics import FloatArray, QRFactorization, qr_decompose
from ..ranking import TieRule, frank
from .formula import parse_formula

INTERCEPT_NAME = "(Intercept)"

INFERENCE_WARNING = (
    "inference is asymptotic: z-values and p-values use the standard normal "
    "distribution and the residual degrees of freedom are not valid"
)


@dataclass(frozen=True)
class RankRegressionModel:
    """Specification: which columns enter, which are rank-transformed,
    optional grouping, and the tie parameter omega used for the ranks
    (direction is always increasing)."""

    response: str
    response_ranked: bool
    regressors: tuple[tuple[str, bool], ...]
    intercept: bool = True
    group: str | None = None
    omega: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must lie in [0, 1]")
        if len(self.regressors) == 0 and not self.intercept:
            raise ValueError("model needs at least one regressor or an intercept")
        ranked = [name for name, is_ranked in self.regressors if is_ranked]
        if len(ranked) > 1:
            raise FormulaError(
                f"at most one regressor may be ranked, got {len(ranked)}: "
                + ", ".join(f"r({name})" for name in ranked)
            )
        seen = set()
        for name, is_ranked in self.regressors:
            key = (name, is_ranked)
            if key in seen:
                term = f"r({name})" if is_ranked else name
                raise FormulaError(f"duplicate term {term}")
            seen.add(key)

    @property
    def direction(self) -> Literal["increasing"]:
        return "increasing"

    @property
    def ranked_regressor(self) -> str | None:
        for name, is_ranked in self.regressors:
            if is_ranked:
                return name
        return None

    @classmethod
    def from_formula(cls, text: str, omega: float = 1.0) -> "RankRegressionModel":
        parsed = parse_formula(text)
        return cls(
            response=parsed.response,
            response_ranked=parsed.response_ranked,
            regressors=parsed.terms,
            intercept=True,
            group=parsed.group,
            omega=omega,
        )


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Built design: the numeric matrix plus everything the variance
    machinery needs to know about where ranks entered it."""

    z: FloatArray
    colnames: tuple[str, ...]
    y: FloatArray
    y_raw: FloatArray
    r_y: FloatArray | None
    x_raw: FloatArray | None
    r_x: FloatArray | None
    group_codes: np.ndarray | None
    group_levels: tuple[str, ...] | None
    x_cols: tuple[int, ...]
    x_col_group: tuple[int, ...]
    model: RankRegressionModel
    warnings: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.z.shape[0]


def _numeric_column(data: Mapping[str, object], name: str) -> FloatArray:
    if name not in data:
        raise MissingColumn(f"column '{name}' not found in the data")
    try:
        arr = np.asarray(data[name], dtype=np.float64)
    except (TypeError, ValueError):
        raise InputError(f"column '{name}' is not numeric") from None
    if arr.ndim != 1:
        raise InputError(f"column '{name}' must be 1-D")
    if np.any(np.isnan(arr)):
        raise MissingValues(
            f"column '{name}' contains missing values; subset the data first"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"column '{name}' contains infinite values")
    return arr


def build_design(model: RankRegressionModel, data: Mapping[str, object]) -> DesignMatrix:
    """Assemble the design matrix for a model.

    Column order: the ranked regressor first (when present), then the
    remaining regressors in specification order, then the intercept.
    Grouped models expand every base column into one column per group
    level (group-specific intercepts included, no global intercept).
    """
    warnings: list[str] = []
    y_raw = _numeric_column(data, model.response)
    n = y_raw.size
    if n == 0:
        raise InputError("data has no rows")

    columns: dict[str, FloatArray] = {}
    for name, _ in model.regressors:
        if name not in columns:
            columns[name] = _numeric_column(data, name)
            if columns[name].size != n:
                raise InputError(f"column '{name}' has inconsistent length")

    rule = TieRule(omega=model.omega, direction="increasing")
    r_y = frank(y_raw, rule).values if model.response_ranked else None
    y = r_y if r_y is not None else y_raw

    x_name = model.ranked_regressor
    x_raw = columns[x_name] if x_name is not None else None
    r_x = frank(x_raw, rule).values if x_raw is not None else None

    # Base columns in canonical order: ranked regressor, covariates,
    # intercept last.
    base: list[tuple[str, FloatArray, bool]] = []
    if x_name is not None:
        base.append((f"r({x_name})", r_x, True))
    for name, is_ranked in model.regressors:
        if not is_ranked:
            base.append((name, columns[name], False))
    if model.intercept:
        base.append((INTERCEPT_NAME, np.ones(n), False))

    group_codes: np.ndarray | None = None
    group_levels: tuple[str, ...] | None = None
    if model.group is not None:
        if model.group not in data:
            raise MissingColumn(f"group column '{model.group}' not found in the data")
        raw_group = np.asarray(data[model.group])
        if raw_group.size != n:
            raise InputError(f"column '{model.group}' has inconsistent length")
        levels, codes = np.unique(raw_group, return_inverse=True)
        for lvl, count in zip(levels, np.bincount(codes)):
            if count < 2:
                raise EmptyGroup(
                    f"group level '{lvl}' has {count} row(s); at least 2 required"
                )
        if levels.size == 1:
            warnings.append(
                f"group column '{model.group}' has a single level; "
                "fitting the ungrouped model"
            )
        else:
            group_codes = codes
            group_levels = tuple(str(lvl) for lvl in levels)

    names: list[str] = []
    cols: list[FloatArray] = []
    x_cols: list[int] = []
    x_col_group: list[int] = []
    if group_codes is None:
        for name, values, is_x in base:
            if is_x:
                x_cols.append(len(cols))
                x_col_group.append(-1)
            names.append(name)
            cols.append(values)
    else:
        for name, values, is_x in base:
            for code, level in enumerate(group_levels):
                if is_x:
                    x_cols.append(len(cols))
                    x_col_group.append(code)
                names.append(f"{name}:{level}")
                cols.append(values * (group_codes == code))

    z = np.column_stack(cols)
    return DesignMatrix(
        z=z,
        colnames=tuple(names),
        y=y,
        y_raw=y_raw,
        r_y=r_y,
        x_raw=x_raw,
        r_x=r_x,
        group_codes=group_codes,
        group_levels=group_levels,
        x_cols=tuple(x_cols),
        x_col_group=tuple(x_col_group),
        model=model,
        warnings=tuple(warnings),
    )


@dataclass(eq=False)
class RankRegressionFit:
    """Fitted model: OLS coefficients on the (rank-transformed) design,
    residuals, and the QR factorization reused by the variance code."""

    model: RankRegressionModel
    design: DesignMatrix
    qr: QRFactorization
    coefficients: FloatArray
    residuals: FloatArray
    warnings: tuple[str, ...]
    _caches: dict = field(default_factory=dict, repr=False)

    @property
    def z(self) -> FloatArray:
        return self.design.z

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def colnames(self) -> tuple[str, ...]:
        return self.design.colnames

    @property
    def r_x(self) -> FloatArray | None:
        return self.design.r_x

    @property
    def r_y(self) -> FloatArray | None:
        return self.design.r_y


def fit(model: RankRegressionModel, data: Mapping[str, object]) -> RankRegressionFit:
    """OLS fit of the rank-transformed design via QR."""
    design = build_design(model, data)
    factor = qr_decompose(design.z)
    coefficients = solve_triangular(factor.r, factor.q.T @ design.y, lower=False)
    residuals = design.y - design.z @ coefficients
    return RankRegressionFit(
        model=model,
        design=design,
        qr=factor,
        coefficients=coefficients,
        residuals=residuals,
        warnings=design.warnings,
    )


@dataclass(frozen=True, eq=False)
class CoefficientSummary:
    """Per-coefficient table: estimates, corrected standard errors,
    z-values, two-sided normal p-values, significance stars."""

    names: tuple[str, ...]
    estimates: FloatArray
    std_errors: FloatArray
    z_values: FloatArray
    p_values: FloatArray
    stars: tuple[str, ...]
    warnings: tuple[str, ...]

    def rows(self) -> list[dict]:
        return [
            {
                "name": self.names[i],
                "estimate": float(self.estimates[i]),
                "se": float(self.std_errors[i]),
                "z": float(self.z_values[i]),
                "p": float(self.p_values[i]),
                "stars": self.stars[i],
            }
            for i in range(len(self.names))
        ]


def _stars(p: float) -> str:
    if p <= 0.001:
        return "***"
    if p <= 0.01:
        return "**"
    if p <= 0.05:
        return "*"
    if p <= 0.1:
        return "."
    return ""


def summarize(fit_result: RankRegressionFit) -> CoefficientSummary:
    """Coefficient table with corrected standard errors.

    A zero standard error (degenerate perfect fit) is reported with an
    infinite z sentinel and p-value 0.
    """
    from .variance import corrected_vcov

    cov = corrected_vcov(fit_result)
    se = np.sqrt(np.clip(np.diag(cov.matrix), 0.0, None))
    est = fit_result.coefficients
    z = np.empty_like(est)
    p = np.empty_like(est)
    for i in range(est.size):
        if se[i] == 0.0:
            z[i] = math.inf if est[i] >= 0 else -math.inf
            p[i] = 0.0
        else:
            z[i] = est[i] / se[i]
            p[i] = float(erfc(abs(z[i]) / math.sqrt(2.0)))
    return CoefficientSummary(
        names=fit_result.colnames,
        estimates=est.copy(),
        std_errors=se,
        z_values=z,
        p_values=p,
        stars=tuple(_stars(float(v)) for v in p),
        warnings=fit_result.warnings + (INFERENCE_WARNING,),
    )


def confint(fit_result: RankRegressionFit, level: float = 0.95) -> FloatArray:
    """Per-coefficient normal-quantile intervals, one [low, high] row
    per coefficient in design order."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    from .variance import corrected_vcov

    cov = corrected_vcov(fit_result)
    se = np.sqrt(np.clip(np.diag(cov.matrix), 0.0, None))
    zq = float(ndtri((1.0 + level) / 2.0))
    est = fit_result.coefficients
    return np.column_stack([est - zq * se, est + zq * se])
