"""Penalized B-spline additive regression with per-term smoothing selection.

Fits models of the form

    y = intercept + sum_t f_t(x_t) + xi_g + noise

by penalized least squares.  Nonlinear terms use a cubic B-spline basis
with a second-order difference penalty; the smoothing parameter of each
term is picked from a fixed grid by generalized cross-validation inside a
backfitting loop.  Linear terms are unpenalized single-coefficient terms.
Optional per-group intercepts are absorbed exactly by within-group
demeaning (they are fixed offsets, not random effects), which also
de-biases the remaining terms against group-level confounding.

After backfitting converges the model is re-solved jointly at the chosen
smoothing parameters, so the returned fit satisfies the penalized normal
equations to machine precision.  Each term carries an approximate F-test
p-value for the hypothesis that the term is identically zero, with the
term's effective degrees of freedom as numerator df.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.interpolate import BSpline
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "SmoothSpec",
    "TermFit",
    "AdditiveFit",
    "GamUsageError",
    "GamFitError",
    "fit_additive",
    "predict",
    "term_pvalue",
    "term_values",
    "fit_to_json",
    "fit_from_json",
    "bspline_design",
    "difference_penalty",
    "contrast_basis",
    "gcv_scan",
]

NONLINEAR = "nonlinear_smooth"
LINEAR = "linear"

_SPLINE_DEGREE = 3


class GamUsageError(ValueError):
    """Caller violated an argument contract."""


class GamFitError(RuntimeError):
    """The requested fit is numerically impossible (e.g. rank-deficient design)."""


def _default_lambda_grid() -> tuple[float, ...]:
    return tuple(np.logspace(-4.0, 4.0, 20))


@dataclass(frozen=True)
class SmoothSpec:
    """Configuration of the smoothing machinery.

    ``lambda_grid`` is expressed on a normalized scale: each term's
    difference penalty is rescaled so that trace(penalty) matches
    trace(basis Gram), making the grid meaningful across sample sizes.
    """

    n_basis: int = 10
    penalty_order: int = 2
    lambda_grid: tuple[float, ...] = field(default_factory=_default_lambda_grid)
    knot_placement: str = "quantile"
    max_backfit_iter: int = 100
    backfit_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.n_basis < 4:
            raise GamUsageError("n_basis must be >= 4")
        if self.penalty_order < 1 or self.penalty_order >= self.n_basis:
            raise GamUsageError("penalty_order must be in [1, n_basis)")
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid:
            raise GamUsageError("lambda_grid must be nonempty")
        if any(v < 0 for v in grid) or list(grid) != sorted(grid):
            raise GamUsageError("lambda_grid must be nonnegative and ascending")
        object.__setattr__(self, "lambda_grid", grid)
        if self.knot_placement not in ("quantile", "uniform"):
            raise GamUsageError(f"unknown knot_placement {self.knot_placement!r}")


@dataclass(frozen=True)
class TermFit:
    """One fitted additive component.

    For smooth terms ``coef`` holds the full B-spline coefficient vector
    (original basis) and ``knots`` the padded knot vector; for linear terms
    ``coef`` is the single slope and ``knots`` is None.  ``center`` is the
    mean of the raw term values over the training inputs, subtracted so
    the fitted component averages to zero on the training data.
    """

    term_id: str
    kind: str
    coef: np.ndarray
    knots: np.ndarray | None
    lam: float
    penalty_scale: float
    edf: float
    p_value: float
    center: float
    deviance_drop: float
    x_range: tuple[float, float]

    def raw_values(self, x: np.ndarray) -> np.ndarray:
        """Term evaluation before centering, with linear extrapolation outside the knot range."""
        x = np.asarray(x, dtype=float)
        if self.kind == LINEAR:
            return self.coef[0] * x
        lo, hi = self.knots[_SPLINE_DEGREE], self.knots[-(_SPLINE_DEGREE + 1)]
        spline = BSpline(self.knots, self.coef, _SPLINE_DEGREE, extrapolate=False)
        inner = spline(np.clip(x, lo, hi))
        deriv = spline.derivative()
        out = np.asarray(inner, dtype=float)
        below = x < lo
        above = x > hi
        if np.any(below):
            out = out + np.where(below, deriv(lo) * (x - lo), 0.0)
        if np.any(above):
            out = out + np.where(above, deriv(hi) * (x - hi), 0.0)
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Centered term value f(x)."""
        return self.raw_values(x) - self.center


@dataclass(frozen=True)
class AdditiveFit:
    """Result of :func:`fit_additive`; immutable and safe to share."""

    intercept: float
    terms: tuple[TermFit, ...]
    group_labels: np.ndarray | None
    group_intercepts: np.ndarray | None
    residual_variance: float
    rss: float
    n_obs: int
    df_model: float
    converged: bool
    degenerate_groups: tuple[int, ...]
    spec: SmoothSpec

    def term(self, term_id: str) -> TermFit:
        for t in self.terms:
            if t.term_id == term_id:
                return t
        raise GamUsageError(f"no term {term_id!r} in fit (have {[t.term_id for t in self.terms]})")

    @property
    def has_groups(self) -> bool:
        return self.group_intercepts is not None

    def group_intercept(self, label: int) -> float:
        if not self.has_groups:
            raise GamUsageError("fit has no group intercepts")
        idx = np.searchsorted(self.group_labels, label)
        if idx >= len(self.group_labels) or self.group_labels[idx] != label:
            raise GamUsageError(f"unknown group label {label}")
        return float(self.group_intercepts[idx])


# -- basis helpers --------------------------------------------------------


def _make_knots(x: np.ndarray, n_basis: int, placement: str) -> np.ndarray:
    lo, hi = float(np.min(x)), float(np.max(x))
    n_interior = n_basis - _SPLINE_DEGREE - 1
    if placement == "quantile":
        probs = np.arange(1, n_interior + 1) / (n_interior + 1)
        interior = np.quantile(x, probs)
    else:
        interior = lo + (hi - lo) * np.arange(1, n_interior + 1) / (n_interior + 1)
    # strictly inside the boundary; collapse of interior knots is caught later
    interior = np.clip(interior, lo, hi)
    return np.concatenate([[lo] * (_SPLINE_DEGREE + 1), interior, [hi] * (_SPLINE_DEGREE + 1)])


def bspline_design(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Dense cubic B-spline design matrix; x must lie within the knot range."""
    x = np.asarray(x, dtype=float)
    lo, hi = knots[_SPLINE_DEGREE], knots[-(_SPLINE_DEGREE + 1)]
    return BSpline.design_matrix(np.clip(x, lo, hi), knots, _SPLINE_DEGREE).toarray()


def difference_penalty(n_basis: int, order: int) -> np.ndarray:
    """P = D'D for the ``order``-th difference matrix D on coefficient vectors."""
    d = np.eye(n_basis)
    for _ in range(order):
        d = np.diff(d, axis=0)
    return d.T @ d


def contrast_basis(n_basis: int) -> np.ndarray:
    """Orthonormal (n_basis x n_basis-1) basis of the complement of the ones vector.

    Helmert-style closed form, deterministic across platforms.  Used to
    absorb the sum-to-zero identifiability constraint of centered smooths.
    """
    t = np.zeros((n_basis, n_basis - 1))
    for j in range(1, n_basis):
        norm = np.sqrt(j * (j + 1))
        t[:j, j - 1] = 1.0 / norm
        t[j, j - 1] = -j / norm
    return t


def gcv_scan(
    gram: np.ndarray,
    penalty: np.ndarray,
    rhs: np.ndarray,
    partial_sq_norm: float,
    n_obs: int,
    grid: Sequence[float],
) -> tuple[np.ndarray, int]:
    """GCV scores across a lambda grid for a single penalized term.

    The smoother fits a partial residual r with basis B.  All quantities
    live in coefficient space: gram = B'B, rhs = B'r and partial_sq_norm =
    r'r, so the scan never touches observation-sized arrays.  Returns the
    score vector and the argmin index (first minimum on ties).
    """
    scores = np.full(len(grid), np.inf)
    for i, lam in enumerate(grid):
        a = gram + lam * penalty
        try:
            factor = cho_factor(a, lower=True)
        except np.linalg.LinAlgError:
            continue
        coef = cho_solve(factor, rhs)
        rss = partial_sq_norm - 2.0 * coef @ rhs + coef @ gram @ coef
        rss = max(rss, 0.0)
        edf = float(np.trace(cho_solve(factor, gram)))
        denom = n_obs - edf
        if denom <= 0:
            continue
        scores[i] = n_obs * rss / denom**2
    if not np.any(np.isfinite(scores)):
        raise GamFitError("GCV scan failed for every lambda on the grid")
    return scores, int(np.argmin(scores))


# -- internal fitting machinery -------------------------------------------


class _Term:
    """Mutable per-term state during fitting."""

    def __init__(self, term_id: str, kind: str, x: np.ndarray, spec: SmoothSpec):
        self.term_id = term_id
        self.kind = kind
        self.x = x
        if kind == NONLINEAR:
            self.knots = _make_knots(x, spec.n_basis, spec.knot_placement)
            self.basis_raw = bspline_design(x, self.knots)
            self.contrast = contrast_basis(spec.n_basis)
            pen = difference_penalty(spec.n_basis, spec.penalty_order)
            self.penalty_full = pen
        else:
            self.knots = None
            self.basis_raw = x[:, None]
            self.contrast = np.eye(1)
            self.penalty_full = np.zeros((1, 1))
        self.lam = 0.0
        self.gamma = np.zeros(self.contrast.shape[1])
        self.fitted = np.zeros(len(x))
        self.edf = 1.0
        self.penalty_scale = 1.0

    def attach_demeaned(self, demean) -> None:
        basis = demean(self.basis_raw) @ self.contrast
        self.basis = basis
        self.gram = basis.T @ basis
        if self.kind == NONLINEAR:
            pen = self.contrast.T @ self.penalty_full @ self.contrast
            tr = np.trace(pen)
            self.penalty_scale = float(np.trace(self.gram) / tr) if tr > 0 else 1.0
            self.pen = pen * self.penalty_scale
        else:
            self.pen = np.zeros_like(self.gram)
        # the centered, contrast-reduced basis must have full column rank
        if self.kind == LINEAR:
            if float(self.gram[0, 0]) <= 0.0:
                raise GamFitError(f"rank-deficient design after centering for term {self.term_id!r}")
        else:
            cond = np.linalg.cond(self.gram)
            if not np.isfinite(cond) or cond > 1e12:
                raise GamFitError(f"rank-deficient design after centering for term {self.term_id!r}")

    @property
    def width(self) -> int:
        return self.basis.shape[1]


def _group_demeaner(group_idx: np.ndarray, counts: np.ndarray):
    def demean(v: np.ndarray) -> np.ndarray:
        if v.ndim == 1:
            means = np.bincount(group_idx, weights=v, minlength=len(counts)) / counts
            return v - means[group_idx]
        out = np.empty_like(v, dtype=float)
        for j in range(v.shape[1]):
            col = v[:, j]
            means = np.bincount(group_idx, weights=col, minlength=len(counts)) / counts
            out[:, j] = col - means[group_idx]
        return out

    return demean


def _global_demeaner():
    def demean(v: np.ndarray) -> np.ndarray:
        return v - np.mean(v, axis=0)

    return demean


def _select_lambda(term: _Term, partial: np.ndarray, grid: Sequence[float], n_obs: int) -> None:
    rhs = term.basis.T @ partial
    if term.kind == LINEAR:
        term.lam = 0.0
        term.gamma = np.array([float(rhs[0] / term.gram[0, 0])])
        term.edf = 1.0
        return
    sq = float(partial @ partial)
    _, best = gcv_scan(term.gram, term.pen, rhs, sq, n_obs, grid)
    lam = grid[best]
    factor = cho_factor(term.gram + lam * term.pen, lower=True)
    term.lam = float(lam)
    term.gamma = cho_solve(factor, rhs)
    term.edf = float(np.trace(cho_solve(factor, term.gram)))


def _joint_solve(terms: list[_Term], y_demeaned: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact penalized LS at the current lambdas; updates term states in place."""
    if not terms:
        return y_demeaned.copy(), float(y_demeaned @ y_demeaned)
    design = np.hstack([t.basis for t in terms])
    pen_blocks = [t.lam * t.pen for t in terms]
    a = design.T @ design
    offset = 0
    for t, block in zip(terms, pen_blocks):
        widt = t.width
        a[offset : offset + widt, offset : offset + widt] += block
        offset += widt
    b = design.T @ y_demeaned
    try:
        factor = cho_factor(a, lower=True)
    except np.linalg.LinAlgError:
        # tiny ridge rescues near-singular cross-term collinearity
        jitter = 1e-10 * np.trace(a) / a.shape[0]
        try:
            factor = cho_factor(a + jitter * np.eye(a.shape[0]), lower=True)
        except np.linalg.LinAlgError as exc:
            raise GamFitError(
                "rank-deficient joint design across terms "
                f"({[t.term_id for t in terms]})"
            ) from exc
    beta = cho_solve(factor, b)
    offset = 0
    fitted_total = np.zeros(len(y_demeaned))
    for t in terms:
        t.gamma = beta[offset : offset + t.width].copy()
        t.fitted = t.basis @ t.gamma
        fitted_total += t.fitted
        offset += t.width
    resid = y_demeaned - fitted_total
    # refresh per-term edf at the final smoothing parameters
    for t in terms:
        if t.kind == LINEAR:
            t.edf = 1.0
        else:
            factor_t = cho_factor(t.gram + t.lam * t.pen, lower=True)
            t.edf = float(np.trace(cho_solve(factor_t, t.gram)))
    return resid, float(resid @ resid)


def _reduced_rss(terms: list[_Term], y_demeaned: np.ndarray, drop: int) -> float:
    """RSS of the joint penalized fit with one term removed (lambdas held fixed)."""
    kept = [t for i, t in enumerate(terms) if i != drop]
    if not kept:
        return float(y_demeaned @ y_demeaned)
    design = np.hstack([t.basis for t in kept])
    a = design.T @ design
    offset = 0
    for t in kept:
        a[offset : offset + t.width, offset : offset + t.width] += t.lam * t.pen
        offset += t.width
    b = design.T @ y_demeaned
    try:
        factor = cho_factor(a, lower=True)
    except np.linalg.LinAlgError:
        jitter = 1e-10 * np.trace(a) / a.shape[0]
        factor = cho_factor(a + jitter * np.eye(a.shape[0]), lower=True)
    beta = cho_solve(factor, b)
    rss = float(y_demeaned @ y_demeaned - 2.0 * beta @ b + beta @ a @ beta)
    # a includes the penalty; correct back to the pure residual sum of squares
    offset = 0
    for t in kept:
        block = beta[offset : offset + t.width]
        rss -= float(block @ (t.lam * t.pen) @ block)
        offset += t.width
    return max(rss, 0.0)


def fit_additive(
    y: np.ndarray,
    predictors: Sequence[tuple[str, np.ndarray, str]],
    group_ids: np.ndarray | None = None,
    spec: SmoothSpec | None = None,
) -> AdditiveFit:
    """Fit a penalized additive model, optionally with fixed group intercepts.

    ``predictors`` is a sequence of (term id, values, kind) with kind one of
    ``"nonlinear_smooth"`` or ``"linear"``.  Group intercepts are fixed
    per-group offsets reported with a weighted mean of zero; groups with a
    single observation are absorbed exactly and flagged.
    """
    spec = spec or SmoothSpec()
    y = np.asarray(y, dtype=float)
    n = len(y)
    ids = [p[0] for p in predictors]
    if len(ids) != len(set(ids)):
        raise GamUsageError("duplicate term ids")
    for term_id, values, kind in predictors:
        values = np.asarray(values, dtype=float)
        if len(values) != n:
            raise GamUsageError(f"length mismatch for term {term_id!r}: {len(values)} vs {n}")
        if kind not in (NONLINEAR, LINEAR):
            raise GamUsageError(f"unknown term kind {kind!r} for term {term_id!r}")
        if len(np.unique(values)) < 2:
            raise GamUsageError(f"predictor {term_id!r} needs >= 2 distinct values")

    degenerate: tuple[int, ...] = ()
    if group_ids is not None:
        group_ids = np.asarray(group_ids)
        if len(group_ids) != n:
            raise GamUsageError("group_ids length mismatch")
        labels, group_idx = np.unique(group_ids, return_inverse=True)
        counts = np.bincount(group_idx)
        degenerate = tuple(int(l) for l, c in zip(labels, counts) if c == 1)
        if degenerate:
            warnings.warn(f"groups with a single observation: {degenerate}", stacklevel=2)
        demean = _group_demeaner(group_idx, counts.astype(float))
        df_absorbed = len(labels)
    else:
        labels = None
        demean = _global_demeaner()
        df_absorbed = 1

    terms = [_Term(tid, kind, np.asarray(vals, dtype=float), spec) for tid, vals, kind in predictors]
    for t in terms:
        t.attach_demeaned(demean)

    y_demeaned = demean(y)
    scale = max(float(np.max(np.abs(y_demeaned))), 1e-12)

    # backfitting with per-pass GCV selection of each smooth's lambda
    converged = False
    resid = y_demeaned.copy()
    if terms:
        for _ in range(spec.max_backfit_iter):
            delta = 0.0
            for t in terms:
                partial = resid + t.fitted
                _select_lambda(t, partial, spec.lambda_grid, n)
                new_fit = t.basis @ t.gamma
                delta = max(delta, float(np.max(np.abs(new_fit - t.fitted))))
                t.fitted = new_fit
                resid = partial - new_fit
            if delta <= spec.backfit_tol * scale:
                converged = True
                break
        if not converged:
            warnings.warn("backfitting did not converge; using last iterate", stacklevel=2)
    else:
        converged = True

    # exact joint solve at the selected lambdas, then verify the GCV choice
    # still holds at the joint solution (re-select and re-solve if not)
    resid, rss = _joint_solve(terms, y_demeaned)
    for _ in range(8):
        changed = False
        for t in terms:
            if t.kind != NONLINEAR:
                continue
            partial = resid + t.fitted
            rhs = t.basis.T @ partial
            _, best = gcv_scan(t.gram, t.pen, rhs, float(partial @ partial), n, spec.lambda_grid)
            if spec.lambda_grid[best] != t.lam:
                t.lam = float(spec.lambda_grid[best])
                changed = True
        if not changed:
            break
        resid, rss = _joint_solve(terms, y_demeaned)

    df_model = df_absorbed + sum(t.edf for t in terms)
    dof = n - df_model
    residual_variance = rss / dof if dof > 0 else float("nan")

    # intercept, centering offsets and group intercepts in the raw space
    raw_term_values = [t.basis_raw @ (t.contrast @ t.gamma) for t in terms]
    partial_raw = y - (np.sum(raw_term_values, axis=0) if terms else 0.0)
    if labels is not None:
        gmeans = np.bincount(group_idx, weights=partial_raw) / np.bincount(group_idx)
        base = float(np.mean(partial_raw))
        group_intercepts = gmeans - base
        group_labels = labels.astype(int)
    else:
        base = float(np.mean(partial_raw))
        group_intercepts = None
        group_labels = None
    centers = [float(np.mean(v)) for v in raw_term_values]
    intercept = base + sum(centers)

    # approximate F-tests: full vs term-removed fit at fixed lambdas
    sigma2 = rss / dof if dof > 0 else float("nan")
    term_fits = []
    for i, t in enumerate(terms):
        rss_red = _reduced_rss(terms, y_demeaned, i)
        drop = max(rss_red - rss, 0.0)
        if dof > 0 and sigma2 > 0:
            fstat = (drop / t.edf) / sigma2
            pval = float(stats.f.sf(fstat, t.edf, dof))
        elif drop > 0:
            pval = 0.0
        else:
            pval = 1.0
        coef = t.contrast @ t.gamma if t.kind == NONLINEAR else t.gamma.copy()
        term_fits.append(
            TermFit(
                term_id=t.term_id,
                kind=t.kind,
                coef=coef,
                knots=t.knots,
                lam=t.lam,
                penalty_scale=t.penalty_scale,
                edf=t.edf,
                p_value=pval,
                center=centers[i],
                deviance_drop=drop,
                x_range=(float(np.min(t.x)), float(np.max(t.x))),
            )
        )

    return AdditiveFit(
        intercept=intercept,
        terms=tuple(term_fits),
        group_labels=group_labels,
        group_intercepts=group_intercepts,
        residual_variance=float(residual_variance),
        rss=float(rss),
        n_obs=n,
        df_model=float(df_model),
        converged=converged,
        degenerate_groups=degenerate,
        spec=spec,
    )


def predict(
    fit: AdditiveFit,
    predictors: dict[str, np.ndarray],
    group_ids: np.ndarray | None = None,
) -> np.ndarray:
    """Evaluate the additive model at new predictor values.

    When the fit has group intercepts and ``group_ids`` is omitted, the
    global prediction (xi left out) is returned; unknown group labels are
    a usage error.
    """
    lengths = {len(np.asarray(v)) for v in predictors.values()}
    if group_ids is not None:
        lengths.add(len(group_ids))
    if len(lengths) > 1:
        raise GamUsageError("predictor vectors have mismatched lengths")
    n = lengths.pop() if lengths else 1
    out = np.full(n, fit.intercept)
    for t in fit.terms:
        if t.term_id not in predictors:
            raise GamUsageError(f"missing values for term {t.term_id!r}")
        out = out + t(np.asarray(predictors[t.term_id], dtype=float))
    unknown = set(predictors) - {t.term_id for t in fit.terms}
    if unknown:
        raise GamUsageError(f"unknown term ids {sorted(unknown)}")
    if group_ids is not None:
        if not fit.has_groups:
            raise GamUsageError("fit has no group intercepts")
        idx = np.searchsorted(fit.group_labels, group_ids)
        idx = np.clip(idx, 0, len(fit.group_labels) - 1)
        bad = fit.group_labels[idx] != np.asarray(group_ids)
        if np.any(bad):
            raise GamUsageError(f"unknown group labels {sorted(set(np.asarray(group_ids)[bad].tolist()))}")
        out = out + fit.group_intercepts[idx]
    return out


def term_pvalue(fit: AdditiveFit, term_id: str) -> float:
    """Stored p-value for the hypothesis that the term is identically zero."""
    return float(fit.term(term_id).p_value)


def term_values(fit: AdditiveFit, term_id: str, x: np.ndarray) -> np.ndarray:
    """Centered component function of one term evaluated at ``x``."""
    return fit.term(term_id)(x)


# -- serialization ---------------------------------------------------------


def fit_to_json(fit: AdditiveFit) -> str:
    obj = {
        "intercept": fit.intercept,
        "residual_variance": fit.residual_variance,
        "rss": fit.rss,
        "n_obs": fit.n_obs,
        "df_model": fit.df_model,
        "converged": fit.converged,
        "degenerate_groups": list(fit.degenerate_groups),
        "group_labels": None if fit.group_labels is None else fit.group_labels.tolist(),
        "group_intercepts": None if fit.group_intercepts is None else fit.group_intercepts.tolist(),
        "spec": {
            "n_basis": fit.spec.n_basis,
            "penalty_order": fit.spec.penalty_order,
            "lambda_grid": list(fit.spec.lambda_grid),
            "knot_placement": fit.spec.knot_placement,
            "max_backfit_iter": fit.spec.max_backfit_iter,
            "backfit_tol": fit.spec.backfit_tol,
        },
        "terms": [
            {
                "term_id": t.term_id,
                "kind": t.kind,
                "coef": t.coef.tolist(),
                "knots": None if t.knots is None else t.knots.tolist(),
                "lam": t.lam,
                "penalty_scale": t.penalty_scale,
                "edf": t.edf,
                "p_value": t.p_value,
                "center": t.center,
                "deviance_drop": t.deviance_drop,
                "x_range": list(t.x_range),
            }
            for t in fit.terms
        ],
    }
    return json.dumps(obj, indent=2)


def fit_from_json(text: str) -> AdditiveFit:
    obj = json.loads(text)
    spec = SmoothSpec(
        n_basis=obj["spec"]["n_basis"],
        penalty_order=obj["spec"]["penalty_order"],
        lambda_grid=tuple(obj["spec"]["lambda_grid"]),
        knot_placement=obj["spec"]["knot_placement"],
        max_backfit_iter=obj["spec"]["max_backfit_iter"],
        backfit_tol=obj["spec"]["backfit_tol"],
    )
    terms = tuple(
        TermFit(
            term_id=t["term_id"],
            kind=t["kind"],
            coef=np.array(t["coef"], dtype=float),
            knots=None if t["knots"] is None else np.array(t["knots"], dtype=float),
            lam=t["lam"],
            penalty_scale=t["penalty_scale"],
            edf=t["edf"],
            p_value=t["p_value"],
            center=t["center"],
            deviance_drop=t["deviance_drop"],
            x_range=(t["x_range"][0], t["x_range"][1]),
        )
        for t in obj["terms"]
    )
    return AdditiveFit(
        intercept=obj["intercept"],
        terms=terms,
        group_labels=None if obj["group_labels"] is None else np.array(obj["group_labels"], dtype=int),
        group_intercepts=None if obj["group_intercepts"] is None else np.array(obj["group_intercepts"], dtype=float),
        residual_variance=obj["residual_variance"],
        rss=obj["rss"],
        n_obs=obj["n_obs"],
        df_model=obj["df_model"],
        converged=obj["converged"],
        degenerate_groups=tuple(obj["degenerate_groups"]),
        spec=spec,
    )
