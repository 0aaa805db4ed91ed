"""Hierarchical causal structure estimation across group and unit levels.

The estimator runs level-wise discovery and then connects the levels:

1. Learn the group-level DAG over Z (and over a second grouping factor W
   when present) with the additive-model learner, unless skipped.
2. Learn the unit-level DAG over X from the largest group only: within a
   single group every group-level influence is constant, so the unit-level
   mechanisms are observed unconfounded (object conditioning).
3. For every unit variable, fit one additive regression on its unit-level
   parents (nonlinear smooths, group intercepts absorbed) plus all
   group-level variables (linear terms).  Group-level effects are
   identified from the per-group totals of that regression, which is where
   their significance is tested: a group-level variable becomes a parent
   when its term p-value is at most ``alpha``.
4. Re-fit all causal functions on the final structure.  The unit-level
   smooths are estimated with the group offsets absorbed, so they are free
   of the omitted-variable bias that unobserved group-level confounders
   would otherwise induce; the per-group residual offsets become the group
   intercepts xi, and residual noise scales are recorded per variable.

Group-specific unit-unit functions (a global smooth plus centered
per-group deviation smooths) are fitted on request, and the module also
provides the centered function-error metric used by the benchmark.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from . import gam
from .cam import CamConfig, CamError, MIN_OBS, cam
from .gam import LINEAR, NONLINEAR, GamFitError, GamUsageError, SmoothSpec, fit_additive
from .graph import Dag, GraphError, Level, NodeId, topological_order

__all__ = [
    "HierDataset",
    "EstimateOptions",
    "EstimationError",
    "LinearFunction",
    "SplineFunction",
    "GroupVarModel",
    "UnitVarModel",
    "HscmModel",
    "estimate",
    "fit_group_specific",
    "function_rmse",
    "model_to_json",
    "model_from_json",
]


class EstimationError(RuntimeError):
    """Structure estimation could not be carried out on the given data."""


@dataclass(frozen=True)
class HierDataset:
    """Two-level dataset: one row per group in ``z``, one row per unit in ``x``.

    ``group_ids`` holds, per unit row, the 0-based index of its group;
    ``group_labels`` keeps the external group identifiers for IO.
    """

    z: np.ndarray
    x: np.ndarray
    group_ids: np.ndarray
    w: np.ndarray | None = None
    group_labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=float)
        x = np.asarray(self.x, dtype=float)
        gid = np.asarray(self.group_ids, dtype=int)
        if z.ndim != 2 or x.ndim != 2:
            raise EstimationError("z and x must be 2-d arrays")
        m = z.shape[0]
        if len(gid) != x.shape[0]:
            raise EstimationError("group_ids must have one entry per unit row")
        if m < 1:
            raise EstimationError("need at least one group")
        if gid.size and (gid.min() < 0 or gid.max() >= m):
            raise EstimationError(f"group ids must lie in [0, {m})")
        sizes = np.bincount(gid, minlength=m)
        if np.any(sizes == 0):
            empty = np.where(sizes == 0)[0].tolist()
            raise EstimationError(f"groups without unit rows: {empty}")
        if self.w is not None:
            w = np.asarray(self.w, dtype=float)
            if w.ndim != 2 or w.shape[0] != m:
                raise EstimationError("w must be a 2-d array with one row per group")
            object.__setattr__(self, "w", w)
        labels = self.group_labels
        if labels is None:
            labels = np.arange(1, m + 1)
        labels = np.asarray(labels, dtype=int)
        if len(labels) != m:
            raise EstimationError("group_labels must have one entry per group")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "group_ids", gid)
        object.__setattr__(self, "group_labels", labels)

    @property
    def m(self) -> int:
        return self.z.shape[0]

    @property
    def q(self) -> int:
        return self.z.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q_w(self) -> int:
        return 0 if self.w is None else self.w.shape[1]

    @property
    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.group_ids, minlength=self.m)


@dataclass(frozen=True)
class EstimateOptions:
    alpha: float = 0.001
    skip_group_dag: bool = False
    group_specific_functions: bool = False
    second_factor: bool = False
    cam_config: CamConfig = field(default_factory=CamConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise EstimationError("alpha must be in (0, 1)")


# -- causal function representations ---------------------------------------


@dataclass(frozen=True)
class LinearFunction:
    """f(v) = slope * v - center; center makes the training mean zero."""

    slope: float
    center: float = 0.0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.slope * np.asarray(v, dtype=float) - self.center

    def to_json_obj(self) -> dict:
        return {"kind": "linear", "slope": self.slope, "center": self.center}


@dataclass(frozen=True)
class SplineFunction:
    """Centered cubic B-spline with linear continuation outside the knot range."""

    knots: np.ndarray
    coef: np.ndarray
    center: float = 0.0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        from scipy.interpolate import BSpline

        v = np.asarray(v, dtype=float)
        lo, hi = self.knots[3], self.knots[-4]
        spline = BSpline(self.knots, self.coef, 3, extrapolate=False)
        out = np.asarray(spline(np.clip(v, lo, hi)), dtype=float)
        deriv = spline.derivative()
        below, above = v < lo, v > hi
        if np.any(below):
            out = out + np.where(below, deriv(lo) * (v - lo), 0.0)
        if np.any(above):
            out = out + np.where(above, deriv(hi) * (v - hi), 0.0)
        return out - self.center

    def to_json_obj(self) -> dict:
        return {
            "kind": "spline",
            "knots": self.knots.tolist(),
            "coef": self.coef.tolist(),
            "center": self.center,
        }


CausalFunction = LinearFunction | SplineFunction


def _function_from_json(obj: dict) -> CausalFunction:
    if obj["kind"] == "linear":
        return LinearFunction(slope=obj["slope"], center=obj["center"])
    if obj["kind"] == "spline":
        return SplineFunction(
            knots=np.array(obj["knots"], dtype=float),
            coef=np.array(obj["coef"], dtype=float),
            center=obj["center"],
        )
    raise EstimationError(f"unknown function kind {obj['kind']!r}")


def _function_from_term(term: gam.TermFit) -> CausalFunction:
    if term.kind == LINEAR:
        return LinearFunction(slope=float(term.coef[0]), center=term.center)
    return SplineFunction(knots=term.knots.copy(), coef=term.coef.copy(), center=term.center)


@dataclass(frozen=True)
class GroupVarModel:
    """Mechanism of one group-level variable: smooths of its same-level parents."""

    intercept: float
    parents: tuple[int, ...]
    functions: Mapping[int, CausalFunction]
    sigma: float


@dataclass(frozen=True)
class UnitVarModel:
    """Mechanism of one unit-level variable.

    Group-level parents contribute linearly, unit-level parents through
    global smooths (optionally plus centered per-group deviation smooths),
    and each group carries a fixed intercept offset.
    """

    intercept: float
    z_parents: tuple[int, ...]
    z_functions: Mapping[int, CausalFunction]
    w_parents: tuple[int, ...]
    w_functions: Mapping[int, CausalFunction]
    x_parents: tuple[int, ...]
    x_functions: Mapping[int, CausalFunction]
    xi: np.ndarray
    sigma: float
    group_deviations: Mapping[int, Mapping[int, CausalFunction]] | None = None

    def has_parents(self) -> bool:
        return bool(self.z_parents or self.w_parents or self.x_parents)

    def x_effect(self, parent: int, values: np.ndarray, group: int | None = None) -> np.ndarray:
        """Global effect of a unit-level parent, plus the group deviation when available."""
        out = self.x_functions[parent](values)
        if group is not None and self.group_deviations is not None:
            dev = self.group_deviations.get(parent)
            if dev is not None and group in dev:
                out = out + dev[group](values)
        return out


@dataclass(frozen=True)
class HscmModel:
    """Estimated (or hand-specified) hierarchical structural causal model."""

    m: int
    q: int
    p: int
    q_w: int
    dag_z: Dag | None
    dag_w: Dag | None
    dag_x: Dag
    z_models: tuple[GroupVarModel, ...]
    w_models: tuple[GroupVarModel, ...]
    x_models: tuple[UnitVarModel, ...]
    options: EstimateOptions | None = None

    def __post_init__(self) -> None:
        if len(self.z_models) != self.q or len(self.x_models) != self.p or len(self.w_models) != self.q_w:
            raise EstimationError("model lists do not match variable counts")
        for k, vm in enumerate(self.x_models):
            if len(vm.xi) != self.m:
                raise EstimationError(f"xi vector of X{k + 1} must have length m={self.m}")
            if not vm.sigma > 0:
                raise EstimationError(f"sigma of X{k + 1} must be positive")
        for name, models in (("Z", self.z_models), ("W", self.w_models)):
            for k, gm in enumerate(models):
                if not gm.sigma > 0:
                    raise EstimationError(f"sigma of {name}{k + 1} must be positive")
        self.union_dag()  # validates level typing and acyclicity

    def union_dag(self) -> Dag:
        """All estimated edges on one leveled DAG (no latent nodes)."""
        edges: list[tuple[NodeId, NodeId]] = []
        if self.dag_z is not None:
            edges.extend(self.dag_z.edges)
        if self.dag_w is not None:
            edges.extend(self.dag_w.edges)
        edges.extend(self.dag_x.edges)
        for k, vm in enumerate(self.x_models):
            target = NodeId(Level.UNIT, k)
            edges.extend((NodeId(Level.GROUP_Z, l), target) for l in vm.z_parents)
            edges.extend((NodeId(Level.GROUP_W, l), target) for l in vm.w_parents)
        return Dag.create(n_group_z=self.q, n_group_w=self.q_w, n_unit=self.p, edges=edges)

    def edge_function(self, edge: tuple[NodeId, NodeId]) -> CausalFunction:
        src, dst = edge
        if dst.level == Level.UNIT:
            vm = self.x_models[dst.index]
            table = {
                Level.GROUP_Z: vm.z_functions,
                Level.GROUP_W: vm.w_functions,
                Level.UNIT: vm.x_functions,
            }[src.level]
            if src.index not in table:
                raise GraphError(f"model has no edge {src}->{dst}")
            return table[src.index]
        models = self.z_models if dst.level == Level.GROUP_Z else self.w_models
        gm = models[dst.index]
        if src.index not in gm.functions:
            raise GraphError(f"model has no edge {src}->{dst}")
        return gm.functions[src.index]


# -- estimation -------------------------------------------------------------


def _group_totals(fit: gam.AdditiveFit, m: int) -> np.ndarray:
    """Per-group total level of a fit with absorbed group intercepts."""
    totals = np.full(m, fit.intercept)
    if fit.group_intercepts is not None:
        totals = totals + fit.group_intercepts
    return totals


def _group_stage_terms(z: np.ndarray, w: np.ndarray | None, second_factor: bool):
    terms = [(f"Z{l + 1}", z[:, l], LINEAR) for l in range(z.shape[1])]
    if second_factor and w is not None:
        terms += [(f"W{l + 1}", w[:, l], LINEAR) for l in range(w.shape[1])]
    return terms


def _fit_unit_variable(
    data: HierDataset,
    k: int,
    x_parents: tuple[int, ...],
    opts: EstimateOptions,
) -> tuple[gam.AdditiveFit, np.ndarray]:
    """Within-group stage: smooths of unit-level parents with group offsets absorbed.

    Returns the fit and the per-group totals (the response of the
    group-level stage).
    """
    preds = [(f"X{d + 1}", data.x[:, d], NONLINEAR) for d in x_parents]
    fit = fit_additive(data.x[:, k], preds, group_ids=data.group_ids, spec=opts.cam_config.score_spec)
    return fit, _group_totals(fit, data.m)


def _between_fit(
    gamma: np.ndarray,
    data: HierDataset,
    z_parents: Sequence[int],
    w_parents: Sequence[int],
    spec: SmoothSpec,
) -> tuple[gam.AdditiveFit | None, np.ndarray]:
    """Group-level stage on selected parents; returns the fit and the xi residuals."""
    terms = [(f"Z{l + 1}", data.z[:, l], LINEAR) for l in sorted(z_parents)]
    terms += [(f"W{l + 1}", data.w[:, l], LINEAR) for l in sorted(w_parents)]
    if not terms:
        xi = gamma - float(np.mean(gamma))
        return None, xi
    fit = fit_additive(gamma, terms, spec=spec)
    values = {t.term_id: (data.z[:, int(t.term_id[1:]) - 1] if t.term_id[0] == "Z" else data.w[:, int(t.term_id[1:]) - 1]) for t in fit.terms}
    xi = gamma - gam.predict(fit, values)
    return fit, xi


def estimate(data: HierDataset, opts: EstimateOptions | None = None) -> HscmModel:
    """Run the full hierarchical structure estimation on a dataset."""
    opts = opts or EstimateOptions()
    spec = opts.cam_config.score_spec

    if opts.second_factor and data.w is None:
        raise EstimationError("second_factor requested but the dataset has no W table")
    use_w = opts.second_factor and data.w is not None

    # group-level DAGs
    dag_z: Dag | None = None
    dag_w: Dag | None = None
    if not opts.skip_group_dag:
        if use_w:
            if data.q_w >= 2:
                dag_w = _run_cam(data.w, opts.cam_config, Level.GROUP_W, "W")
            else:
                dag_w = Dag.create(n_group_w=data.q_w)
        if data.q >= 2:
            if data.m < 2:
                raise EstimationError("group-level discovery needs at least 2 groups")
            dag_z = _run_cam(data.z, opts.cam_config, Level.GROUP_Z, "Z")
        elif data.q > 0:
            dag_z = Dag.create(n_group_z=data.q)

    # unit-level DAG from the largest group (ties: lowest group index)
    sizes = data.group_sizes
    j_star = int(np.argmax(sizes))
    if sizes[j_star] < MIN_OBS:
        raise EstimationError(
            f"largest group has {sizes[j_star]} rows; unit-level discovery needs >= {MIN_OBS}"
        )
    dag_x = _run_cam(data.x[data.group_ids == j_star], opts.cam_config, Level.UNIT, "X")

    x_parent_sets = [
        tuple(sorted(s.index for s in dag_x.parents(NodeId(Level.UNIT, k)))) for k in range(data.p)
    ]

    # connect the levels, then refit on the selected structure
    x_models: list[UnitVarModel] = []
    for k in range(data.p):
        fit_within, gamma = _fit_unit_variable(data, k, x_parent_sets[k], opts)
        z_parents: tuple[int, ...] = ()
        w_parents: tuple[int, ...] = ()
        if data.q + (data.q_w if use_w else 0) > 0:
            sel_terms = _group_stage_terms(data.z, data.w if use_w else None, use_w)
            sel_fit = fit_additive(gamma, sel_terms, spec=spec)
            z_parents = tuple(
                l for l in range(data.q) if sel_fit.term(f"Z{l + 1}").p_value <= opts.alpha
            )
            if use_w:
                w_parents = tuple(
                    l for l in range(data.q_w) if sel_fit.term(f"W{l + 1}").p_value <= opts.alpha
                )
        final_fit, xi = _between_fit(gamma, data, z_parents, w_parents, spec)
        sigma2 = fit_within.residual_variance
        if not np.isfinite(sigma2) or sigma2 <= 0:
            raise EstimationError(f"non-positive residual variance for X{k + 1}")
        z_functions = {}
        w_functions = {}
        intercept = float(np.mean(gamma))
        if final_fit is not None:
            intercept = final_fit.intercept
            for t in final_fit.terms:
                idx = int(t.term_id[1:]) - 1
                if t.term_id[0] == "Z":
                    z_functions[idx] = _function_from_term(t)
                else:
                    w_functions[idx] = _function_from_term(t)
        x_functions = {
            d: _function_from_term(fit_within.term(f"X{d + 1}")) for d in x_parent_sets[k]
        }
        x_models.append(
            UnitVarModel(
                intercept=intercept,
                z_parents=z_parents,
                z_functions=z_functions,
                w_parents=w_parents,
                w_functions=w_functions,
                x_parents=x_parent_sets[k],
                x_functions=x_functions,
                xi=xi,
                sigma=float(np.sqrt(sigma2)),
            )
        )

    z_models = _fit_group_level(data.z, dag_z, Level.GROUP_Z, spec)
    w_models = (
        _fit_group_level(data.w, dag_w, Level.GROUP_W, spec) if use_w else ()
    )

    model = HscmModel(
        m=data.m,
        q=data.q,
        p=data.p,
        q_w=data.q_w if use_w else 0,
        dag_z=dag_z,
        dag_w=dag_w,
        dag_x=dag_x,
        z_models=tuple(z_models),
        w_models=tuple(w_models),
        x_models=tuple(x_models),
        options=opts,
    )
    if opts.group_specific_functions:
        model = _fit_all_group_deviations(data, model, spec)
    return model


def _run_cam(matrix: np.ndarray, config: CamConfig, level: Level, label: str) -> Dag:
    try:
        return cam(np.asarray(matrix, dtype=float), config, level)
    except (CamError, GamUsageError, GamFitError) as exc:
        raise EstimationError(f"structure learning failed on {label}: {exc}") from exc


def _fit_group_level(
    matrix: np.ndarray | None,
    dag: Dag | None,
    level: Level,
    spec: SmoothSpec,
) -> list[GroupVarModel]:
    if matrix is None:
        return []
    matrix = np.asarray(matrix, dtype=float)
    n_vars = matrix.shape[1]
    models: list[GroupVarModel] = []
    for k in range(n_vars):
        parents: tuple[int, ...] = ()
        if dag is not None:
            parents = tuple(sorted(s.index for s in dag.parents(NodeId(level, k))))
        col = matrix[:, k]
        if parents:
            preds = [(f"P{j + 1}", matrix[:, j], NONLINEAR) for j in parents]
            fit = fit_additive(col, preds, spec=spec)
            functions = {
                j: _function_from_term(fit.term(f"P{j + 1}")) for j in parents
            }
            sigma2 = fit.residual_variance
            intercept = fit.intercept
        else:
            functions = {}
            intercept = float(np.mean(col))
            sigma2 = float(np.var(col, ddof=1)) if len(col) > 1 else 0.0
        if not np.isfinite(sigma2) or sigma2 <= 0:
            raise EstimationError(f"non-positive residual variance for {level.name} variable {k + 1}")
        models.append(
            GroupVarModel(
                intercept=intercept,
                parents=parents,
                functions=functions,
                sigma=float(np.sqrt(sigma2)),
            )
        )
    return models


# -- group-specific functions ------------------------------------------------


def _unit_prediction(model: HscmModel, data: HierDataset, k: int, with_deviations: bool = True) -> np.ndarray:
    """In-sample prediction of unit variable k (no noise)."""
    vm = model.x_models[k]
    gid = data.group_ids
    out = np.full(len(gid), vm.intercept) + vm.xi[gid]
    for l in vm.z_parents:
        out = out + vm.z_functions[l](data.z[gid, l])
    for l in vm.w_parents:
        out = out + vm.w_functions[l](data.w[gid, l])
    for d in vm.x_parents:
        out = out + vm.x_functions[d](data.x[:, d])
        if with_deviations and vm.group_deviations is not None:
            dev = vm.group_deviations.get(d)
            if dev:
                for j, fn in dev.items():
                    mask = gid == j
                    if np.any(mask):
                        out[mask] = out[mask] + fn(data.x[mask, d])
    return out


def _fit_deviations_for_node(
    data: HierDataset, model: HscmModel, k: int, spec: SmoothSpec
) -> UnitVarModel:
    """Per-group deviation smooths for every unit-level parent of X^k, fitted jointly."""
    vm = model.x_models[k]
    if not vm.x_parents:
        return vm
    resid = data.x[:, k] - _unit_prediction(model, data, k, with_deviations=False)
    deviations: dict[int, dict[int, CausalFunction]] = {d: {} for d in vm.x_parents}
    extra_df = 0.0
    resid_after = resid.copy()
    for j in range(data.m):
        mask = data.group_ids == j
        n_j = int(np.sum(mask))
        if n_j < spec.n_basis:
            warnings.warn(
                f"group {j} has {n_j} rows (< n_basis={spec.n_basis}); "
                f"its deviation for X{k + 1} is set to zero",
                stacklevel=2,
            )
            continue
        preds = []
        for d in vm.x_parents:
            vals = data.x[mask, d]
            if len(np.unique(vals)) < 4:
                continue
            preds.append((f"X{d + 1}", vals, NONLINEAR))
        if not preds:
            continue
        try:
            dev_fit = fit_additive(resid[mask], preds, spec=spec)
        except (GamUsageError, GamFitError):
            continue
        for t in dev_fit.terms:
            d = int(t.term_id[1:]) - 1
            deviations[d][j] = _function_from_term(t)
            resid_after[mask] = resid_after[mask] - t(data.x[mask, d])
        extra_df += dev_fit.df_model - 1.0
    rss = float(resid_after @ resid_after)
    n = len(resid_after)
    df_total = model.m + sum(1.0 for _ in vm.x_parents) * 0.0 + extra_df  # group offsets + deviations
    # within-stage smooth df is already reflected in the residuals; keep a guard
    dof = max(n - df_total - len(vm.x_parents) * spec.n_basis, 1.0)
    sigma2 = rss / dof
    return replace(
        vm,
        group_deviations={d: devs for d, devs in deviations.items()},
        sigma=float(np.sqrt(max(sigma2, 1e-300))),
    )


def _fit_all_group_deviations(data: HierDataset, model: HscmModel, spec: SmoothSpec) -> HscmModel:
    new_models = tuple(
        _fit_deviations_for_node(data, model, k, spec) for k in range(model.p)
    )
    return replace(model, x_models=new_models)


def fit_group_specific(
    data: HierDataset, model: HscmModel, edge: tuple[NodeId, NodeId]
) -> HscmModel:
    """Fit the global-plus-deviation decomposition for one unit-unit edge.

    The global smooth is the model's existing pooled function for the
    edge; centered per-group deviation smooths are fitted to the residuals
    of the full model.  Prediction for a group without a deviation (too
    few rows) falls back to the global function alone, which is also the
    rule for unseen groups.
    """
    src, dst = edge
    if src.level != Level.UNIT or dst.level != Level.UNIT:
        raise EstimationError(f"group-specific functions apply to unit-unit edges, got {src}->{dst}")
    vm = model.x_models[dst.index]
    if src.index not in vm.x_parents:
        raise EstimationError(f"{src}->{dst} is not an edge of the unit-level DAG")
    spec = (model.options or EstimateOptions()).cam_config.score_spec
    resid = data.x[:, dst.index] - _unit_prediction(model, data, dst.index)
    new_dev: dict[int, CausalFunction] = {}
    for j in range(data.m):
        mask = data.group_ids == j
        n_j = int(np.sum(mask))
        if n_j < spec.n_basis:
            warnings.warn(
                f"group {j} has {n_j} rows (< n_basis={spec.n_basis}); deviation set to zero",
                stacklevel=2,
            )
            continue
        vals = data.x[mask, src.index]
        if len(np.unique(vals)) < 4:
            continue
        try:
            dev_fit = fit_additive(resid[mask], [(f"X{src.index + 1}", vals, NONLINEAR)], spec=spec)
        except (GamUsageError, GamFitError):
            continue
        new_dev[j] = _function_from_term(dev_fit.terms[0])
    deviations = {d: dict(devs) for d, devs in (vm.group_deviations or {}).items()}
    merged = deviations.get(src.index, {})
    merged.update(new_dev)
    deviations[src.index] = merged
    new_vm = replace(vm, group_deviations=deviations)
    new_models = tuple(new_vm if k == dst.index else m for k, m in enumerate(model.x_models))
    return replace(model, x_models=new_models)


# -- function error metric ----------------------------------------------------


class TruthLike(Protocol):
    """What the function-error metric needs from a ground-truth object."""

    def observed_dag(self) -> Dag: ...

    def edge_function(self, edge: tuple[NodeId, NodeId]) -> Callable[[np.ndarray], np.ndarray]: ...

    def group_total_function(
        self, edge: tuple[NodeId, NodeId], group: int
    ) -> Callable[[np.ndarray], np.ndarray] | None: ...

    def parent_observed(self, node: NodeId) -> np.ndarray: ...


def function_rmse(model: HscmModel, truth: TruthLike, grid_size: int = 200) -> float | None:
    """Mean centered RMSE between true and estimated causal functions.

    Each function pair is evaluated on ``grid_size`` equally spaced points
    between the 1st and 99th percentile of the observed parent values and
    both are centered to mean zero over the grid before comparing: additive
    components are only identified up to constants, so levels carry no
    information.  Only edges present in both the model and the truth are
    compared; with no common edge the metric is absent (None), not 0.
    """
    model_edges = set(model.union_dag().edges)
    truth_edges = set(truth.observed_dag().edges)
    common = sorted(model_edges & truth_edges)
    if not common:
        return None
    per_edge: list[float] = []
    for edge in common:
        col = truth.parent_observed(edge[0])
        lo, hi = np.percentile(col, [1.0, 99.0])
        grid = np.linspace(lo, hi, grid_size)
        true_curve = np.asarray(truth.edge_function(edge)(grid), dtype=float)
        est_fn = model.edge_function(edge)
        vm = model.x_models[edge[1].index] if edge[1].level == Level.UNIT else None
        group_true = truth.group_total_function(edge, 0) if vm is not None else None
        has_group_sides = (
            vm is not None
            and vm.group_deviations is not None
            and vm.group_deviations.get(edge[0].index)
            and group_true is not None
        )
        if has_group_sides:
            errs = []
            for j in range(model.m):
                t_fn = truth.group_total_function(edge, j)
                if t_fn is None:
                    continue
                t_vals = np.asarray(t_fn(grid), dtype=float)
                e_vals = vm.x_effect(edge[0].index, grid, group=j)
                t_vals = t_vals - np.mean(t_vals)
                e_vals = e_vals - np.mean(e_vals)
                errs.append(float(np.sqrt(np.mean((t_vals - e_vals) ** 2))))
            per_edge.append(float(np.mean(errs)))
        else:
            est_curve = np.asarray(est_fn(grid), dtype=float)
            t_vals = true_curve - np.mean(true_curve)
            e_vals = est_curve - np.mean(est_curve)
            per_edge.append(float(np.sqrt(np.mean((t_vals - e_vals) ** 2))))
    return float(np.mean(per_edge))


# -- model persistence --------------------------------------------------------


def _functions_to_json(functions: Mapping[int, CausalFunction]) -> dict:
    return {str(k): fn.to_json_obj() for k, fn in sorted(functions.items())}


def _functions_from_json(obj: dict) -> dict[int, CausalFunction]:
    return {int(k): _function_from_json(v) for k, v in obj.items()}


def model_to_json(model: HscmModel) -> str:
    opts = model.options
    obj = {
        "m": model.m,
        "q": model.q,
        "p": model.p,
        "q_w": model.q_w,
        "dag_z": None if model.dag_z is None else model.dag_z.to_json_obj(),
        "dag_w": None if model.dag_w is None else model.dag_w.to_json_obj(),
        "dag_x": model.dag_x.to_json_obj(),
        "z_models": [
            {
                "intercept": gm.intercept,
                "parents": list(gm.parents),
                "functions": _functions_to_json(gm.functions),
                "sigma": gm.sigma,
            }
            for gm in model.z_models
        ],
        "w_models": [
            {
                "intercept": gm.intercept,
                "parents": list(gm.parents),
                "functions": _functions_to_json(gm.functions),
                "sigma": gm.sigma,
            }
            for gm in model.w_models
        ],
        "x_models": [
            {
                "intercept": vm.intercept,
                "z_parents": list(vm.z_parents),
                "z_functions": _functions_to_json(vm.z_functions),
                "w_parents": list(vm.w_parents),
                "w_functions": _functions_to_json(vm.w_functions),
                "x_parents": list(vm.x_parents),
                "x_functions": _functions_to_json(vm.x_functions),
                "xi": vm.xi.tolist(),
                "sigma": vm.sigma,
                "group_deviations": None
                if vm.group_deviations is None
                else {
                    str(d): {str(j): fn.to_json_obj() for j, fn in sorted(devs.items())}
                    for d, devs in sorted(vm.group_deviations.items())
                },
            }
            for vm in model.x_models
        ],
        "options": None
        if opts is None
        else {
            "alpha": opts.alpha,
            "skip_group_dag": opts.skip_group_dag,
            "group_specific_functions": opts.group_specific_functions,
            "second_factor": opts.second_factor,
        },
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def model_from_json(text: str) -> HscmModel:
    obj = json.loads(text)
    opts = None
    if obj.get("options") is not None:
        o = obj["options"]
        opts = EstimateOptions(
            alpha=o["alpha"],
            skip_group_dag=o["skip_group_dag"],
            group_specific_functions=o["group_specific_functions"],
            second_factor=o["second_factor"],
        )

    def group_models(entries) -> tuple[GroupVarModel, ...]:
        return tuple(
            GroupVarModel(
                intercept=e["intercept"],
                parents=tuple(e["parents"]),
                functions=_functions_from_json(e["functions"]),
                sigma=e["sigma"],
            )
            for e in entries
        )

    x_models = tuple(
        UnitVarModel(
            intercept=e["intercept"],
            z_parents=tuple(e["z_parents"]),
            z_functions=_functions_from_json(e["z_functions"]),
            w_parents=tuple(e["w_parents"]),
            w_functions=_functions_from_json(e["w_functions"]),
            x_parents=tuple(e["x_parents"]),
            x_functions=_functions_from_json(e["x_functions"]),
            xi=np.array(e["xi"], dtype=float),
            sigma=e["sigma"],
            group_deviations=None
            if e["group_deviations"] is None
            else {
                int(d): {int(j): _function_from_json(fn) for j, fn in devs.items()}
                for d, devs in e["group_deviations"].items()
            },
        )
        for e in obj["x_models"]
    )
    return HscmModel(
        m=obj["m"],
        q=obj["q"],
        p=obj["p"],
        q_w=obj["q_w"],
        dag_z=None if obj["dag_z"] is None else Dag.from_json_obj(obj["dag_z"]),
        dag_w=None if obj["dag_w"] is None else Dag.from_json_obj(obj["dag_w"]),
        dag_x=Dag.from_json_obj(obj["dag_x"]),
        z_models=group_models(obj["z_models"]),
        w_models=group_models(obj["w_models"]),
        x_models=x_models,
        options=opts,
    )
