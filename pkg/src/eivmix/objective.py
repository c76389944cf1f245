"""Negative log-likelihood objectives for grouped errors-in-variables data.

The general objective treats each group as a pair of mixture densities, one
built from the observed inputs and one from the observed outputs, and scores
a parameter vector by a single integral per group:

    value = - sum_r log  integral  f_out_r(M(s; alpha)) * f_in_r(s) ds

where f_in_r is the equal-weight mixture of the group's input error
densities centered at its observed inputs (and f_out_r likewise on the
output side). Fully paired data (all groups singleton) recovers the
classical errors-in-variables likelihood; a single group is the completely
unpaired case where only the marginal distributions matter.

The integral is evaluated on a trapezoidal tensor grid per group or by Monte
Carlo sampling of the input mixture. Point-mass input densities never reach
numeric evaluation: their contribution collapses analytically to a function
evaluation (sifting), which is also how exact classical regression
objectives are recovered.

Closed forms for the Gaussian line/hyperplane and the uniform-interval line
avoid numeric integration entirely. The Gaussian closed forms omit one
additive constant, ``GAUSS_LOG_NORM_PER_GROUP`` per group, relative to
``nll_general`` (which keeps fully normalized densities); the interval
closed form keeps full normalization and matches ``nll_general`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dataset import Group, GroupedDataset
from .densities import GAUSSIAN, POINT_MASS, UNIFORM, DensityParams, density_eval
from .models import ParametricModel, model_eval_batch

QUADRATURE = "quadrature-grid"
MONTE_CARLO = "monte-carlo"

#: Additive constant, per group, by which the Gaussian closed forms differ
#: from nll_general: closed_form.value + R * GAUSS_LOG_NORM_PER_GROUP
#: equals the fully normalized objective.
GAUSS_LOG_NORM_PER_GROUP = 0.5 * math.log(2.0 * math.pi)

_SQRT_2PI = math.sqrt(2.0 * math.pi)

_MAX_GRID_POINTS = 1 << 22


@dataclass(frozen=True)
class IntegrationConfig:
    """How to evaluate the per-group integrals of the general objective.

    ``grid_points_per_dim`` of None picks 201 for one-dimensional inputs and
    61 otherwise. ``grid_halfwidth_sigmas`` controls how far the grid
    extends beyond the mixture component centers, in units of the largest
    component scale per coordinate. Monte Carlo draws are seeded per group
    from (seed, group index), so results do not depend on evaluation order.
    """

    method: str = QUADRATURE
    mc_samples: int = 2000
    grid_points_per_dim: Optional[int] = None
    grid_halfwidth_sigmas: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in (QUADRATURE, MONTE_CARLO):
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.mc_samples < 100:
            raise ValueError("mc_samples must be >= 100")
        g = self.grid_points_per_dim
        if g is not None and (g < 11 or g % 2 == 0):
            raise ValueError("grid_points_per_dim must be >= 11 and odd")
        if not self.grid_halfwidth_sigmas > 0:
            raise ValueError("grid_halfwidth_sigmas must be > 0")

    def points_for_dim(self, input_dim: int) -> int:
        if self.grid_points_per_dim is not None:
            return self.grid_points_per_dim
        return 201 if input_dim == 1 else 61


@dataclass(frozen=True, eq=False)
class ObjectiveValue:
    """Objective total plus the per-group log-likelihood decomposition.

    ``value`` is exactly minus the sum of ``per_group_log``. A group whose
    likelihood underflows to zero contributes -inf and pushes the value to
    +inf (never NaN); ``note`` then names the offending groups.
    """

    value: float
    per_group_log: np.ndarray
    note: Optional[str] = None

    @staticmethod
    def from_group_logs(per_group_log: np.ndarray) -> "ObjectiveValue":
        per_group_log = np.asarray(per_group_log, dtype=float)
        note = None
        if np.any(np.isneginf(per_group_log)):
            bad = np.flatnonzero(np.isneginf(per_group_log))
            note = "likelihood underflow in groups " + str(bad.tolist())
            value = math.inf
        else:
            value = float(-per_group_log.sum())
        per_group_log.flags.writeable = False
        return ObjectiveValue(value, per_group_log, note)


def mixture_density_eval(group: Group, side: str, s) -> float:
    """Evaluate a group's input or output mixture density at a point.

    The mixture puts equal weight on one error density per observed point,
    centered there. Point-mass components cannot be evaluated numerically.
    """
    if side == "input":
        centers, densities = group.inputs, group.input_densities
    elif side == "output":
        centers, densities = group.outputs, group.output_densities
    else:
        raise ValueError("side must be 'input' or 'output'")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    total = 0.0
    for c, d in zip(centers, densities):
        total += density_eval(d, c - s)
    return total / len(densities)


def _pdf_product(z: np.ndarray, scale: np.ndarray, kind: str) -> np.ndarray:
    """Product density over the last axis; z and scale broadcast together."""
    if kind == GAUSSIAN:
        q = np.sum((z / scale) ** 2, axis=-1)
        norm = np.prod(scale * _SQRT_2PI, axis=-1)
        return np.exp(-0.5 * q) / norm
    inside = np.all(np.abs(z) <= scale, axis=-1)
    return inside / np.prod(2.0 * scale, axis=-1)


class _Bucket:
    """Groups sharing (H, L, per-column density kinds), stacked for array math."""

    def __init__(self, idx, x, xscale, in_kinds, y, yscale, out_kinds):
        self.idx = np.asarray(idx)
        self.x = x  # (B, H, k)
        self.xscale = xscale  # (B, H, k), zeros for point-mass columns
        self.in_kinds = in_kinds  # tuple of length H
        self.y = y  # (B, L, m)
        self.yscale = yscale  # (B, L, m)
        self.out_kinds = out_kinds  # tuple of length L
        self.cont_cols = [h for h, k_ in enumerate(in_kinds) if k_ != POINT_MASS]
        self.pm_cols = [h for h, k_ in enumerate(in_kinds) if k_ == POINT_MASS]
        self.mc_comp = None  # (B, P) component choices
        self.mc_basis_normal = None  # (B, P, k)
        self.mc_basis_uniform = None  # (B, P, k)


def _stack_side(points_list, densities_list):
    """Stack per-group points and density scales; point masses get scale 0."""
    pts = np.stack(points_list)
    scales = np.zeros_like(pts)
    kinds = tuple(d.kind for d in densities_list[0])
    for j, ds_row in enumerate(densities_list):
        for h, d in enumerate(ds_row):
            if d.kind != POINT_MASS:
                scales[j, h, :] = d.scale
    return pts, scales, kinds


class CompiledObjective:
    """Reusable evaluator of the general grouped objective.

    Compiling once and evaluating many times is what the optimizer does;
    ``nll_general`` is the one-shot convenience wrapper. Evaluation is a
    pure function of (dataset, alpha, config): Monte Carlo draws are fixed
    at compile time from (config seed, group index).

    ``input_scales`` / ``output_scales`` overrides replace the scales of
    every Gaussian density (per coordinate, globally); other density kinds
    are unaffected. This is the hook the extended objective uses.
    """

    def __init__(self, ds: GroupedDataset, model: ParametricModel, cfg: IntegrationConfig):
        if model.input_dim != ds.input_dim or model.output_dim != ds.output_dim:
            raise ValueError(
                f"model maps R^{model.input_dim} -> R^{model.output_dim}, "
                f"dataset has input_dim={ds.input_dim}, output_dim={ds.output_dim}"
            )
        for r, g in enumerate(ds.groups):
            for d in g.output_densities:
                if d.kind == POINT_MASS:
                    raise ValueError(
                        f"group {r} has a point-mass output density; the output "
                        "mixture cannot be evaluated (sifting applies to inputs only)"
                    )
        self.ds = ds
        self.model = model
        self.cfg = cfg
        self.n_groups = ds.n_groups
        k = ds.input_dim
        g = cfg.points_for_dim(k)
        if cfg.method == QUADRATURE and g**k > _MAX_GRID_POINTS:
            raise ValueError(
                f"{g} points per dim in {k} dims exceeds the grid budget; "
                "reduce grid_points_per_dim or use the monte-carlo method"
            )
        self._grid_points = g
        # index table for the tensor grid, shape (g^k, k)
        mesh = np.meshgrid(*([np.arange(g)] * k), indexing="ij")
        self._grid_index = np.stack(mesh, axis=-1).reshape(-1, k)
        wbase = np.ones(g)
        wbase[0] = wbase[-1] = 0.5
        self._wprod = np.prod(wbase[self._grid_index], axis=1)  # (G,)

        keyed = {}
        for r, grp in enumerate(ds.groups):
            key = (
                grp.n_inputs,
                grp.n_outputs,
                tuple(d.kind for d in grp.input_densities),
                tuple(d.kind for d in grp.output_densities),
            )
            keyed.setdefault(key, []).append(r)
        self.buckets = []
        for rows in keyed.values():
            groups = [ds.groups[r] for r in rows]
            x, xscale, in_kinds = _stack_side(
                [g_.inputs for g_ in groups], [g_.input_densities for g_ in groups]
            )
            y, yscale, out_kinds = _stack_side(
                [g_.outputs for g_ in groups], [g_.output_densities for g_ in groups]
            )
            self.buckets.append(_Bucket(rows, x, xscale, in_kinds, y, yscale, out_kinds))
        if cfg.method == MONTE_CARLO:
            self._draw_mc_samples()

    def _draw_mc_samples(self):
        P = self.cfg.mc_samples
        k = self.ds.input_dim
        for b in self.buckets:
            B, H = b.x.shape[0], b.x.shape[1]
            comp = np.empty((B, P), dtype=np.intp)
            zn = np.empty((B, P, k))
            zu = np.empty((B, P, k))
            for j, r in enumerate(b.idx):
                rng = np.random.default_rng((self.cfg.seed, int(r)))
                comp[j] = rng.integers(0, H, P)
                zn[j] = rng.standard_normal((P, k))
                zu[j] = rng.uniform(-1.0, 1.0, (P, k))
            b.mc_comp = comp
            b.mc_basis_normal = zn
            b.mc_basis_uniform = zu

    # -- scale overrides ---------------------------------------------------

    @staticmethod
    def _effective_scales(scales, kinds, override):
        if override is None:
            return scales
        out = scales.copy()
        gcols = [h for h, k_ in enumerate(kinds) if k_ == GAUSSIAN]
        if gcols:
            out[:, gcols, :] = override
        return out

    # -- output mixture ----------------------------------------------------

    def _output_mixture(self, b: _Bucket, yscale, vals):
        """(1/L) sum_l f_eps_l(y_l - vals); vals has shape (B, n, m) -> (B, n)."""
        z = b.y[:, :, None, :] - vals[:, None, :, :]  # (B, L, n, m)
        kinds = set(b.out_kinds)
        if len(kinds) == 1:
            comp = _pdf_product(z, yscale[:, :, None, :], b.out_kinds[0])
            return comp.mean(axis=1)
        total = np.zeros(z.shape[:1] + z.shape[2:3])
        for l, kind in enumerate(b.out_kinds):
            total += _pdf_product(z[:, l], yscale[:, l, None, :], kind)
        return total / len(b.out_kinds)

    def _input_mixture_on_grid(self, b: _Bucket, xscale, pts):
        """Continuous part of the input mixture on grid pts (B, G, k) -> (B, G)."""
        cont = b.cont_cols
        kinds = set(b.in_kinds[h] for h in cont)
        H = b.x.shape[1]
        if len(kinds) == 1:
            z = b.x[:, cont, None, :] - pts[:, None, :, :]  # (B, Hc, G, k)
            comp = _pdf_product(z, xscale[:, cont, None, :], kinds.pop())
            return comp.sum(axis=1) / H
        total = np.zeros(pts.shape[:2])
        for h in cont:
            z = b.x[:, h, None, :] - pts  # (B, G, k)
            total += _pdf_product(z, xscale[:, h, None, :], b.in_kinds[h])
        return total / H

    def _model_on(self, alpha, pts):
        B, n, k = pts.shape
        vals = model_eval_batch(self.model, alpha, pts.reshape(B * n, k))
        return vals.reshape(B, n, self.ds.output_dim)

    # -- evaluation --------------------------------------------------------

    def evaluate(self, alpha, input_scales=None, output_scales=None) -> ObjectiveValue:
        per_group = np.empty(self.n_groups)
        ghs = self.cfg.grid_halfwidth_sigmas
        g = self._grid_points
        for b in self.buckets:
            xscale = self._effective_scales(b.xscale, b.in_kinds, input_scales)
            yscale = self._effective_scales(b.yscale, b.out_kinds, output_scales)
            H = b.x.shape[1]
            if self.cfg.method == MONTE_CARLO:
                # the mixture is sampled whole: point-mass components simply
                # land exactly on their centers (zero scale)
                centers = np.take_along_axis(b.x, b.mc_comp[:, :, None], axis=1)
                scale_sel = np.take_along_axis(xscale, b.mc_comp[:, :, None], axis=1)
                kind_code = np.array(
                    [0 if k_ == GAUSSIAN else 1 for k_ in b.in_kinds]
                )[b.mc_comp]
                basis = np.where(
                    kind_code[:, :, None] == 0, b.mc_basis_normal, b.mc_basis_uniform
                )
                samples = centers - scale_sel * basis  # (B, P, k)
                fy = self._output_mixture(b, yscale, self._model_on(alpha, samples))
                lik = fy.mean(axis=1)
            else:
                lik = np.zeros(b.x.shape[0])
                if b.cont_cols:
                    c = b.x[:, b.cont_cols, :]
                    sc = xscale[:, b.cont_cols, :]
                    pad = ghs * sc.max(axis=1)  # (B, k)
                    lo = c.min(axis=1) - pad
                    hi = c.max(axis=1) + pad
                    t = np.linspace(0.0, 1.0, g)
                    lin = lo[:, None, :] + (hi - lo)[:, None, :] * t[None, :, None]
                    gi = self._grid_index
                    pts = np.stack(
                        [lin[:, gi[:, d], d] for d in range(lin.shape[2])], axis=-1
                    )  # (B, G, k)
                    fx = self._input_mixture_on_grid(b, xscale, pts)
                    fy = self._output_mixture(b, yscale, self._model_on(alpha, pts))
                    step = (hi - lo) / (g - 1)
                    weights = step.prod(axis=1)[:, None] * self._wprod[None, :]
                    lik = lik + np.sum(fx * fy * weights, axis=1)
                if b.pm_cols:
                    xp = b.x[:, b.pm_cols, :]
                    fy = self._output_mixture(b, yscale, self._model_on(alpha, xp))
                    lik = lik + fy.sum(axis=1) / H
            with np.errstate(divide="ignore"):
                per_group[b.idx] = np.log(lik)
        return ObjectiveValue.from_group_logs(per_group)

    def __call__(self, alpha) -> float:
        return self.evaluate(alpha).value


def nll_general(
    ds: GroupedDataset, model: ParametricModel, cfg: IntegrationConfig, alpha
) -> ObjectiveValue:
    """General grouped mixture objective (one-shot; see CompiledObjective)."""
    return CompiledObjective(ds, model, cfg).evaluate(alpha)


def nll_extended(
    ds: GroupedDataset,
    model: ParametricModel,
    cfg: IntegrationConfig,
    alpha,
    params: DensityParams,
    bounds=None,
) -> ObjectiveValue:
    """General objective with all Gaussian scales replaced by global ones.

    ``params`` carries one scale per input coordinate and one per output
    coordinate; every Gaussian density in the dataset is evaluated with
    those scales instead of its stored ones (normalization included, so
    scale changes move the objective). Uniform and point-mass densities are
    untouched. ``bounds`` is an optional (lower, upper) pair of
    DensityParams; scales at or outside the box are a contract violation.
    Default bounds are (1e-8, 1e8) per coordinate.
    """
    k, m = ds.input_dim, ds.output_dim
    if params.input_scales.shape != (k,) or params.output_scales.shape != (m,):
        raise ValueError(
            f"params must hold {k} input and {m} output scales, got "
            f"{params.input_scales.shape} and {params.output_scales.shape}"
        )
    if bounds is None:
        lo = DensityParams(np.full(k, 1e-8), np.full(m, 1e-8))
        hi = DensityParams(np.full(k, 1e8), np.full(m, 1e8))
    else:
        lo, hi = bounds
    ok = (
        np.all(params.input_scales > lo.input_scales)
        and np.all(params.input_scales < hi.input_scales)
        and np.all(params.output_scales > lo.output_scales)
        and np.all(params.output_scales < hi.output_scales)
    )
    if not ok:
        raise ValueError("density scales at or outside the configured bounds")
    return CompiledObjective(ds, model, cfg).evaluate(
        alpha, input_scales=params.input_scales, output_scales=params.output_scales
    )


def log_posterior(
    ds: GroupedDataset,
    model: ParametricModel,
    cfg: IntegrationConfig,
    prior: Callable[[np.ndarray], float],
    alpha,
) -> float:
    """Unnormalized log posterior: prior(alpha) minus the general objective.

    A constant prior reproduces maximum likelihood; a -inf prior (e.g. a box
    constraint) excludes the point regardless of the data term.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    p = float(prior(alpha))
    if p == -math.inf:
        return -math.inf
    v = nll_general(ds, model, cfg, alpha).value
    if v == math.inf:
        return -math.inf
    return -v + p


# -- shared-scale extraction ------------------------------------------------


def shared_gaussian_scales(ds: GroupedDataset) -> tuple:
    """Shared per-coordinate Gaussian scales (input vector, output vector).

    Raises if any density is not Gaussian or scales differ across points;
    the closed-form Gaussian objectives require this homogeneity.
    """
    def collect(densities_iter, side):
        rows = []
        for d in densities_iter:
            if d.kind != GAUSSIAN:
                raise ValueError(
                    f"{side} densities must all be gaussian-diagonal, found {d.kind}"
                )
            rows.append(d.scale)
        rows = np.stack(rows)
        if not np.all(rows == rows[0]):
            raise ValueError(f"{side} densities must share one scale vector")
        return rows[0]

    eta = collect((d for g in ds.groups for d in g.input_densities), "input")
    eps = collect((d for g in ds.groups for d in g.output_densities), "output")
    return eta, eps


def shared_uniform_halfwidths(ds: GroupedDataset) -> tuple:
    """Like shared_gaussian_scales, for uniform-box densities."""
    def collect(densities_iter, side):
        rows = []
        for d in densities_iter:
            if d.kind != UNIFORM:
                raise ValueError(
                    f"{side} densities must all be uniform-box, found {d.kind}"
                )
            rows.append(d.scale)
        rows = np.stack(rows)
        if not np.all(rows == rows[0]):
            raise ValueError(f"{side} densities must share one half-width vector")
        return rows[0]

    v = collect((d for g in ds.groups for d in g.input_densities), "input")
    w = collect((d for g in ds.groups for d in g.output_densities), "output")
    return v, w


# -- Gaussian closed forms ----------------------------------------------------


class CompiledGaussianPlane:
    """Closed-form grouped objective for an affine model with Gaussian errors.

    Exploits the Gaussian convolution identity: each input/output
    combination contributes a Gaussian in the combined residual with
    variance V = sum_n alpha_{n+1}^2 sigma_eta_n^2 + sigma_eps^2. Values
    omit GAUSS_LOG_NORM_PER_GROUP per group (see module docstring).
    """

    def __init__(self, ds: GroupedDataset, sigma_eta, sigma_eps: float):
        if ds.output_dim != 1:
            raise ValueError("closed form requires a single output coordinate")
        sigma_eta = np.atleast_1d(np.asarray(sigma_eta, dtype=float))
        if sigma_eta.shape != (ds.input_dim,):
            raise ValueError(
                f"sigma_eta has shape {sigma_eta.shape}, expected ({ds.input_dim},)"
            )
        if np.any(sigma_eta <= 0) or not sigma_eps > 0:
            raise ValueError("sigmas must be > 0")
        self.sigma_eta = sigma_eta
        self.sigma_eps = float(sigma_eps)
        self.n_groups = ds.n_groups
        keyed = {}
        for r, g in enumerate(ds.groups):
            keyed.setdefault((g.n_inputs, g.n_outputs), []).append(r)
        self.buckets = []
        for (h, l), rows in keyed.items():
            x = np.stack([ds.groups[r].inputs for r in rows])  # (B, H, k)
            y = np.stack([ds.groups[r].outputs[:, 0] for r in rows])  # (B, L)
            self.buckets.append((np.asarray(rows), x, y, math.log(h * l)))

    def evaluate(self, alpha) -> ObjectiveValue:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        slopes = alpha[1:]
        v = float(np.sum(slopes**2 * self.sigma_eta**2) + self.sigma_eps**2)
        per_group = np.empty(self.n_groups)
        for rows, x, y, log_hl in self.buckets:
            pred = alpha[0] + x @ slopes  # (B, H)
            e = -((pred[:, :, None] - y[:, None, :]) ** 2) / (2.0 * v)  # (B, H, L)
            emax = e.max(axis=(1, 2))
            lse = emax + np.log(np.exp(e - emax[:, None, None]).sum(axis=(1, 2)))
            per_group[rows] = lse - log_hl - 0.5 * math.log(v)
        return ObjectiveValue.from_group_logs(per_group)

    def __call__(self, alpha) -> float:
        return self.evaluate(alpha).value


def nll_gaussian_line(
    ds: GroupedDataset, sigma_eta: float, sigma_eps: float, alpha
) -> ObjectiveValue:
    """Closed-form objective for the 1-d line with shared Gaussian errors.

    For fully paired data the value is exactly
    (L/2) log(alpha_2^2 sigma_eta^2 + sigma_eps^2) + sum_l d_l^2 / (2 V)
    with d_l the line residuals; no hidden constants beyond the omitted
    GAUSS_LOG_NORM_PER_GROUP per group.
    """
    if ds.input_dim != 1:
        raise ValueError("line closed form requires scalar inputs")
    return CompiledGaussianPlane(ds, [sigma_eta], sigma_eps).evaluate(alpha)


def nll_gaussian_hyperplane(
    ds: GroupedDataset, sigma_eta, sigma_eps: float, alpha
) -> ObjectiveValue:
    """Closed-form objective for the affine hyperplane with Gaussian errors."""
    return CompiledGaussianPlane(ds, sigma_eta, sigma_eps).evaluate(alpha)


# -- interval (uniform) closed form -------------------------------------------


class CompiledIntervalLine:
    """Closed-form objective for the 1-d line with uniform-box errors.

    Each input is an interval [x - v, x + v], each output an interval
    [y - w, y + w]. A combination's likelihood is the length of the input
    slab mapped through the line that lands inside the output interval,
    normalized by (2v)(2w), i.e. (1 / (4 v w)) * overlap. Values keep full
    normalization and equal nll_general exactly (up to quadrature error).
    """

    A2_TOL = 1e-12

    def __init__(self, ds: GroupedDataset):
        if ds.input_dim != 1 or ds.output_dim != 1:
            raise ValueError("interval closed form requires scalar inputs and outputs")
        for r, g in enumerate(ds.groups):
            for d in list(g.input_densities) + list(g.output_densities):
                if d.kind != UNIFORM:
                    raise ValueError(
                        f"group {r} has a {d.kind} density; interval closed form "
                        "requires uniform-box errors on both sides"
                    )
        self.n_groups = ds.n_groups
        keyed = {}
        for r, g in enumerate(ds.groups):
            keyed.setdefault((g.n_inputs, g.n_outputs), []).append(r)
        self.buckets = []
        for (h, l), rows in keyed.items():
            xb = np.stack([ds.groups[r].inputs[:, 0] for r in rows])
            v = np.stack(
                [[d.scale[0] for d in ds.groups[r].input_densities] for r in rows]
            )
            yb = np.stack([ds.groups[r].outputs[:, 0] for r in rows])
            w = np.stack(
                [[d.scale[0] for d in ds.groups[r].output_densities] for r in rows]
            )
            self.buckets.append((np.asarray(rows), xb, v, yb, w))

    def evaluate(self, alpha) -> ObjectiveValue:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        a1, a2 = float(alpha[0]), float(alpha[1])
        per_group = np.empty(self.n_groups)
        for rows, xb, v, yb, w in self.buckets:
            if abs(a2) < self.A2_TOL * (1.0 + abs(a1)):
                # constant model: input interval is irrelevant
                terms = (np.abs(yb - a1) <= w) / (2.0 * w)  # (B, L)
                lik = terms.mean(axis=1)
            else:
                shift = (a1 - yb[:, None, :]) / a2  # (B, 1, L)
                half = w[:, None, :] / abs(a2)
                center = xb[:, :, None] + shift  # (B, H, L)
                cmin = center - half
                cmax = center + half
                vv = v[:, :, None]
                overlap = np.minimum(vv, cmax) - np.maximum(-vv, cmin)
                overlap = np.maximum(overlap, 0.0)
                terms = overlap / (4.0 * vv * w[:, None, :])
                lik = terms.mean(axis=(1, 2))
            with np.errstate(divide="ignore"):
                per_group[rows] = np.log(lik)
        return ObjectiveValue.from_group_logs(per_group)

    def __call__(self, alpha) -> float:
        return self.evaluate(alpha).value


def likelihood_interval_line(ds: GroupedDataset, alpha) -> ObjectiveValue:
    """Exact negative log-likelihood for the line under uniform-box errors."""
    return CompiledIntervalLine(ds).evaluate(alpha)
