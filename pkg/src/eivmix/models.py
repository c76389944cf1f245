"""Parametric model families mapping latent inputs to noise-free outputs.

A model is a pure function M(x; alpha) from R^k to R^m together with its
parameter dimension. Four families: the 1-d affine line, the k-d affine
hyperplane, the 1-d polynomial, and a generic family wrapping a
user-supplied evaluation hook (the only way to get m > 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

AFFINE_1D = "affine-1d"
AFFINE_KD = "affine-kd"
POLYNOMIAL_1D = "polynomial-1d"
GENERIC = "generic"


@dataclass(frozen=True, eq=False)
class ParametricModel:
    family: str
    input_dim: int
    output_dim: int
    param_dim: int
    degree: Optional[int] = None
    eval_hook: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1 or self.param_dim < 1:
            raise ValueError("model dimensions must be >= 1")
        if self.family == GENERIC:
            if self.eval_hook is None:
                raise ValueError("generic family requires an eval hook")
        elif self.output_dim != 1:
            raise ValueError(f"{self.family} family has a single output")

    @staticmethod
    def affine_1d() -> "ParametricModel":
        """M(x) = alpha_1 + alpha_2 * x on scalar inputs."""
        return ParametricModel(AFFINE_1D, 1, 1, 2)

    @staticmethod
    def affine_kd(k: int) -> "ParametricModel":
        """M(x) = alpha_1 + sum_n alpha_{n+1} x_n on k-dimensional inputs."""
        if k < 1:
            raise ValueError("input dimension must be >= 1")
        return ParametricModel(AFFINE_KD, k, 1, k + 1)

    @staticmethod
    def polynomial_1d(degree: int) -> "ParametricModel":
        """M(x) = sum_{i=0}^{degree} alpha_{i+1} x^i on scalar inputs."""
        if degree < 0:
            raise ValueError("degree must be >= 0")
        return ParametricModel(POLYNOMIAL_1D, 1, 1, degree + 1, degree=degree)

    @staticmethod
    def generic(
        input_dim: int,
        output_dim: int,
        param_dim: int,
        eval_hook: Callable[[np.ndarray, np.ndarray], np.ndarray],
    ) -> "ParametricModel":
        """Wrap a pure hook (alpha, x) -> y evaluated pointwise."""
        return ParametricModel(
            GENERIC, input_dim, output_dim, param_dim, eval_hook=eval_hook
        )


def _check_alpha(model: ParametricModel, alpha) -> np.ndarray:
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.shape != (model.param_dim,):
        raise ValueError(
            f"alpha has shape {alpha.shape}, expected ({model.param_dim},)"
        )
    return alpha


def model_eval(model: ParametricModel, alpha, x) -> np.ndarray:
    """Evaluate M(x; alpha) at a single input; returns shape (m,)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.input_dim,):
        raise ValueError(f"input has shape {x.shape}, expected ({model.input_dim},)")
    return model_eval_batch(model, alpha, x[None, :])[0]


def model_eval_batch(model: ParametricModel, alpha, xs: np.ndarray) -> np.ndarray:
    """Evaluate the model on a batch of inputs, shape (n, k) -> (n, m).

    Affine and polynomial families are vectorized; the generic family falls
    back to a per-row loop over its hook.
    """
    alpha = _check_alpha(model, alpha)
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != model.input_dim:
        raise ValueError(f"batch has shape {xs.shape}, expected (n, {model.input_dim})")
    if model.family == AFFINE_1D:
        return (alpha[0] + alpha[1] * xs[:, 0])[:, None]
    if model.family == AFFINE_KD:
        return (alpha[0] + xs @ alpha[1:])[:, None]
    if model.family == POLYNOMIAL_1D:
        return np.polynomial.polynomial.polyval(xs[:, 0], alpha)[:, None]
    out = np.empty((xs.shape[0], model.output_dim))
    for i in range(xs.shape[0]):
        y = np.atleast_1d(np.asarray(model.eval_hook(alpha, xs[i]), dtype=float))
        if y.shape != (model.output_dim,):
            raise ValueError(
                f"eval hook returned shape {y.shape}, "
                f"expected ({model.output_dim},)"
            )
        out[i] = y
    return out
