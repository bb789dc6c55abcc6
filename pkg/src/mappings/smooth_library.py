"""Named smooth single-valued maps with closed-form Jacobians."""
from __future__ import annotations

import logging
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from src.geometry.spaces import ProductPoint, ProductSpace
from src.mappings.set_valued_map import SmoothSingleValuedMap
from src.utils.errors import DimensionMismatchError, InputError

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]


def _diagonal(values: np.ndarray) -> np.ndarray:
    """Stack rows of elementwise derivatives into (N, d, d) diagonal Jacobians."""
    n, d = values.shape
    out = np.zeros((n, d, d))
    out[:, np.arange(d), np.arange(d)] = values
    return out


def _require_square(space: ProductSpace, kind: str) -> None:
    if space.x_space.dim != space.y_space.dim:
        raise DimensionMismatchError(f"'{kind}' acts elementwise and needs dim_x == dim_y")


def _identity(config, space) -> Tuple[Evaluator, Evaluator, bool]:
    _require_square(space, "identity")
    eye = np.eye(space.x_space.dim)
    return (lambda xs: xs.copy(),
            lambda xs: np.broadcast_to(eye, (xs.shape[0],) + eye.shape).copy(),
            True)


def _linear(config, space) -> Tuple[Evaluator, Evaluator, bool]:
    if "A" not in config:
        raise InputError("linear map needs 'A'")
    A = np.atleast_2d(np.asarray(config["A"], dtype=float))
    b = np.asarray(config.get("b", np.zeros(A.shape[0])), dtype=float).reshape(-1)
    if A.shape != (space.y_space.dim, space.x_space.dim) or b.shape != (space.y_space.dim,):
        raise DimensionMismatchError(
            f"linear map needs A of shape {(space.y_space.dim, space.x_space.dim)}, got {A.shape}"
        )
    return (lambda xs: xs @ A.T + b,
            lambda xs: np.broadcast_to(A, (xs.shape[0],) + A.shape).copy(),
            True)


def _constant(config, space) -> Tuple[Evaluator, Evaluator, bool]:
    value = space.y_space.conform(config.get("value", np.zeros(space.y_space.dim)))
    shape = (space.y_space.dim, space.x_space.dim)
    return (lambda xs: np.repeat(value[None, :], xs.shape[0], axis=0),
            lambda xs: np.zeros((xs.shape[0],) + shape),
            True)


def _power(config, space) -> Tuple[Evaluator, Evaluator, bool]:
    _require_square(space, "power")
    c = float(config.get("coefficient", 1.0))
    e = float(config.get("exponent", 2.0))
    if e <= 0:
        raise InputError(f"power exponent must be positive, got {e}")
    if e == int(e):
        return (lambda xs: c * xs ** int(e),
                lambda xs: _diagonal(c * e * xs ** (int(e) - 1)),
                e == 1.0)

    def jacobian(xs):
        with np.errstate(divide="ignore"):
            slope = c * e * np.abs(xs) ** (e - 1.0) * np.sign(xs)
        return _diagonal(np.where(xs == 0, 0.0 if e > 1 else np.inf, slope))

    return lambda xs: c * np.abs(xs) ** e, jacobian, False


def _polynomial(config, space) -> Tuple[Evaluator, Evaluator, bool]:
    if space.x_space.dim != 1 or space.y_space.dim != 1:
        raise DimensionMismatchError("polynomial maps are scalar")
    coefficients = config.get("coefficients")
    if not coefficients:
        raise InputError("polynomial map needs ascending 'coefficients'")
    poly = Polynomial(np.asarray(coefficients, dtype=float))
    slope = poly.deriv()
    return (lambda xs: poly(xs),
            lambda xs: slope(xs).reshape(-1, 1, 1),
            poly.degree() <= 1)


def _one_minus_cos(config, space) -> Tuple[Evaluator, Evaluator, bool]:
    _require_square(space, "one_minus_cos")
    # 2 sin^2(x/2) keeps full relative accuracy near 0
    return (lambda xs: 2.0 * np.sin(0.5 * xs) ** 2,
            lambda xs: _diagonal(np.sin(xs)),
            False)


SMOOTH_MAPS: Dict[str, Callable[[Dict[str, Any], ProductSpace], Tuple[Evaluator, Evaluator, bool]]] = {
    "identity": _identity,
    "linear": _linear,
    "constant": _constant,
    "power": _power,
    "polynomial": _polynomial,
    "one_minus_cos": _one_minus_cos,
}


def build_smooth_map(config: Dict[str, Any], space: ProductSpace, reference: ProductPoint,
                     name: str = "F", graph_tol: float = 1e-10, fd_step: float = 1e-6,
                     jacobian: Optional[bool] = None) -> SmoothSingleValuedMap:
    """Instantiate a named smooth map such as ``{kind: power, exponent: 2}``.

    ``jacobian: false`` in the config drops the closed form and falls back to
    central differences.
    """
    kind = config.get("kind")
    if kind not in SMOOTH_MAPS:
        raise InputError(f"unknown smooth map kind '{kind}'; available: {sorted(SMOOTH_MAPS)}")
    evaluator, jac, affine = SMOOTH_MAPS[kind](config, space)
    use_jacobian = config.get("jacobian", True) if jacobian is None else jacobian
    params = {k: v for k, v in config.items() if k not in ("variant",)}
    return SmoothSingleValuedMap(
        space,
        reference,
        evaluator,
        jacobian=jac if use_jacobian else None,
        name=name,
        convex=affine,
        fd_step=fd_step,
        graph_tol=graph_tol,
        config=params,
    )
