"""One-vs-rest L2-regularised logistic regression.

Each binary subproblem minimises::

    0.5 * ||w||^2 + C * sum_i log(1 + exp(-t_i * (w . x_i + b)))

with ``t_i = +1`` for the positive class and ``-1`` otherwise. ``C`` scales
the data loss, so larger values mean weaker regularisation. The intercept is
not penalised.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit, log_expit

from relfeat.errors import InputError

logger = logging.getLogger(__name__)

GTOL = 1e-6
MAX_ITER = 1000
ABSENT_CLASS_INTERCEPT = -1e3


@dataclass(eq=False)
class LinearModel:
    classes: tuple  # class labels, in column order of coef
    coef: np.ndarray  # (n_classes, n_features)
    intercept: np.ndarray  # (n_classes,)
    C: float
    n_iter: list[int] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.coef.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != self.n_features:
            raise InputError(f"model expects {self.n_features} columns, got {X.shape[1]}")
        return np.asarray(X @ self.coef.T) + self.intercept


def _as_matrix(X):
    if hasattr(X, "X") and sp.issparse(getattr(X, "X")):
        X = X.X
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


def objective(params: np.ndarray, X, t: np.ndarray, C: float):
    """Binary objective and gradient; ``params`` is ``[w..., b]``."""
    w, b = params[:-1], params[-1]
    z = t * (X @ w + b)
    loss = -log_expit(z).sum()
    # d/dz log(1 + exp(-z)) = -sigmoid(-z)
    coeff = -C * t * expit(-z)
    grad = np.empty_like(params)
    grad[:-1] = w + X.T @ coeff
    grad[-1] = coeff.sum()
    return 0.5 * float(w @ w) + C * float(loss), grad


def hessian_product(params: np.ndarray, v: np.ndarray, X, t: np.ndarray, C: float) -> np.ndarray:
    """Hessian of :func:`objective` at ``params`` applied to ``v``."""
    return _Curvature(X, t, C)(params, v)


class _Curvature:
    """Hessian-vector products that reuse the diagonal weights per iterate."""

    def __init__(self, X, t, C):
        self.X, self.XT, self.t, self.C = X, X.T.tocsr() if sp.issparse(X) else X.T, t, C
        self.at = None
        self.d = None

    def __call__(self, params, v, *_):
        if self.at is None or not np.array_equal(params, self.at):
            s = expit(self.t * (self.X @ params[:-1] + params[-1]))
            self.at, self.d = params.copy(), self.C * s * (1.0 - s)
        du = self.d * (self.X @ v[:-1] + v[-1])
        out = np.empty_like(v)
        out[:-1] = v[:-1] + self.XT @ du
        out[-1] = du.sum()
        return out


def fit_binary(X, t: np.ndarray, C: float, gtol: float = GTOL, max_iter: int = MAX_ITER, trace: list | None = None,
               init: np.ndarray | None = None):
    """Solve one binary subproblem by trust-region Newton-CG.

    Stops once the gradient's Euclidean norm (hence every component) is at
    most ``gtol``. Returns ``(w, b, n_iter)``.

    ``init`` is an optional ``[w..., b]`` starting point (warm start);
    otherwise weights start at zero and the intercept at the class log-odds.
    ``trace`` (if given) receives the objective value after every accepted
    step.
    """
    d = X.shape[1]
    if init is not None:
        x0 = np.array(init, dtype=np.float64)
    else:
        x0 = np.zeros(d + 1)
        pos = (t > 0).mean()
        if 0 < pos < 1:
            x0[-1] = np.log(pos / (1 - pos))

    callback = None
    if trace is not None:
        trace.append(objective(x0, X, t, C)[0])

        def callback(xk):
            trace.append(objective(xk, X, t, C)[0])

    res = minimize(
        objective,
        x0,
        args=(X, t, C),
        jac=True,
        hessp=_Curvature(X, t, C),
        method="trust-ncg",
        callback=callback,
        options={"maxiter": max_iter, "gtol": gtol},
    )
    if not res.success and res.nit >= max_iter:
        logger.debug("logistic subproblem stopped at max_iter (C=%g)", C)
    return res.x[:-1], float(res.x[-1]), int(res.nit)


def train_logreg_ova(X, y: Sequence[int], C: float = 1.0, classes: Sequence | None = None,
                     warm_start: LinearModel | None = None) -> LinearModel:
    X = _as_matrix(X)
    y = np.asarray(y)
    if X.shape[0] != len(y):
        raise InputError(f"{X.shape[0]} rows but {len(y)} labels")
    if not C > 0:
        raise InputError("C must be positive")
    data = X.data if sp.issparse(X) else X
    if not np.isfinite(data).all():
        raise InputError("feature values must be finite")
    if classes is None:
        classes = np.unique(y)
    classes = tuple(classes.tolist() if isinstance(classes, np.ndarray) else classes)
    if len(np.unique(y)) < 2:
        raise InputError("training data must contain at least two classes")
    coef = np.zeros((len(classes), X.shape[1]))
    intercept = np.zeros(len(classes))
    iters = []
    for k, cls in enumerate(classes):
        t = np.where(y == cls, 1.0, -1.0)
        if (t < 0).all():
            # class absent from this training set (e.g. a CV fold)
            intercept[k] = ABSENT_CLASS_INTERCEPT
            iters.append(0)
            continue
        init = None
        if warm_start is not None and warm_start.intercept[k] != ABSENT_CLASS_INTERCEPT:
            init = np.append(warm_start.coef[k], warm_start.intercept[k])
        w, b, it = fit_binary(X, t, C, init=init)
        coef[k], intercept[k] = w, b
        iters.append(it)
    return LinearModel(classes, coef, intercept, float(C), iters)


def predict_proba(model: LinearModel, X) -> np.ndarray:
    """Per-class sigmoid scores renormalised to sum to one per row."""
    scores = expit(model.decision_function(X))
    totals = scores.sum(axis=1, keepdims=True)
    k = scores.shape[1]
    return np.divide(scores, totals, out=np.full_like(scores, 1.0 / k), where=totals > 0)


def predict(model: LinearModel, X) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    idx = np.argmax(predict_proba(model, X), axis=1)
    return np.asarray(model.classes)[idx]
