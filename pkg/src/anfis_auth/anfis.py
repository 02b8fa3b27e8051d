"""First-order Sugeno ANFIS with sigmoid membership functions.

Grid-partitioned rules (every combination of one MF per input), consequents
fit by least squares and premise parameters by gradient descent.

Firing strengths are handled in the log domain: a rule's log strength is the
sum of its log-sigmoid grades, and normalization is a softmax. Products of
tiny grades therefore never underflow to an all-zero layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

FORMAT_HEADER = "anfis-model v1"


class AnfisError(RuntimeError):
    pass


class DegenerateInputError(AnfisError):
    pass


class SolverError(AnfisError):
    pass


class GradientError(AnfisError):
    pass


@dataclass(frozen=True)
class MembershipFunction:
    premise_c: float
    premise_b: float

    def __post_init__(self):
        if not np.isfinite(self.premise_c) or self.premise_c == 0:
            raise ValueError("premise_c must be finite and nonzero")


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def mf_grade(mf: MembershipFunction, x):
    return _sigmoid(mf.premise_c * (np.asarray(x, dtype=float) - mf.premise_b))


@dataclass(frozen=True, eq=False)
class AnfisModel:
    """Premise arrays have shape (n_inputs, mfs_per_input); consequents
    (n_rules, n_inputs + 1), the last column being the constant term."""

    premise_c: np.ndarray
    premise_b: np.ndarray
    consequents: np.ndarray
    rules: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.array(self.premise_c, dtype=float)
        b = np.array(self.premise_b, dtype=float)
        if c.shape != b.shape or c.ndim != 2:
            raise ValueError("premise arrays must share a 2-d shape")
        if not np.all(np.isfinite(c)) or np.any(c == 0):
            raise ValueError("premise_c must be finite and nonzero")
        n, m = c.shape
        rules = np.array(list(itertools.product(range(m), repeat=n)), dtype=np.intp)
        cons = np.array(self.consequents, dtype=float)
        if cons.shape != (len(rules), n + 1):
            raise ValueError(f"consequents must have shape {(len(rules), n + 1)}, got {cons.shape}")
        for name, arr in (("premise_c", c), ("premise_b", b), ("consequents", cons)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        rules.flags.writeable = False
        object.__setattr__(self, "rules", rules)

    @property
    def n_inputs(self) -> int:
        return self.premise_c.shape[0]

    @property
    def mfs_per_input(self) -> int:
        return self.premise_c.shape[1]

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def mfs(self) -> list[list[MembershipFunction]]:
        return [[MembershipFunction(float(c), float(b)) for c, b in zip(cs, bs)]
                for cs, bs in zip(self.premise_c, self.premise_b)]

    def with_consequents(self, consequents) -> "AnfisModel":
        return replace(self, consequents=consequents)

    def with_premises(self, premise_c, premise_b) -> "AnfisModel":
        return replace(self, premise_c=premise_c, premise_b=premise_b)

    def __eq__(self, other):
        if not isinstance(other, AnfisModel):
            return NotImplemented
        return (np.array_equal(self.premise_c, other.premise_c)
                and np.array_equal(self.premise_b, other.premise_b)
                and np.array_equal(self.consequents, other.consequents))


def random_model(rng: np.random.Generator, n_inputs: int = 4, mfs_per_input: int = 2,
                 c_range=(0.5, 2.0), b_scale: float = 0.5, cons_scale: float = 1.0) -> AnfisModel:
    """Random grid model whose MFs alternate falling/rising, like a trained one."""
    signs = np.where(np.arange(mfs_per_input) % 2 == 0, -1.0, 1.0)
    c = rng.uniform(*c_range, size=(n_inputs, mfs_per_input)) * signs
    b = rng.normal(0.0, b_scale, size=(n_inputs, mfs_per_input))
    cons = rng.normal(0.0, cons_scale, size=(mfs_per_input ** n_inputs, n_inputs + 1))
    return AnfisModel(c, b, cons)


def init_model(X, mfs_per_input: int = 2) -> AnfisModel:
    """Data-scaled starting premises with zero consequents.

    Midpoints sit at evenly spaced quantiles of each input (the 25th and 75th
    percentiles for two MFs); steepness is 4/IQR with alternating sign so that
    neighbouring MFs cover the low and high side.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    qs = (np.arange(mfs_per_input) + 0.5) / mfs_per_input
    c = np.empty((n, mfs_per_input))
    b = np.empty((n, mfs_per_input))
    for i in range(n):
        col = X[:, i]
        spread = np.subtract(*np.percentile(col, [75, 25]))
        if spread <= 0:
            spread = np.std(col)
        if spread <= 0:
            spread = 1.0
        b[i] = np.quantile(col, qs)
        signs = np.where(np.arange(mfs_per_input) % 2 == 0, -1.0, 1.0)
        c[i] = signs * 4.0 / spread
    return AnfisModel(c, b, np.zeros((mfs_per_input ** n, n + 1)))


# ---------------------------------------------------------------------------
# forward pass

def _as_batch(model: AnfisModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise ValueError(f"expected inputs of width {model.n_inputs}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DegenerateInputError("non-finite input")
    return X


def _augment(X):
    return np.hstack([X, np.ones((len(X), 1))])


def _layers(model: AnfisModel, X):
    """Per-batch intermediates: z, log firing, normalized firing, rule outputs."""
    z = model.premise_c[None] * (X[:, :, None] - model.premise_b[None])
    log_grade = _log_sigmoid(z)
    cols = np.arange(model.n_inputs)
    log_w = log_grade[:, cols, model.rules].sum(axis=2)  # (N, R)
    top = log_w.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise DegenerateInputError("all rule firing strengths vanished")
    e = np.exp(log_w - top)
    wbar = e / e.sum(axis=1, keepdims=True)
    f = _augment(X) @ model.consequents.T
    return z, log_w, wbar, f


def forward_batch(model: AnfisModel, X):
    """Returns ``(outputs, firing, normalized, rule_outputs)`` for a batch."""
    X = _as_batch(model, X)
    _, log_w, wbar, f = _layers(model, X)
    return (wbar * f).sum(axis=1), np.exp(log_w), wbar, f


def forward(model: AnfisModel, inputs: Sequence[float]):
    """Single input vector -> ``(threat_level, firing, normalized)``."""
    out, w, wbar, _ = forward_batch(model, np.asarray(inputs, dtype=float)[None, :])
    return float(out[0]), w[0], wbar[0]


def predict(model: AnfisModel, inputs):
    """Scalar output for one input vector, or an array for a 2-d batch."""
    arr = np.asarray(inputs, dtype=float)
    out = forward_batch(model, arr)[0]
    return float(out[0]) if arr.ndim == 1 else out


def rmse(model: AnfisModel, X, y) -> float:
    pred = forward_batch(model, X)[0]
    return float(np.sqrt(np.mean((pred - np.asarray(y, dtype=float)) ** 2)))


# ---------------------------------------------------------------------------
# learning

@dataclass(frozen=True)
class TrainingSample:
    inputs: tuple[float, float, float, float]
    target: int

    def __post_init__(self):
        if self.target not in (-1, 0, 1):
            raise ValueError("target must be -1, 0 or +1")
        if not all(np.isfinite(self.inputs)):
            raise ValueError("inputs must be finite")


def samples_to_arrays(samples: Sequence[TrainingSample]):
    X = np.array([s.inputs for s in samples], dtype=float).reshape(len(samples), -1)
    y = np.array([s.target for s in samples], dtype=float)
    return X, y


@dataclass
class TrainReport:
    epoch_rmse: list[float]
    final_rmse: float
    epochs_run: int
    converged: bool


def design_matrix(model: AnfisModel, X) -> np.ndarray:
    """Rows are, per sample, the concatenation over rules of wbar_r * [x, 1]."""
    X = _as_batch(model, X)
    wbar = _layers(model, X)[2]
    return (wbar[:, :, None] * _augment(X)[:, None, :]).reshape(len(X), -1)


def lse_consequents(model: AnfisModel, X, y, ridge: float = 1e-8,
                    refine: int = 2) -> AnfisModel:
    """Least-squares consequents for fixed premises.

    The damped normal equations ``(A'A + ridge I) t = A'y`` are solved through
    one SVD of the design matrix, followed by ``refine`` rounds of iterative
    refinement on the residual. Refinement removes the damping bias wherever
    the design is well determined; directions with singular values far below
    ``sqrt(ridge)`` stay damped toward zero.
    """
    A = design_matrix(model, X)
    y = np.asarray(y, dtype=float)
    if len(A) == 0:
        raise ValueError("empty batch")
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"SVD of design matrix failed: {exc}") from exc
    shrink = ridge / (s ** 2 + ridge)
    # k rounds of refinement turn the ridge filter s/(s^2+r) into
    # (1 - shrink^(k+1)) / s
    gain = np.where(s > 0, (1.0 - shrink ** (refine + 1)) / np.where(s > 0, s, 1.0), 0.0)
    theta = Vt.T @ (gain * (U.T @ y))
    k = A.shape[1]
    if len(s) < k:
        s = np.concatenate([s, np.zeros(k - len(s))])
    if not np.all(np.isfinite(theta)):
        cond = np.sqrt((s[0] ** 2 + ridge) / (s[-1] ** 2 + ridge))
        raise SolverError(f"consequent solve produced non-finite values, condition {cond:.3e}")
    return model.with_consequents(theta.reshape(model.n_rules, model.n_inputs + 1))


def premise_gradients(model: AnfisModel, X, y):
    """Gradient of batch mean squared error w.r.t. ``(premise_c, premise_b)``."""
    X = _as_batch(model, X)
    y = np.asarray(y, dtype=float)
    z, _, wbar, f = _layers(model, X)
    out = (wbar * f).sum(axis=1)
    # d out / d log w_r
    g_rule = wbar * (f - out[:, None])
    n, m = model.n_inputs, model.mfs_per_input
    g_mf = np.empty((len(X), n, m))
    for i in range(n):
        onehot = np.eye(m)[model.rules[:, i]]  # (R, M)
        g_mf[:, i, :] = g_rule @ onehot
    g_z = g_mf * (1.0 - _sigmoid(z))  # d log sigmoid / dz = 1 - sigmoid
    err = 2.0 * (out - y) / len(X)
    dc = np.einsum("n,nim,nim->im", err, g_z, X[:, :, None] - model.premise_b[None])
    db = np.einsum("n,nim->im", err, g_z) * -model.premise_c
    return dc, db


def backprop_premise(model: AnfisModel, X, y, learning_rate: float) -> AnfisModel:
    """One gradient-descent step on the premise parameters."""
    dc, db = premise_gradients(model, X, y)
    bad = ~(np.isfinite(dc) & np.isfinite(db))
    if bad.any():
        i, m = map(int, np.argwhere(bad)[0])
        raise GradientError(f"non-finite gradient for MF {m} of input {i}")
    if learning_rate == 0:
        return model
    c = model.premise_c - learning_rate * dc
    # keep every MF a proper sigmoid
    tiny = 1e-6
    c = np.where(np.abs(c) < tiny, np.where(model.premise_c < 0, -tiny, tiny), c)
    return model.with_premises(c, model.premise_b - learning_rate * db)


def train_hybrid(model: AnfisModel, X, y, epochs: int = 200, learning_rate: float = 0.01,
                 tol: float = 1e-6, ridge: float = 1e-8, step_up: float = 1.1,
                 step_down: float = 0.5, refine: int = 2):
    """Alternate LSE (forward pass) and premise descent (backward pass).

    Epoch RMSE is measured right after the LSE step; the model with the best
    such RMSE is returned. The premise step size grows by ``step_up`` after
    each epoch that lowered the RMSE and shrinks by ``step_down`` after one
    that raised it (``step_up = step_down = 1`` gives a fixed rate).

    Training stops early once ``|delta RMSE| < tol`` between epochs, checked
    only after the step size has settled (a first step-down, or always with a
    fixed rate); while the step is still ramping up the RMSE moves slowly for
    reasons unrelated to convergence.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    history: list[float] = []
    best, best_rmse = None, np.inf
    converged = False
    lr = learning_rate
    settled = step_up == 1.0 and step_down == 1.0
    for _ in range(epochs):
        model = lse_consequents(model, X, y, ridge, refine)
        err = rmse(model, X, y)
        if err < best_rmse:
            best, best_rmse = model, err
        if history:
            if settled and abs(history[-1] - err) < tol:
                history.append(err)
                converged = True
                break
            if err > history[-1]:
                lr *= step_down
                settled = True
            else:
                lr *= step_up
        history.append(err)
        model = backprop_premise(model, X, y, lr)
    return best, TrainReport(history, best_rmse, len(history), converged)


# ---------------------------------------------------------------------------
# serialization

def dumps_model(model: AnfisModel) -> str:
    lines = [FORMAT_HEADER, f"n_inputs {model.n_inputs}",
             f"mfs_per_input {model.mfs_per_input}"]
    for i in range(model.n_inputs):
        for m in range(model.mfs_per_input):
            lines.append(f"premise {i} {m} {float(model.premise_c[i, m])!r} "
                         f"{float(model.premise_b[i, m])!r}")
    for r, row in enumerate(model.consequents):
        lines.append(f"consequent {r} " + " ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> AnfisModel:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or " ".join(lines[0]) != FORMAT_HEADER:
        raise ValueError(f"missing header {FORMAT_HEADER!r}")
    fields = {ln[0]: ln for ln in lines[1:3]}
    n = int(fields["n_inputs"][1])
    m = int(fields["mfs_per_input"][1])
    c = np.zeros((n, m))
    b = np.zeros((n, m))
    cons = np.zeros((m ** n, n + 1))
    for ln in lines[3:]:
        if ln[0] == "premise":
            i, k = int(ln[1]), int(ln[2])
            c[i, k], b[i, k] = float(ln[3]), float(ln[4])
        elif ln[0] == "consequent":
            cons[int(ln[1])] = [float(v) for v in ln[2:]]
        else:
            raise ValueError(f"unknown model line {ln[0]!r}")
    return AnfisModel(c, b, cons)


def save_model(model: AnfisModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> AnfisModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
