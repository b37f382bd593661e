"""Gaussian radial basis function network with greedy center growth.

The network is a single hidden layer of Gaussian units sharing one
width, followed by a linear output layer with bias:

    y(x) = W' [1, phi_1(x), ..., phi_J(x)],   phi_l(x) = exp(-|x - mu_l|^2 / 2 sigma^2)

Training grows the hidden layer one unit at a time, always planting the
next center on the training sample with the largest current squared
error, then re-solving the linear layer: the classic constructive
recipe.  The solve is carried incrementally through an orthogonal
decomposition of the design matrix, so each growth step costs O(N * J)
instead of a full refit, and the recorded error trace is non-increasing
by construction.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ShapeError, TrainingError

# Candidate basis columns nearly inside the current span add nothing to
# the fit; skip them rather than divide by a vanishing norm.
_DEPENDENT_COL_TOL = 1e-10


@dataclass(frozen=True)
class RbfnConfig:
    """Growth-loop knobs.

    ``spread`` is the Gaussian width sigma itself.  Set
    ``half_response_spread`` to interpret it instead as the radius where
    a unit's response has fallen to one half (sigma = spread / sqrt(2 ln 2)).
    ``max_epochs`` caps growth steps, each of which adds
    ``neurons_per_step`` hidden units.
    """

    mse_goal: float = 0.04
    spread: float = 1.0
    max_neurons: int = 400
    neurons_per_step: int = 1
    max_epochs: int = 300
    ridge: float = 0.0
    half_response_spread: bool = False

    def validate(self) -> None:
        if self.mse_goal <= 0:
            raise ConfigurationError("mse_goal must be positive")
        if self.spread <= 0:
            raise ConfigurationError("spread must be positive")
        if self.max_neurons < 1:
            raise ConfigurationError("max_neurons must be at least 1")
        if self.neurons_per_step < 1:
            raise ConfigurationError("neurons_per_step must be at least 1")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be at least 1")
        if self.ridge < 0:
            raise ConfigurationError("ridge must be nonnegative")

    def width(self) -> float:
        if self.half_response_spread:
            return self.spread / math.sqrt(2.0 * math.log(2.0))
        return self.spread


class StopReason(enum.Enum):
    GOAL_MET = "GoalMet"
    MAX_NEURONS = "MaxNeurons"
    MAX_EPOCHS = "MaxEpochs"


@dataclass
class TrainingTrace:
    """Per-step record of the growth loop."""

    steps: list[tuple[int, float]] = field(default_factory=list)  # (hidden, mse)
    wall_time_s: float = 0.0
    stop_reason: StopReason = StopReason.GOAL_MET

    @property
    def final_mse(self) -> float:
        return self.steps[-1][1]

    @property
    def mse_history(self) -> np.ndarray:
        return np.array([m for _, m in self.steps])


@dataclass
class RbfnModel:
    """Trained network: centers, shared width, linear output weights.

    ``weights`` has one row per design column, bias first, so
    predictions are ``[1, phi] @ weights``.
    """

    centers: np.ndarray  # (J, D)
    width: float
    weights: np.ndarray  # (J + 1, Z)

    @property
    def hidden_count(self) -> int:
        return int(self.centers.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.centers.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.weights.shape[1])


def _as_inputs(X: np.ndarray) -> np.ndarray:
    A = np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise ShapeError(f"inputs must be 1-d or 2-d, got shape {A.shape}")
    return A


def _as_targets(T: np.ndarray, n_rows: int) -> np.ndarray:
    B = np.asarray(T, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if B.ndim != 2 or B.shape[0] != n_rows:
        raise ShapeError(
            f"targets must supply one row per input, got shape {B.shape}")
    return B


def _activations(X: np.ndarray, centers: np.ndarray, width: float) -> np.ndarray:
    """Gaussian responses of every center to every row of X: (N, J)."""
    if centers.shape[0] == 0:
        return np.zeros((X.shape[0], 0))
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2 / (2.0 * width ** 2))


def _design(X: np.ndarray, centers: np.ndarray, width: float) -> np.ndarray:
    """Design matrix [1, phi_1 .. phi_J] for the linear output solve."""
    return np.hstack([np.ones((X.shape[0], 1)), _activations(X, centers, width)])


def basis(model: RbfnModel, x: np.ndarray) -> np.ndarray:
    """Hidden layer activations for a single input vector."""
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size != model.input_dim:
        raise ShapeError(
            f"expected a {model.input_dim}-vector, got {v.size} entries")
    return _activations(v.reshape(1, -1), model.centers, model.width)[0]


def predict(model: RbfnModel, x: np.ndarray) -> np.ndarray:
    """Network output.

    A 1-d input whose length matches the model's input dimension is one
    sample and yields a 1-d output; any other 1-d input is read as a
    series of scalar samples, which only a one-dimensional model accepts.
    """
    A = np.asarray(x, dtype=float)
    single = A.ndim == 1 and A.size == model.input_dim
    if A.ndim == 1:
        A = A.reshape(1, -1) if single else A.reshape(-1, 1)
    if A.ndim != 2:
        raise ShapeError(f"inputs must be 1-d or 2-d, got shape {A.shape}")
    if A.shape[1] != model.input_dim:
        raise ShapeError(
            f"expected {model.input_dim} input features, got {A.shape[1]}")
    out = _design(A, model.centers, model.width) @ model.weights
    return out[0] if single else out


def solve_output_weights(centers: np.ndarray, width: float,
                         inputs: np.ndarray, targets: np.ndarray,
                         ridge: float = 0.0) -> np.ndarray:
    """Least-squares output layer for fixed centers.

    Uses the minimum-norm solution, so an over-complete hidden layer
    still yields a well-defined answer.  With ``ridge`` set, solves the
    regularized normal equations instead (bias left unpenalized).
    """
    X = _as_inputs(inputs)
    if X.shape[0] == 0:
        raise TrainingError("cannot solve weights with no samples")
    T = _as_targets(targets, X.shape[0])
    C = np.asarray(centers, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, 1) if X.shape[1] == 1 else C.reshape(1, -1)
    if C.size and C.shape[1] != X.shape[1]:
        raise ShapeError("center and input dimensions differ")
    if width <= 0:
        raise ConfigurationError("width must be positive")
    phi = _design(X, C, width)
    if ridge > 0.0:
        penalty = ridge * np.eye(phi.shape[1])
        penalty[0, 0] = 0.0
        return np.linalg.solve(phi.T @ phi + penalty, phi.T @ T)
    W, *_ = np.linalg.lstsq(phi, T, rcond=None)
    return W


def train(inputs: np.ndarray, targets: np.ndarray,
          config: RbfnConfig | None = None) -> tuple[RbfnModel, TrainingTrace]:
    """Grow and fit a network on labelled samples.

    Stops when the training MSE reaches ``mse_goal``, when the hidden
    layer hits ``max_neurons``, or after ``max_epochs`` growth steps,
    whichever comes first.  Returns the model together with a trace of
    (hidden units, mse) after every step.
    """
    cfg = config or RbfnConfig()
    cfg.validate()
    X = _as_inputs(inputs)
    n, dim = X.shape
    if n == 0:
        raise TrainingError("training set is empty")
    T = _as_targets(targets, n)
    n_out = T.shape[1]
    sigma = cfg.width()

    t_start = time.perf_counter()

    # Orthogonal decomposition of the growing design matrix: Q holds
    # orthonormal columns, R the triangular factor, G = Q' T.  The
    # residual T - Q G shrinks monotonically as columns arrive.
    q_bias = np.full(n, 1.0 / math.sqrt(n))
    Q = [q_bias]
    R = np.array([[math.sqrt(n)]])
    G = [q_bias @ T]
    residual = T - np.outer(q_bias, G[0])

    def current_mse() -> float:
        return float((residual ** 2).sum() / (n * n_out))

    mse = current_mse()
    trace = TrainingTrace()
    trace.steps.append((0, mse))

    center_rows: list[int] = []
    # Rows ruled out as future centers: already chosen, duplicates of a
    # chosen row, or candidates whose basis column added nothing.
    blocked = np.zeros(n, dtype=bool)

    epochs = 0
    while (mse > cfg.mse_goal and len(center_rows) < cfg.max_neurons
           and epochs < cfg.max_epochs):
        epochs += 1
        grew = False
        for _ in range(cfg.neurons_per_step):
            if len(center_rows) >= cfg.max_neurons:
                break
            row_err = (residual ** 2).sum(axis=1)
            row_err[blocked] = -np.inf
            while True:
                pick = int(np.argmax(row_err))
                if not np.isfinite(row_err[pick]) or row_err[pick] < 0:
                    pick = -1
                    break
                d2 = ((X - X[pick]) ** 2).sum(axis=1)
                col = np.exp(-d2 / (2.0 * sigma ** 2))
                # Orthogonalize against accepted columns (twice, for
                # numerical hygiene at wide spreads).
                Qm = np.column_stack(Q)
                proj1 = Qm.T @ col
                v = col - Qm @ proj1
                proj2 = Qm.T @ v
                v -= Qm @ proj2
                norm_v = float(np.linalg.norm(v))
                if norm_v <= _DEPENDENT_COL_TOL * max(
                        1.0, float(np.linalg.norm(col))):
                    blocked[pick] = True
                    row_err[pick] = -np.inf
                    continue
                break
            if pick < 0:
                break
            q_new = v / norm_v
            g_new = q_new @ residual
            residual = residual - np.outer(q_new, g_new)
            # Extend the triangular factor with the new column.
            j = len(Q)
            R_next = np.zeros((j + 1, j + 1))
            R_next[:j, :j] = R
            R_next[:j, j] = proj1 + proj2
            R_next[j, j] = norm_v
            R = R_next
            Q.append(q_new)
            G.append(g_new)
            blocked |= np.all(X == X[pick], axis=1)
            center_rows.append(pick)
            grew = True
        mse = current_mse()
        trace.steps.append((len(center_rows), mse))
        if not grew:
            break

    if mse <= cfg.mse_goal:
        trace.stop_reason = StopReason.GOAL_MET
    elif len(center_rows) >= cfg.max_neurons:
        trace.stop_reason = StopReason.MAX_NEURONS
    else:
        trace.stop_reason = StopReason.MAX_EPOCHS

    weights = np.linalg.solve(R, np.vstack(G))
    if cfg.ridge > 0.0:
        weights = solve_output_weights(
            X[center_rows], sigma, X, T, ridge=cfg.ridge)
    model = RbfnModel(centers=X[center_rows].copy(), width=sigma,
                      weights=weights)
    trace.wall_time_s = time.perf_counter() - t_start
    return model, trace
