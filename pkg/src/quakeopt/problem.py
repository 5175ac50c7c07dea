"""Entanglement-allocation problem model.

A network of ``N`` quantum nodes receives entangled pairs of ``T`` fidelity
types.  The decision variable is the ``(N, T)`` throughput matrix ``X`` whose
entry ``X[i, j]`` is the number of entangled systems per second of type ``j``
received by node ``i``.  Everything in this module is a pure function of a
:class:`NetworkSpec` and a throughput matrix.

Node indices are zero-based throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "SpecError",
    "SpecParseError",
    "NetworkSpec",
    "NodePartition",
    "ViolationRecord",
    "ObjectiveVector",
    "Recommendation",
    "load_network_spec",
    "save_network_spec",
    "spec_to_dict",
    "spec_from_dict",
    "generate_network_spec",
    "check_throughput",
    "fidelity_objectives",
    "relent_objectives",
    "node_fidelity_objective",
    "node_relent_objective",
    "classify_nodes",
    "quality_coefficients",
    "memory_coefficients",
    "cost_f1",
    "cost_f2",
    "main_objective",
    "class_objectives",
    "combined_class_objective",
    "class_diagnostics",
    "constraint_violations",
    "objective_vector",
    "evaluate_batch",
    "recommend_strategy",
]

ALPHA_LOW = 1.0
ALPHA_HIGH = 0.5


class SpecError(ValueError):
    """A network spec failed validation.  ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SpecParseError(ValueError):
    """The spec file is not valid JSON or lacks a required key."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass
class NetworkSpec:
    """Static description of the network and every model coefficient.

    Arrays follow the node-outer, type-inner convention: ``fidelities[i, j]``
    is the fidelity of type ``j`` at node ``i``.  ``B_low``/``B_up`` are
    per-dimension bounds over the flattened ``N*T`` position vector.

    ``alpha`` defaults to the class-derived quality coefficients (1.0 for
    low-fidelity nodes, 0.5 for high-fidelity nodes).  ``active`` marks which
    flattened dimensions the optimizer may move; inactive ones stay pinned at
    ``B_low``.
    """

    N: int
    T: int
    fidelities: np.ndarray
    F_star: float
    A: np.ndarray
    R: np.ndarray
    c: np.ndarray
    A_star: np.ndarray
    R_star: np.ndarray
    c_star: np.ndarray
    init_throughput: np.ndarray
    f_costs: np.ndarray
    eta: np.ndarray
    kappa: np.ndarray
    lambda_mem: float
    upsilon: np.ndarray
    B_low: np.ndarray
    B_up: np.ndarray
    gamma: float
    Lambda_bound: float
    Pi_bound: float
    alpha: np.ndarray | None = None
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    active: np.ndarray | None = None

    def __post_init__(self):
        N, T = self.N, self.T
        if not isinstance(N, (int, np.integer)) or N < 1:
            raise SpecError("N", f"must be a positive integer, got {N!r}")
        if not isinstance(T, (int, np.integer)) or T < 1:
            raise SpecError("T", f"must be a positive integer, got {T!r}")
        self.N, self.T = int(N), int(T)

        shapes = {
            "fidelities": (N, T),
            "A": (N, T, T),
            "R": (N, T),
            "c": (N,),
            "A_star": (N, T, T),
            "R_star": (N, T),
            "c_star": (N,),
            "init_throughput": (N, T),
            "f_costs": (T,),
            "eta": (T,),
            "kappa": (T,),
            "upsilon": (N,),
            "B_low": (N * T,),
            "B_up": (N * T,),
        }
        for name, shape in shapes.items():
            value = getattr(self, name)
            # scalar bounds broadcast over every dimension
            if name in ("B_low", "B_up") and np.ndim(value) == 0:
                value = np.full(shape, float(value))
            arr = _as_float_array(name, value)
            if arr.shape != shape:
                raise SpecError(name, f"expected shape {shape}, got {arr.shape}")
            setattr(self, name, arr)

        for (i, j), fid in np.ndenumerate(self.fidelities):
            if not 0.0 <= fid <= 1.0:
                raise SpecError(f"fidelities[{i}][{j}]", f"fidelity {fid} outside [0, 1]")
        if not 0.0 < self.F_star <= 1.0:
            raise SpecError("F_star", f"critical fidelity {self.F_star} outside (0, 1]")
        for (i,), ups in np.ndenumerate(self.upsilon):
            if not ups > 0.0:
                raise SpecError(f"upsilon[{i}]", f"memory capacity must be > 0, got {ups}")
        for (i, j), b in np.ndenumerate(self.init_throughput):
            if b < 0.0:
                raise SpecError(f"init_throughput[{i}][{j}]", f"must be >= 0, got {b}")
        for k in range(N * T):
            if self.B_low[k] < 0.0:
                raise SpecError(f"B_low[{k}]", f"must be >= 0, got {self.B_low[k]}")
            if not self.B_up[k] > self.B_low[k]:
                raise SpecError(f"B_up[{k}]", f"must exceed B_low ({self.B_low[k]}), got {self.B_up[k]}")

        if self.alpha is None:
            self.alpha = quality_coefficients(self)
        else:
            self.alpha = _as_float_array("alpha", self.alpha)
            if self.alpha.shape != (N,):
                raise SpecError("alpha", f"expected shape {(N,)}, got {self.alpha.shape}")

        w = tuple(float(x) for x in self.weights)
        if len(w) != 3 or any(x < 0 for x in w):
            raise SpecError("weights", f"expected three nonnegative weights, got {self.weights!r}")
        self.weights = w

        if self.active is None:
            self.active = np.ones(N * T, dtype=bool)
        else:
            self.active = np.asarray(self.active, dtype=bool)
            if self.active.shape != (N * T,):
                raise SpecError("active", f"expected shape {(N * T,)}, got {self.active.shape}")
            if not self.active.any():
                raise SpecError("active", "at least one dimension must be active")

    @property
    def dim(self) -> int:
        """Length of the flattened throughput vector."""
        return self.N * self.T

    @property
    def active_dims(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def expand(self, x_active: np.ndarray) -> np.ndarray:
        """Map active-dimension coordinates to full ``(..., N, T)`` matrices."""
        x_active = np.asarray(x_active, dtype=float)
        lead = x_active.shape[:-1]
        full = np.broadcast_to(self.B_low, lead + (self.dim,)).copy()
        full[..., self.active] = x_active
        return full.reshape(lead + (self.N, self.T))


class NodePartition(NamedTuple):
    low: frozenset[int]
    high: frozenset[int]


class ViolationRecord(NamedTuple):
    h1: float
    h2: float
    h3: float
    penalty: float
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def feasible(self) -> bool:
        return self.h1 == 0.0 and self.h2 == 0.0 and self.h3 == 0.0


class ObjectiveVector(NamedTuple):
    """Minimisation form: ``g_neg = -G(X)``, ``f1 = C(X)``, ``f2 = S(X)``."""

    g_neg: float
    f1: float
    f2: float


@dataclass(frozen=True)
class Recommendation:
    node: int
    node_class: str
    fidelity_sensitivity: float
    relent_sensitivity: float
    action: str


def _as_float_array(name, value) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(name, f"not a numeric array ({exc})") from None
    if not np.all(np.isfinite(arr)):
        raise SpecError(name, "contains non-finite values")
    return arr


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

_ARRAY_FIELDS = (
    "fidelities", "A", "R", "c", "A_star", "R_star", "c_star",
    "init_throughput", "f_costs", "eta", "kappa", "upsilon", "B_low", "B_up",
)
_SCALAR_FIELDS = ("F_star", "lambda_mem", "gamma", "Lambda_bound", "Pi_bound")


def spec_to_dict(spec: NetworkSpec) -> dict:
    out: dict = {"N": spec.N, "T": spec.T}
    for name in _SCALAR_FIELDS:
        out[name] = float(getattr(spec, name))
    for name in _ARRAY_FIELDS:
        out[name] = getattr(spec, name).tolist()
    out["alpha"] = spec.alpha.tolist()
    out["weights"] = list(spec.weights)
    out["active"] = [bool(a) for a in spec.active]
    return out


def spec_from_dict(data: dict) -> NetworkSpec:
    required = ("N", "T") + _SCALAR_FIELDS + _ARRAY_FIELDS
    missing = [k for k in required if k not in data]
    if missing:
        raise SpecParseError(f"missing required key(s): {', '.join(missing)}")
    kwargs = {k: data[k] for k in required}
    for name in _SCALAR_FIELDS:
        try:
            kwargs[name] = float(kwargs[name])
        except (TypeError, ValueError):
            raise SpecError(name, f"expected a number, got {kwargs[name]!r}") from None
    for opt in ("alpha", "weights", "active"):
        if data.get(opt) is not None:
            kwargs[opt] = data[opt]
    return NetworkSpec(**kwargs)


def load_network_spec(path) -> NetworkSpec:
    """Read and validate a JSON network spec.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    SpecParseError
        Malformed JSON or missing keys.
    SpecError
        A field fails validation; the exception's ``field`` names it.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise SpecParseError(f"{path}: top level must be a JSON object")
    return spec_from_dict(data)


def save_network_spec(spec: NetworkSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=1) + "\n")


def generate_network_spec(N: int, T: int, seed: int, F_star: float = 0.9) -> NetworkSpec:
    """Synthetic instance over the unit box ``[0, 1]^(N*T)``.

    Regression coefficients are nonnegative with the quadratic part scaled by
    ``1/T**2`` and the linear part by ``1/T`` so node objectives stay O(1).
    Node fidelities are split so that both classes are populated whenever
    ``N >= 2``.  The thresholds are placed so the cost bound binds before the
    throughput upper bounds do.
    """
    if N < 1 or T < 1:
        raise ValueError(f"N and T must be >= 1, got N={N}, T={T}")
    rng = np.random.default_rng(seed)

    n_high = N // 2 if N >= 2 else 0
    is_high = np.zeros(N, dtype=bool)
    is_high[rng.permutation(N)[:n_high]] = True
    fid = np.where(
        is_high[:, None],
        rng.uniform(F_star, 1.0, (N, T)),
        rng.uniform(0.6 * F_star, F_star, (N, T)),
    )
    fid = np.round(fid, 6)
    # rounding must not move a low node onto the threshold
    fid = np.where(is_high[:, None], np.maximum(fid, F_star), np.minimum(fid, np.nextafter(F_star, 0)))

    A = rng.uniform(0.0, 1.0, (N, T, T)) / T**2
    A = 0.5 * (A + A.transpose(0, 2, 1))
    R = rng.uniform(0.0, 1.0, (N, T)) / T
    c = rng.uniform(0.0, 0.2, N)
    A_star = rng.uniform(0.0, 1.0, (N, T, T)) / T**2
    A_star = 0.5 * (A_star + A_star.transpose(0, 2, 1))
    R_star = rng.uniform(0.0, 1.0, (N, T)) / T
    c_star = rng.uniform(0.0, 0.2, N)
    init = rng.uniform(0.0, 0.2, (N, T))
    f_costs = rng.uniform(0.5, 1.5, T)
    eta = rng.uniform(0.5, 1.5, T)
    kappa = rng.uniform(0.5, 1.5, T)
    upsilon = rng.uniform(1.0, 2.0, N)

    B_low = np.zeros(N * T)
    B_up = np.ones(N * T)

    spec = NetworkSpec(
        N=N, T=T, fidelities=fid, F_star=F_star,
        A=A, R=R, c=c, A_star=A_star, R_star=R_star, c_star=c_star,
        init_throughput=init, f_costs=f_costs, eta=eta, kappa=kappa,
        lambda_mem=1.0, upsilon=upsilon, B_low=B_low, B_up=B_up,
        gamma=0.0, Lambda_bound=0.0, Pi_bound=0.0,
    )
    quarter = np.full((N, T), 0.25)
    spec.gamma = float(fidelity_objectives(spec, quarter).sum())
    spec.Lambda_bound = float(cost_f1(spec, np.full((N, T), 0.6)))
    spread = eta * (B_up.reshape(N, T) - B_low.reshape(N, T)).max(axis=0) / 2.0
    spec.Pi_bound = float(0.5 * N * np.sum(spread**2))
    return spec


# ---------------------------------------------------------------------------
# objectives and costs
# ---------------------------------------------------------------------------


def check_throughput(spec: NetworkSpec, X) -> np.ndarray:
    """Return ``X`` as an ``(N, T)`` array after checking shape and bounds."""
    X = np.asarray(X, dtype=float)
    if X.shape != (spec.N, spec.T):
        raise ValueError(f"throughput matrix must have shape {(spec.N, spec.T)}, got {X.shape}")
    flat = X.ravel()
    if np.any(flat < spec.B_low) or np.any(flat > spec.B_up):
        k = int(np.flatnonzero((flat < spec.B_low) | (flat > spec.B_up))[0])
        raise ValueError(f"X[{k // spec.T}][{k % spec.T}] = {flat[k]} outside [{spec.B_low[k]}, {spec.B_up[k]}]")
    return X


def _quadratic(A, R, c, Bt):
    # Bt has shape (..., N, T)
    return np.einsum("ijk,...ij,...ik->...i", A, Bt, Bt) + np.einsum("ij,...ij->...i", R, Bt) + c


def fidelity_objectives(spec: NetworkSpec, X) -> np.ndarray:
    """Cumulative fidelity surrogate of every node, shape ``(..., N)``."""
    Bt = np.asarray(X, dtype=float) + spec.init_throughput
    return _quadratic(spec.A, spec.R, spec.c, Bt)


def relent_objectives(spec: NetworkSpec, X) -> np.ndarray:
    """Expected relative entropy of entanglement of every node."""
    Bt = np.asarray(X, dtype=float) + spec.init_throughput
    return _quadratic(spec.A_star, spec.R_star, spec.c_star, Bt)


def _check_node(spec, i):
    if not isinstance(i, (int, np.integer)) or not 0 <= i < spec.N:
        raise IndexError(f"node index {i!r} out of range [0, {spec.N})")


def node_fidelity_objective(spec: NetworkSpec, X, i: int) -> float:
    _check_node(spec, i)
    return float(fidelity_objectives(spec, X)[i])


def node_relent_objective(spec: NetworkSpec, X, i: int) -> float:
    _check_node(spec, i)
    return float(relent_objectives(spec, X)[i])


def classify_nodes(spec: NetworkSpec) -> NodePartition:
    """Split nodes by received fidelity against ``F_star``.

    A node is high-class when every type meets ``F_star``.  Everything else,
    including nodes whose types straddle the threshold, is low-class.
    """
    high = {i for i in range(spec.N) if spec.fidelities[i].min() >= spec.F_star}
    low = set(range(spec.N)) - high
    return NodePartition(low=frozenset(low), high=frozenset(high))


def quality_coefficients(spec: NetworkSpec, alpha_low=ALPHA_LOW, alpha_high=ALPHA_HIGH) -> np.ndarray:
    high = spec.fidelities.min(axis=1) >= spec.F_star
    return np.where(high, alpha_high, alpha_low).astype(float)


def memory_coefficients(spec: NetworkSpec, X) -> np.ndarray:
    """Storage coefficients ``w[i, j] = eta_j X[i, j] + kappa_j init[i, j]``."""
    return spec.eta * np.asarray(X, dtype=float) + spec.kappa * spec.init_throughput


def cost_f1(spec: NetworkSpec, X) -> float:
    """Total purification and error-correction cost ``sum_i sum_j f_j X[i, j]``."""
    return np.sum(np.asarray(X, dtype=float) * spec.f_costs, axis=(-2, -1))


def cost_f2(spec: NetworkSpec, X, partition: NodePartition | None = None) -> float:
    """Total quantum-memory cost.

    Per node, ``lambda_mem * alpha_i / upsilon_i * sum_j X[i, j]``.  When a
    partition is passed, ``alpha`` is rebuilt from it with the default class
    coefficients; otherwise the spec's ``alpha`` is used.
    """
    if partition is None:
        alpha = spec.alpha
    else:
        alpha = np.array([ALPHA_HIGH if i in partition.high else ALPHA_LOW for i in range(spec.N)])
    per_node = spec.lambda_mem * alpha / spec.upsilon * np.asarray(X, dtype=float).sum(axis=-1)
    return np.sum(per_node, axis=-1)


def main_objective(spec: NetworkSpec, X) -> float:
    """``G(X) = sum_i F_i(X) * E[D_i(X)]`` (to be maximised)."""
    return np.sum(fidelity_objectives(spec, X) * relent_objectives(spec, X), axis=-1)


def class_objectives(spec: NetworkSpec, X, partition: NodePartition) -> tuple[float, float]:
    products = fidelity_objectives(spec, X) * relent_objectives(spec, X)
    g_low = float(sum(products[i] for i in sorted(partition.low)))
    g_high = float(sum(products[i] for i in sorted(partition.high)))
    return g_low, g_high


def combined_class_objective(spec: NetworkSpec, X, partition: NodePartition) -> float:
    """Class-weighted objective.

    High-class nodes contribute ``A_i F_i E[D_i]``; low-class nodes contribute
    the same term multiplied by the total cost ``C(X)``.  ``A_i`` is the
    number of systems node ``i`` receives, ``sum_j X[i, j]``.
    """
    X = np.asarray(X, dtype=float)
    received = X.sum(axis=1)
    products = fidelity_objectives(spec, X) * relent_objectives(spec, X)
    total_cost = float(cost_f1(spec, X))
    high = sum(received[i] * products[i] for i in sorted(partition.high))
    low = sum(received[i] * products[i] * total_cost for i in sorted(partition.low))
    return float(high + low)


def class_diagnostics(spec: NetworkSpec, X, partition: NodePartition) -> dict:
    """Quantities from the class-resolved formulation, reported but not enforced."""
    X = np.asarray(X, dtype=float)
    f1 = float(cost_f1(spec, X))
    f2 = float(cost_f2(spec, X))
    g_low, g_high = class_objectives(spec, X, partition)
    zeta = float(fidelity_objectives(spec, X).sum())
    return {
        "g_low": g_low,
        "g_high": g_high,
        "combined": combined_class_objective(spec, X, partition),
        "F1_times_F2": f1 * f2,
        "sum_S_i": f2,
        "zeta": zeta,
        "gamma_times_F1": spec.gamma * f1,
        "n_low": len(partition.low),
        "n_high": len(partition.high),
    }


# ---------------------------------------------------------------------------
# constraints
# ---------------------------------------------------------------------------


def _violations(spec: NetworkSpec, X, weights):
    X = np.asarray(X, dtype=float)
    zeta = fidelity_objectives(spec, X).sum(axis=-1)
    chi = cost_f1(spec, X)
    w = memory_coefficients(spec, X)
    omega = w.mean(axis=-2, keepdims=True)
    nu = np.sum((w - omega) ** 2, axis=(-2, -1))
    h1 = np.maximum(0.0, spec.gamma - zeta)
    h2 = np.maximum(0.0, chi - spec.Lambda_bound)
    h3 = np.maximum(0.0, nu - spec.Pi_bound)
    w1, w2, w3 = weights
    return h1, h2, h3, w1 * h1 + w2 * h2 + w3 * h3


def constraint_violations(spec: NetworkSpec, X, weights=None) -> ViolationRecord:
    """Degrees of violation of the fidelity, cost and storage constraints.

    ``h1 = max(0, gamma - sum_i F_i)``, ``h2 = max(0, C(X) - Lambda)`` and
    ``h3 = max(0, nu - Pi)`` where ``nu`` sums, over fidelity types, the
    squared spread of the storage coefficients around their node mean.
    """
    weights = spec.weights if weights is None else tuple(float(w) for w in weights)
    h1, h2, h3, pen = _violations(spec, X, weights)
    return ViolationRecord(float(h1), float(h2), float(h3), float(pen), weights)


def objective_vector(spec: NetworkSpec, X) -> ObjectiveVector:
    X = np.asarray(X, dtype=float)
    return ObjectiveVector(-float(main_objective(spec, X)), float(cost_f1(spec, X)), float(cost_f2(spec, X)))


def evaluate_batch(spec: NetworkSpec, Xs) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised objectives and violations for a stack of matrices.

    Returns ``(objectives, violations)`` of shapes ``(n, 3)`` and ``(n, 4)``;
    columns are ``(g_neg, f1, f2)`` and ``(h1, h2, h3, penalty)``.
    """
    Xs = np.asarray(Xs, dtype=float)
    obj = np.stack([-main_objective(spec, Xs), cost_f1(spec, Xs), cost_f2(spec, Xs)], axis=-1)
    viol = np.stack(_violations(spec, Xs, spec.weights), axis=-1)
    return obj, viol


# ---------------------------------------------------------------------------
# decision making
# ---------------------------------------------------------------------------


def recommend_strategy(spec: NetworkSpec, X, i: int, delta: float = 1e-4) -> Recommendation:
    """Sensitivity of node ``i`` to a uniform throughput increase.

    Central differences of the fidelity and relative-entropy surrogates along
    ``X[i, :] += b``.  High-class nodes are told to raise throughput for
    fidelity; low-class nodes to prioritise relative entropy.
    """
    _check_node(spec, i)
    X = np.asarray(X, dtype=float)
    scale = max(1.0, float(np.max(np.abs(X[i] + spec.init_throughput[i]))))
    if not delta > np.finfo(float).eps * scale * 16:
        raise ValueError(f"step {delta!r} underflows at scale {scale:g}")
    up, down = X.copy(), X.copy()
    up[i] += delta
    down[i] -= delta
    dF = (fidelity_objectives(spec, up)[i] - fidelity_objectives(spec, down)[i]) / (2 * delta)
    dD = (relent_objectives(spec, up)[i] - relent_objectives(spec, down)[i]) / (2 * delta)
    if i in classify_nodes(spec).high:
        node_class, action = "high", "increase throughput to maximize fidelity"
    else:
        node_class, action = "low", "prioritize relative entropy of entanglement"
    return Recommendation(i, node_class, float(dF), float(dD), action)


def uniform_gradient(A, R, Bt) -> float:
    """Exact derivative of one node's quadratic surrogate along ``Bt += b``."""
    A = np.asarray(A, dtype=float)
    return float(np.sum(A * (Bt[:, None] + Bt[None, :])) + np.sum(R))


def reference_instance() -> NetworkSpec:
    """Fixed N=4, T=2 instance with four active dimensions.

    Type 0 of every node is free; type 1 is pinned at zero.  Penalty weights
    are large enough that the penalised optimum is feasible.
    """
    spec = generate_network_spec(4, 2, seed=7)
    spec.active = np.array([True, False] * 4)
    spec.weights = (100.0, 100.0, 100.0)
    full = np.zeros((4, 2))
    full[:, 0] = 0.25
    spec.gamma = float(fidelity_objectives(spec, full).sum())
    full[:, 0] = 0.6
    spec.Lambda_bound = float(cost_f1(spec, full))
    return spec
