"""See-saw lower bounds on ``|| sum_ij alpha_ij (x) U_i V_j ||``.

Two regimes are estimated:

* commuting unitaries, enforced structurally as ``u_i (x) 1`` and ``1 (x) v_j``
  on ``C^k (x) C^k`` (:func:`seesaw_commuting`);
* unitaries on ``C^k`` whose cross commutators are at most ``eps`` in norm
  (:func:`seesaw_eps_commuting`, :func:`epsilon_sweep`).

Every reported value is re-evaluated from scratch on a feasible witness, so
it is a certified lower bound on the corresponding supremum. No upper bounds
are produced.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, Infeasible
from .linalg import as_matrix, commutator_norm, identity, op_norm, polar_unitary, random_unitary

log = logging.getLogger(__name__)

__all__ = [
    "BellProblem",
    "SeesawConfig",
    "SeesawResult",
    "SweepResult",
    "bell_objective",
    "chsh_problem",
    "epsilon_sweep",
    "max_cross_commutator",
    "normalize_first_unitaries",
    "seesaw_commuting",
    "seesaw_eps_commuting",
    "tensor_split",
]


@dataclass(frozen=True)
class BellProblem:
    """Coefficients ``alpha[i, j]`` (each ``n x n``), stored as a ``(d, d, n, n)`` array."""

    alpha: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.complex128)
        if a.ndim == 2:  # scalar coefficients
            a = a[:, :, None, None]
        if a.ndim != 4 or a.shape[0] != a.shape[1] or a.shape[2] != a.shape[3]:
            raise DimensionMismatch(f"alpha must have shape (d, d, n, n), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("alpha has non-finite entries")
        object.__setattr__(self, "alpha", a)

    @property
    def d(self):
        return self.alpha.shape[0]

    @property
    def n(self):
        return self.alpha.shape[2]

    def triangle_cap(self):
        """``sum_ij ||alpha_ij||``, an upper bound for every witness."""
        return sum(op_norm(self.alpha[i, j]) for i in range(self.d) for j in range(self.d))


def chsh_problem():
    """``1 + V_2 + U_2 - U_2 V_2`` in the ``U_1 = V_1 = 1`` gauge."""
    return BellProblem(np.array([[1.0, 1.0], [1.0, -1.0]]))


def _operator(prob, Us, Vs):
    """``sum_ij alpha_ij (x) U_i V_j``."""
    return sum(
        np.kron(prob.alpha[i, j], Us[i] @ Vs[j])
        for i in range(prob.d)
        for j in range(prob.d)
    )


def bell_objective(prob, U_fam, V_fam):
    Us = [as_matrix(U) for U in U_fam]
    Vs = [as_matrix(V) for V in V_fam]
    if len(Us) != prob.d or len(Vs) != prob.d:
        raise DimensionMismatch(f"need {prob.d} unitaries per side, got {len(Us)} and {len(Vs)}")
    if len({U.shape for U in Us + Vs}) != 1:
        raise DimensionMismatch("unitaries must share one dimension")
    return op_norm(_operator(prob, Us, Vs))


def max_cross_commutator(Us, Vs):
    return max(commutator_norm(U, V) for U in Us for V in Vs)


def tensor_split(us, vs):
    """``(u_i (x) 1, 1 (x) v_j)`` on ``C^a (x) C^b``."""
    a, b = us[0].shape[0], vs[0].shape[0]
    return [np.kron(u, identity(b)) for u in us], [np.kron(identity(a), v) for v in vs]


def normalize_first_unitaries(Us, Vs):
    """Gauge ``U_i -> U_1^* U_i`` and ``V_j -> V_j V_1^*`` so both first unitaries are 1.

    ``||sum alpha_ij (x) U_i V_j||`` is unchanged when the families commute,
    because the new operator is the old one conjugated by unitaries.
    """
    U1, V1 = as_matrix(Us[0]), as_matrix(Vs[0])
    return (
        [U1.conj().T @ as_matrix(U) for U in Us],
        [as_matrix(V) @ V1.conj().T for V in Vs],
    )


@dataclass(frozen=True)
class SeesawConfig:
    dim_k: int = 2
    max_sweeps: int = 200
    restarts: int = 8
    penalty_weight: float = None   # None -> 10 * sum ||alpha_ij||
    epsilon_budget: float = None
    seed: int = 0
    convergence_tol: float = 1e-10
    fix_first: bool = False        # pin U_1 = V_1 = 1
    init: str = "tensor"           # start of the eps-commuting search: "tensor" or "random"

    def __post_init__(self):
        if self.dim_k < 1 or self.max_sweeps < 1 or self.restarts < 1:
            raise ValueError("dim_k, max_sweeps and restarts must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.penalty_weight is not None and self.penalty_weight < 0:
            raise ValueError("penalty_weight must be nonnegative")
        if self.epsilon_budget is not None and self.epsilon_budget < 0:
            raise ValueError("epsilon_budget must be nonnegative")
        if self.init not in ("tensor", "random"):
            raise ValueError(f"unknown init {self.init!r}")

    def restart_seeds(self):
        ss = np.random.SeedSequence(self.seed)
        return [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(self.restarts)]


@dataclass
class SeesawResult:
    value: float
    Us: list
    Vs: list
    measured_eps: float
    converged: bool
    restart_values: list
    best_restart: int
    # per restart: list of (objective, penalty) after each full sweep
    histories: list = field(default_factory=list, repr=False)
    restart_witnesses: list = field(default_factory=list, repr=False)

    @property
    def witnesses(self):
        return self.Us, self.Vs


def _top_pair(T):
    W, s, Zh = np.linalg.svd(T)
    return s[0], W[:, 0], Zh[0].conj()


# --- commuting see-saw ------------------------------------------------------------------


def _commuting_sweeps(prob, us, vs, cfg, history):
    """Alternate exact maximisations until the norm stops improving."""
    d, n = prob.d, prob.n
    ka, kb = us[0].shape[0], vs[0].shape[0]
    first = 1 if cfg.fix_first else 0
    value = None
    converged = False
    for _ in range(cfg.max_sweeps):
        T = sum(
            np.kron(prob.alpha[i, j], np.kron(us[i], vs[j]))
            for i in range(d)
            for j in range(d)
        )
        sigma, eta, xi = _top_pair(T)
        history.append((sigma, 0.0))
        if value is not None and sigma - value < cfg.convergence_tol:
            converged = True
            break
        value = sigma
        E = eta.reshape(n, ka, kb).conj()
        X = xi.reshape(n, ka, kb)
        for i in range(first, d):
            G = sum(
                np.einsum("apr,ab,rs,bqs->pq", E, prob.alpha[i, j], vs[j], X, optimize=True)
                for j in range(d)
            )
            us[i] = polar_unitary(G).conj()
        for j in range(first, d):
            H = sum(
                np.einsum("apr,ab,pq,bqs->rs", E, prob.alpha[i, j], us[i], X, optimize=True)
                for i in range(d)
            )
            vs[j] = polar_unitary(H).conj()
    return converged


def _local_init(d, k, rng, fix_first):
    fams = [random_unitary(k, rng) for _ in range(d)]
    if fix_first:
        fams[0] = identity(k)
    return fams


def _run_commuting(prob, cfg, ka, kb, rng, initial=None):
    if initial is None:
        us = _local_init(prob.d, ka, rng, cfg.fix_first)
        vs = _local_init(prob.d, kb, rng, cfg.fix_first)
    else:
        us, vs = [as_matrix(u) for u in initial[0]], [as_matrix(v) for v in initial[1]]
    history = []
    converged = _commuting_sweeps(prob, us, vs, cfg, history)
    return us, vs, converged, history


def seesaw_commuting(prob, cfg, initial=None):
    """Lower bound for the commuting-unitary norm on ``C^k (x) C^k``.

    ``initial`` optionally seeds the first restart with local unitaries
    ``(us, vs)``; remaining restarts start from Haar-random unitaries derived
    from ``cfg.seed``. The returned witnesses are the tensor-split operators.
    """
    k = cfg.dim_k
    best = None
    values, histories, witnesses = [], [], []
    all_converged = True
    for r, seed in enumerate(cfg.restart_seeds()):
        rng = np.random.default_rng(seed)
        us, vs, converged, history = _run_commuting(
            prob, cfg, k, k, rng, initial if r == 0 else None
        )
        Us, Vs = tensor_split(us, vs)
        value = bell_objective(prob, Us, Vs)
        values.append(value)
        histories.append(history)
        witnesses.append((Us, Vs))
        all_converged &= converged
        if best is None or value > values[best]:
            best = r
    log.debug("commuting restart values: %s", values)
    Us, Vs = witnesses[best]
    return SeesawResult(
        value=values[best],
        Us=Us,
        Vs=Vs,
        measured_eps=max_cross_commutator(Us, Vs),
        converged=all_converged,
        restart_values=values,
        best_restart=best,
        histories=histories,
        restart_witnesses=witnesses,
    )


# --- eps-commuting see-saw ---------------------------------------------------------------


def _penalty(Us, Vs, eps, weight):
    return weight * sum(max(0.0, commutator_norm(U, V) - eps) ** 2 for U in Us for V in Vs)


def _geodesic(U, C, t):
    """Point ``U (U^* C)^t`` on the unitary geodesic from ``U`` to ``C``."""
    if t == 1.0:
        return C
    Tm, Z = scipy.linalg.schur(U.conj().T @ C, output="complex")
    phases = np.angle(np.diag(Tm))
    return polar_unitary(U @ (Z * np.exp(1j * t * phases)) @ Z.conj().T)


_STEPS = tuple(0.5**s for s in range(9))


def _eps_sweeps(prob, Us, Vs, cfg, eps, weight, history, track):
    """Penalised see-saw: each unitary moves along the geodesic towards its
    unconstrained optimum as far as the penalised surrogate keeps improving."""
    d = prob.d
    first = 1 if cfg.fix_first else 0
    prev = None
    converged = False
    for _ in range(cfg.max_sweeps):
        T = _operator(prob, Us, Vs)
        sigma, eta, xi = _top_pair(T)
        pen = _penalty(Us, Vs, eps, weight)
        history.append((sigma, pen))
        track(Us, Vs)
        aug = sigma - pen
        if prev is not None and aug - prev < cfg.convergence_tol:
            converged = True
            break
        prev = aug
        K = Us[0].shape[0]
        E = eta.reshape(prob.n, K)
        X = xi.reshape(prob.n, K)
        Gam = [[E.conj().T @ prob.alpha[i, j] @ X for j in range(d)] for i in range(d)]

        def surrogate(Us_, Vs_):
            lin = sum(np.sum((Us_[i] @ Vs_[j]) * Gam[i][j]) for i in range(d) for j in range(d))
            return lin.real - _penalty(Us_, Vs_, eps, weight)

        current = surrogate(Us, Vs)
        for side in ("U", "V"):
            for idx in range(first, d):
                if side == "U":
                    G = sum(Gam[idx][j] @ Vs[j].T for j in range(d))
                else:
                    G = sum(Us[i].T @ Gam[i][idx] for i in range(d))
                target = polar_unitary(G).conj()
                old = Us[idx] if side == "U" else Vs[idx]
                for t in _STEPS:
                    cand = _geodesic(old, target, t)
                    trial_U = Us if side == "V" else Us[:idx] + [cand] + Us[idx + 1:]
                    trial_V = Vs if side == "U" else Vs[:idx] + [cand] + Vs[idx + 1:]
                    val = surrogate(trial_U, trial_V)
                    if val > current:
                        Us, Vs, current = trial_U, trial_V, val
                        break
    T = _operator(prob, Us, Vs)
    history.append((_top_pair(T)[0], _penalty(Us, Vs, eps, weight)))
    track(Us, Vs)
    return Us, Vs, converged


def _split_dims(K):
    a = int(np.floor(np.sqrt(K)))
    while K % a:
        a -= 1
    return a, K // a


class _FeasibleTracker:
    """Keeps the best witness whose commutators fit the budget."""

    def __init__(self, prob, eps):
        self.prob, self.eps = prob, eps
        self.value, self.witness, self.measured = -np.inf, None, None

    def __call__(self, Us, Vs):
        measured = max_cross_commutator(Us, Vs)
        if measured > self.eps + 1e-12:
            return
        value = bell_objective(self.prob, Us, Vs)
        if value > self.value:
            self.value = value
            self.witness = ([U.copy() for U in Us], [V.copy() for V in Vs])
            self.measured = measured


def _eps_restart(prob, cfg, eps, weight, seed, initial):
    rng = np.random.default_rng(seed)
    K = cfg.dim_k
    tracker = _FeasibleTracker(prob, eps)
    history = []
    converged = True
    if initial is not None:
        Us, Vs = [as_matrix(U) for U in initial[0]], [as_matrix(V) for V in initial[1]]
    elif cfg.init == "tensor":
        a, b = _split_dims(K)
        us, vs, converged, hist0 = _run_commuting(prob, cfg, a, b, rng)
        history.extend(hist0)
        Us, Vs = tensor_split(us, vs)
    else:
        Us = _local_init(prob.d, K, rng, cfg.fix_first)
        Vs = _local_init(prob.d, K, rng, cfg.fix_first)
    Us, Vs, conv2 = _eps_sweeps(prob, list(Us), list(Vs), cfg, eps, weight, history, tracker)
    return tracker, history, converged and conv2


def seesaw_eps_commuting(prob, cfg, initial=None):
    """Lower bound for the norm over unitaries on ``C^k`` with ``||[U_i, V_j]|| <= eps``.

    The budget is ``cfg.epsilon_budget``. ``initial`` is either one witness
    ``(Us, Vs)`` used by every restart or a list with one witness per restart
    (``None`` entries fall back to ``cfg.init``). Only witnesses that meet the
    budget are ever reported; infeasible end points are discarded in favour
    of the best feasible iterate of the same run.
    """
    if cfg.epsilon_budget is None:
        raise ValueError("seesaw_eps_commuting needs cfg.epsilon_budget")
    eps = float(cfg.epsilon_budget)
    weight = cfg.penalty_weight if cfg.penalty_weight is not None else 10 * prob.triangle_cap()
    seeds = cfg.restart_seeds()
    if initial is None or (len(initial) == 2 and _is_family(initial[0])):
        inits = [initial] * len(seeds)
    else:
        inits = list(initial)
    values, histories, witnesses, measured = [], [], [], []
    all_converged = True
    for seed, init in zip(seeds, inits):
        tracker, history, converged = _eps_restart(prob, cfg, eps, weight, seed, init)
        values.append(tracker.value if tracker.witness is not None else None)
        histories.append(history)
        witnesses.append(tracker.witness)
        measured.append(tracker.measured)
        all_converged &= converged
    feasible = [r for r, v in enumerate(values) if v is not None]
    if not feasible:
        raise Infeasible(f"no witness with commutators <= {eps:g} in {len(seeds)} restarts")
    best = max(feasible, key=lambda r: values[r])
    log.debug("eps=%g restart values: %s", eps, values)
    Us, Vs = witnesses[best]
    return SeesawResult(
        value=values[best],
        Us=Us,
        Vs=Vs,
        measured_eps=measured[best],
        converged=all_converged,
        restart_values=values,
        best_restart=best,
        histories=histories,
        restart_witnesses=witnesses,
    )


def _is_family(obj):
    return isinstance(obj, (list, tuple)) and len(obj) > 0 and np.ndim(obj[0]) == 2


# --- eps sweep ------------------------------------------------------------------------------


@dataclass
class SweepResult:
    epsilons: list
    values: list          # None marks an infeasible entry
    measured_eps: list
    restart_best: list
    flags: list           # "" | "noise" | "infeasible"
    witnesses: list = field(default_factory=list, repr=False)
    results: list = field(default_factory=list, repr=False)

    def rows(self):
        return list(zip(self.epsilons, self.values, self.measured_eps, self.restart_best, self.flags))


def epsilon_sweep(prob, epsilons, cfg, keep_witnesses=False, noise_tol=1e-6):
    """Run :func:`seesaw_eps_commuting` over an ascending list of budgets.

    Restart seeds are shared across budgets and every restart is warm-started
    from its own best feasible witness at the previous budget, which stays
    feasible for the larger one. A drop of more than ``noise_tol`` between
    consecutive feasible entries is flagged ``"noise"`` and left in place.
    """
    epsilons = [float(e) for e in epsilons]
    if not epsilons:
        raise ValueError("need at least one epsilon")
    if any(b < a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be ascending")
    values, measured, best_idx, flags, witnesses, results = [], [], [], [], [], []
    warm = None
    last_value = None
    for eps in epsilons:
        try:
            res = seesaw_eps_commuting(prob, replace(cfg, epsilon_budget=eps), initial=warm)
        except Infeasible:
            values.append(None)
            measured.append(None)
            best_idx.append(None)
            flags.append("infeasible")
            witnesses.append(None)
            results.append(None)
            continue
        warm = res.restart_witnesses
        flag = ""
        if last_value is not None and res.value < last_value - noise_tol:
            flag = "noise"
            log.warning("value dropped from %.9g to %.9g at eps=%g", last_value, res.value, eps)
        last_value = res.value if last_value is None else max(last_value, res.value)
        values.append(res.value)
        measured.append(res.measured_eps)
        best_idx.append(res.best_restart)
        flags.append(flag)
        witnesses.append(res.witnesses if keep_witnesses else None)
        results.append(res)
    return SweepResult(epsilons, values, measured, best_idx, flags, witnesses, results)
