"""POVMs, the symmetrised joint-measurement product and correlation matrices."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .config import TOL
from .errors import (
    DimensionMismatch,
    InvalidOutcomeCount,
    InvalidSize,
    NotNearProjective,
    NotPovm,
    RoundingFailed,
    SingularSum,
)
from .linalg import (
    Isometry,
    as_matrix,
    commutator_norm,
    compress,
    hermitian_eig,
    identity,
    op_norm,
    psd_sqrt,
    random_unitary,
    round_to_projection,
)

__all__ = [
    "CorrelationMatrix",
    "MeasurementSystem",
    "PovmFamily",
    "PovmReport",
    "ProjectivePovm",
    "RoundingReport",
    "correlation_matrix",
    "max_commutator",
    "random_measurement_system",
    "random_povm",
    "random_projective_povm",
    "round_to_projective_povm",
    "star_product",
    "validate_povm",
    "voiculescu_pair",
]


@dataclass(frozen=True)
class PovmFamily:
    """``m`` operators on a ``dim``-dimensional space.

    Construction only checks shapes, so that invalid families can still be
    loaded and diagnosed; use :meth:`require_valid` (or :func:`validate_povm`)
    before relying on positivity and normalisation.
    """

    operators: tuple

    def __post_init__(self):
        ops = tuple(as_matrix(A) for A in self.operators)
        if not ops:
            raise InvalidOutcomeCount("a POVM needs at least one outcome")
        n = ops[0].shape[0]
        for A in ops:
            if A.shape != (n, n):
                raise DimensionMismatch(f"operator of shape {A.shape} in a dim-{n} family")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self):
        return self.operators[0].shape[0]

    @property
    def outcomes(self):
        return len(self.operators)

    def __len__(self):
        return len(self.operators)

    def __getitem__(self, i):
        return self.operators[i]

    def __iter__(self):
        return iter(self.operators)

    def require_valid(self, tol=None):
        report = validate_povm(self, tol)
        if not report.passed:
            raise NotPovm(report.summary())
        return self


class ProjectivePovm(PovmFamily):
    """A POVM whose elements are orthogonal projections."""

    def require_valid(self, tol=None):
        report = validate_povm(self, tol)
        if not (report.passed and report.max_idempotency_defect <= report.tol):
            raise NotPovm(report.summary())
        return self


@dataclass
class PovmReport:
    min_eigenvalues: list
    sum_defect: float
    max_idempotency_defect: float
    tol: float
    passed: bool

    @property
    def max_psd_violation(self):
        return max(0.0, -min(self.min_eigenvalues))

    def summary(self):
        return (
            f"sum defect {self.sum_defect:.3e}, PSD violation {self.max_psd_violation:.3e}"
            f" (tol {self.tol:.1e})"
        )

    def to_dict(self):
        return {
            "passed": self.passed,
            "tol": self.tol,
            "sum_defect": self.sum_defect,
            "max_psd_violation": self.max_psd_violation,
            "min_eigenvalues": list(self.min_eigenvalues),
            "max_idempotency_defect": self.max_idempotency_defect,
        }


def validate_povm(f, tol=None):
    """Diagnose positivity and normalisation of a family; never raises on bad data.

    A non-Hermitian operator is reported with ``-inf`` as its minimum
    eigenvalue so the family fails.
    """
    tol = TOL.validate if tol is None else tol
    mins = []
    for A in f:
        asym = op_norm(A - A.conj().T)
        if asym > tol:
            mins.append(float("-inf"))
            continue
        mins.append(float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0]))
    total = sum(f.operators)
    sum_defect = op_norm(total - identity(f.dim))
    idem = max(op_norm(A @ A - A) for A in f)
    passed = min(mins) >= -tol and sum_defect <= tol
    return PovmReport(mins, sum_defect, idem, tol, passed)


@dataclass(frozen=True)
class MeasurementSystem:
    """``d`` POVMs with ``m`` outcomes for each of Alice and Bob on one space."""

    alice: tuple
    bob: tuple

    def __post_init__(self):
        alice = tuple(self.alice)
        bob = tuple(self.bob)
        if not alice or len(alice) != len(bob):
            raise DimensionMismatch("Alice and Bob need the same positive number of POVMs")
        dims = {f.dim for f in alice + bob}
        outs = {f.outcomes for f in alice + bob}
        if len(dims) != 1 or len(outs) != 1:
            raise DimensionMismatch(f"families disagree: dims {dims}, outcomes {outs}")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    @property
    def dim(self):
        return self.alice[0].dim

    @property
    def d(self):
        return len(self.alice)

    @property
    def m(self):
        return self.alice[0].outcomes

    def require_valid(self, tol=None):
        for f in self.alice + self.bob:
            f.require_valid(tol)
        return self


@dataclass(frozen=True)
class CorrelationMatrix:
    """Blocks ``X[k, i, l, j]`` (each ``n x n``) of a correlation matrix.

    The flattened row index is ``k * m + i`` and the column index ``l * m + j``.
    """

    blocks: np.ndarray = field(repr=False)

    def __post_init__(self):
        B = np.asarray(self.blocks, dtype=np.complex128)
        if B.ndim != 6 or B.shape[0] != B.shape[2] or B.shape[1] != B.shape[3]:
            raise ValueError(f"blocks must have shape (d, m, d, m, n, n), got {B.shape}")
        if B.shape[4] != B.shape[5]:
            raise ValueError("blocks must be square")
        object.__setattr__(self, "blocks", B)

    @property
    def d(self):
        return self.blocks.shape[0]

    @property
    def m(self):
        return self.blocks.shape[1]

    @property
    def n(self):
        return self.blocks.shape[4]

    def entry(self, k, i, l, j):
        return self.blocks[k, i, l, j]

    def block_sums(self):
        """``sum_{i,j} X[k, i, l, j]`` for every setting pair, shape ``(d, d, n, n)``."""
        return self.blocks.sum(axis=(1, 3))

    def as_array(self):
        """The ``(md) x (md)`` grid of blocks as a ``(md, md, n, n)`` array."""
        d, m, n = self.d, self.m, self.n
        return self.blocks.reshape(d * m, d * m, n, n)

    def min_block_eigenvalue(self):
        flat = self.as_array().reshape(-1, self.n, self.n)
        return float(min(np.linalg.eigvalsh((X + X.conj().T) / 2)[0] for X in flat))


def star_product(A, B):
    """Symmetrised joint-measurement product ``(A^½ B A^½ + B^½ A B^½) / 2``.

    For commuting ``A`` and ``B`` this equals ``AB``.
    """
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"{A.shape} vs {B.shape}")
    rA, rB = psd_sqrt(A), psd_sqrt(B)
    S = (rA @ B @ rA + rB @ A @ rB) / 2
    return (S + S.conj().T) / 2


def correlation_matrix(system, V):
    """``[V^* (A_i^k • B_j^l) V]`` over all settings and outcomes."""
    if not isinstance(V, Isometry):
        V = Isometry(V)
    if V.target_dim != system.dim:
        raise DimensionMismatch(f"isometry targets dim {V.target_dim}, system has {system.dim}")
    d, m, n = system.d, system.m, V.source_dim
    # square roots once per operator instead of once per pair
    roots_a = [[psd_sqrt(A) for A in f] for f in system.alice]
    roots_b = [[psd_sqrt(B) for B in f] for f in system.bob]
    W = V.matrix
    blocks = np.empty((d, m, d, m, n, n), dtype=np.complex128)
    for k, i, l, j in product(range(d), range(m), range(d), range(m)):
        A, B = system.alice[k][i], system.bob[l][j]
        rA, rB = roots_a[k][i], roots_b[l][j]
        S = (rA @ B @ rA + rB @ A @ rB) / 2
        X = W.conj().T @ S @ W
        blocks[k, i, l, j] = (X + X.conj().T) / 2
    return CorrelationMatrix(blocks)


def max_commutator(system):
    """Largest ``||[A_i^k, B_j^l]||`` over all outcome and setting indices."""
    return max(
        commutator_norm(A, B)
        for fa in system.alice
        for fb in system.bob
        for A in fa
        for B in fb
    )


def _gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_povm(dim, m, seed):
    """Random POVM ``S^{-1/2} R_i S^{-1/2}`` from Wishart draws ``R_i``.

    Deterministic in ``seed`` (an int or a ``numpy.random.Generator``).
    """
    if dim < 1 or m < 1:
        raise InvalidSize(f"need dim >= 1 and m >= 1, got {dim}, {m}")
    rng = np.random.default_rng(seed)
    for _ in range(8):
        Gs = [_gaussian(rng, (dim, dim)) for _ in range(m)]
        Rs = [G @ G.conj().T for G in Gs]
        w, Q = hermitian_eig(sum(Rs))
        if w[-1] >= 1e-8:
            break
    else:
        raise SingularSum("Wishart sum stayed singular after 8 draws")
    inv_root = (Q / np.sqrt(w)) @ Q.conj().T
    ops = []
    for R in Rs:
        A = inv_root @ R @ inv_root
        ops.append((A + A.conj().T) / 2)
    return PovmFamily(ops)


def _partition_sizes(dim, m):
    base, extra = divmod(dim, m)
    return [base + (1 if i < extra else 0) for i in range(m)]


def random_projective_povm(dim, m, seed):
    """Haar-rotated coordinate partition into ``m`` nearly equal blocks."""
    if m < 1 or m > dim:
        raise InvalidOutcomeCount(f"need 1 <= m <= dim, got m={m}, dim={dim}")
    rng = np.random.default_rng(seed)
    Q = random_unitary(dim, rng)
    ops, start = [], 0
    for size in _partition_sizes(dim, m):
        cols = Q[:, start:start + size]
        ops.append(cols @ cols.conj().T)
        start += size
    return ProjectivePovm(ops)


def random_measurement_system(dim, m, d, seed, projective=False):
    """Independent random POVMs for both parties; generally non-commuting."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63, size=2 * d)
    gen = random_projective_povm if projective else random_povm
    fams = [gen(dim, m, int(s)) for s in seeds]
    return MeasurementSystem(fams[:d], fams[d:])


def voiculescu_pair(n):
    """Clock and shift unitaries of size ``n``.

    ``||UV - VU|| = 2 sin(pi / n)`` and ``U^n = V^n = 1``.
    """
    if n < 2:
        raise InvalidSize(f"clock/shift pair needs n >= 2, got {n}")
    omega = np.exp(2j * np.pi * np.arange(n) / n)
    U = np.diag(omega).astype(np.complex128)
    V = np.roll(identity(n), 1, axis=0)  # V e_k = e_{k+1 mod n}
    return U, V


@dataclass
class RoundingReport:
    input_delta: float        # max distance of inputs from projections / normalisation
    deviations: list          # ||out_i - in_i||
    constant: float           # max deviation divided by input_delta (0 if exact)


def _distance_to_projection(A):
    w, _ = hermitian_eig(A)
    return float(np.max(np.minimum(np.abs(w), np.abs(w - 1.0))))


def round_to_projective_povm(f, return_report=False):
    """Round a nearly projective family to an exact projective POVM.

    Each outcome is rounded inside the orthogonal complement of the
    projections chosen so far; the last outcome takes whatever is left.
    """
    ops = f.operators
    n, m = f.dim, f.outcomes
    delta = max(
        max(_distance_to_projection(A) for A in ops),
        op_norm(sum(ops) - identity(n)),
    )
    if not delta < 0.1:
        raise NotNearProjective(f"family is {delta:.3e} from projective (need < 0.1)")
    one = identity(n)
    chosen = []
    remainder = one
    for A in ops[:-1]:
        P = round_to_projection(remainder @ A @ remainder)
        chosen.append(P)
        remainder = one - sum(chosen)
    last = (remainder + remainder.conj().T) / 2
    if op_norm(last @ last - last) > 1e-8:
        raise RoundingFailed("leftover outcome is not a projection")
    chosen.append(last)
    out = ProjectivePovm(chosen)
    if not return_report:
        return out
    devs = [op_norm(P - A) for P, A in zip(chosen, ops)]
    const = max(devs) / delta if delta > 0 else 0.0
    return out, RoundingReport(delta, devs, const)
