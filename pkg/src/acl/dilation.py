"""Dilations to projective, commuting or unitary operators on larger spaces.

Three constructions are provided:

* :func:`naimark_projective_dilation` turns a pair of POVMs into projective
  POVMs on ``C^{m+1} (x) C^{m+1} (x) H`` whose compressions reproduce the
  inputs and their products.
* :func:`folner_dilation` dilates a pair of almost commuting unitaries to
  exactly commuting torus shifts, using the averaging set ``{0..m}^2``.
* :func:`contraction_dilation_pair` builds the 4x4 block unitaries whose
  product has ``xy`` in its top-left corner.
"""

from dataclasses import dataclass, field
from math import floor, sqrt

import numpy as np

from .config import TOL
from .errors import (
    BadTorus,
    CommutatorBudgetExceeded,
    DimensionMismatch,
    InconsistentResult,
    NotContraction,
    NotPovm,
    NotUnitary,
    UnsupportedFamilySize,
)
from .linalg import (
    Isometry,
    as_matrix,
    commutator_norm,
    compress,
    identity,
    op_norm,
    polar_unitary,
    psd_sqrt,
    round_to_projection,
)
from .measurement import PovmFamily, ProjectivePovm, validate_povm

__all__ = [
    "DilationResult",
    "FolnerParams",
    "TorusShift",
    "contraction_dilation_pair",
    "contraction_dilation",
    "dilation_report",
    "folner_bound",
    "folner_dilation",
    "naimark_projective_dilation",
]


@dataclass(frozen=True)
class TorusShift:
    """Translation of ``Z_M x Z_M`` by ``shift``, tensored with the identity on ``C^n``.

    Basis vector ``delta_(p,q) (x) e_h`` has flat index ``(p * M + q) * n + h``
    and is sent to ``delta_(p+dp, q+dq) (x) e_h``.
    """

    torus_size: int
    inner_dim: int
    shift: tuple

    @property
    def dim(self):
        return self.torus_size**2 * self.inner_dim

    def site_permutation(self):
        """``perm[s]`` is the image site of torus site ``s = p * M + q``."""
        M = self.torus_size
        p, q = np.divmod(np.arange(M * M), M)
        dp, dq = self.shift
        return ((p + dp) % M) * M + (q + dq) % M

    def apply(self, X):
        """Left-multiply a ``(dim, ...)`` array by this operator."""
        M, n = self.torus_size, self.inner_dim
        X = np.asarray(X)
        grid = X.reshape((M, M, n) + X.shape[1:])
        return np.roll(grid, self.shift, axis=(0, 1)).reshape(X.shape)

    def to_dense(self):
        return self.apply(identity(self.dim))

    def commutes_exactly(self, other):
        a, b = self.site_permutation(), other.site_permutation()
        return (
            self.torus_size == other.torus_size
            and self.inner_dim == other.inner_dim
            and np.array_equal(a[b], b[a])
        )


def _apply(op, X):
    return op.apply(X) if isinstance(op, TorusShift) else op @ X


def _commutator_of(P, Q):
    if isinstance(P, TorusShift) and isinstance(Q, TorusShift):
        # permutations of sites: the commutator is exactly zero or at least sqrt(2)
        return 0.0 if P.commutes_exactly(Q) else commutator_norm(P.to_dense(), Q.to_dense())
    dense = [X.to_dense() if isinstance(X, TorusShift) else X for X in (P, Q)]
    return commutator_norm(*dense)


@dataclass
class DilationResult:
    kind: str
    ambient_dim: int
    isometry: Isometry
    dilated_alice: list
    dilated_bob: list
    defect_alice: list
    defect_bob: list
    dilated_commutator: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.isometry, Isometry):
            self.isometry = Isometry(self.isometry)
        values = list(self.defect_alice) + list(self.defect_bob) + [self.dilated_commutator]
        if any(v < 0 for v in values):
            raise ValueError("defects and commutators are nonnegative")

    @property
    def max_defect(self):
        return max(list(self.defect_alice) + list(self.defect_bob))


def _compressed(op, V):
    W = V.matrix
    return W.conj().T @ _apply(op, W)


def _defects(dilated, originals, V):
    return [op_norm(_compressed(P, V) - A) for P, A in zip(dilated, originals)]


def _max_cross_commutator(alice, bob):
    return max(_commutator_of(P, Q) for P in alice for Q in bob)


# --- projective dilation of POVM pairs -------------------------------------------------


def _projective_lift(f):
    """Projective POVM on ``C^{m+1} (x) H`` with top-left corners ``f``."""
    n, m = f.dim, f.outcomes
    X = np.hstack([psd_sqrt(A) for A in f])  # n x mn row of square roots
    # sum A_i = 1 makes X^* X a projection, so its complement is its own square root
    Y = round_to_projection(identity(m * n) - X.conj().T @ X)
    U = np.block([
        [X, np.zeros((n, n), dtype=np.complex128)],
        [Y, -X.conj().T],
    ])
    lifts = []
    for i in range(m):
        stop = (i + 2) * n if i == m - 1 else (i + 1) * n
        cols = U[:, i * n:stop]
        P = cols @ cols.conj().T
        lifts.append((P + P.conj().T) / 2)
    return U, lifts


def _place(P, n, m, leg):
    """Embed an operator on ``C^{m+1} (x) H`` into ``C^{m+1} (x) C^{m+1} (x) H``."""
    r = m + 1
    T = P.reshape(r, n, r, n)
    eye = np.eye(r)
    if leg == 1:
        big = np.einsum("ahbg,cd->achbdg", T, eye)
    else:
        big = np.einsum("chdg,ab->achbdg", T, eye)
    return big.reshape(r * r * n, r * r * n)


def naimark_projective_dilation(alice, bob, tol=None):
    """Dilate two POVMs to projective POVMs on ``(m+1)^2 n`` dimensions.

    The compression ``Phi`` onto ``delta_1 (x) delta_1 (x) H`` satisfies
    ``Phi(P_i) = A_i``, ``Phi(Q_j) = B_j`` and ``Phi(P_i Q_j) = A_i B_j``. The
    dilated commutator is measured and reported; it vanishes when the inputs
    commute but no rate is claimed otherwise.
    """
    alice = alice if isinstance(alice, PovmFamily) else PovmFamily(alice)
    bob = bob if isinstance(bob, PovmFamily) else PovmFamily(bob)
    if alice.dim != bob.dim or alice.outcomes != bob.outcomes:
        raise DimensionMismatch(
            f"alice is ({alice.dim}, {alice.outcomes}), bob is ({bob.dim}, {bob.outcomes})"
        )
    for name, f in (("alice", alice), ("bob", bob)):
        rep = validate_povm(f, tol)
        if not rep.passed:
            raise NotPovm(f"{name}: {rep.summary()}")
    n, m = alice.dim, alice.outcomes
    r = m + 1
    U_a, lift_a = _projective_lift(alice)
    U_b, lift_b = _projective_lift(bob)
    P = [_place(L, n, m, 1) for L in lift_a]
    Q = [_place(L, n, m, 2) for L in lift_b]

    V = np.zeros((r * r * n, n), dtype=np.complex128)
    V[:n, :] = identity(n)
    V = Isometry(V)

    product_defect = max(
        op_norm(compress(Pi @ Qj, V) - A @ B)
        for Pi, A in zip(P, alice)
        for Qj, B in zip(Q, bob)
    )
    extras = {
        "product_defect": product_defect,
        "unitary_defect": max(
            op_norm(W.conj().T @ W - identity(W.shape[0])) for W in (U_a, U_b)
        ),
        "idempotency_defect": max(op_norm(X @ X - X) for X in P + Q),
    }
    return DilationResult(
        kind="naimark",
        ambient_dim=r * r * n,
        isometry=V,
        dilated_alice=ProjectivePovm(P),
        dilated_bob=ProjectivePovm(Q),
        defect_alice=_defects(P, alice, V),
        defect_bob=_defects(Q, bob, V),
        dilated_commutator=_max_cross_commutator(P, Q),
        extras=extras,
    )


# --- Folner dilation of an almost commuting unitary pair ------------------------------


@dataclass(frozen=True)
class FolnerParams:
    """Commutator budget plus optional averaging-box size and torus size.

    ``m=None`` selects ``floor(1/sqrt(eps))`` from the measured commutator;
    ``torus_size=None`` selects ``m + 2``.
    """

    epsilon: float
    m: int = None
    torus_size: int = None

    def resolve(self, measured_eps):
        m = self.m
        if m is None:
            eps = measured_eps if measured_eps > 0 else self.epsilon
            if eps <= 0:
                raise ValueError("exactly commuting input with zero budget: pass m explicitly")
            m = floor(1.0 / sqrt(eps))  # 0 once eps > 1: the box is a single point
        if m < 0:
            raise ValueError(f"m must be >= 0, got {m}")
        M = m + 2 if self.torus_size is None else self.torus_size
        if M < m + 2:
            raise BadTorus(f"torus size {M} < m + 2 = {m + 2} contaminates the box")
        return m, M


def folner_bound(eps, m):
    """Upper bound ``m eps + 1/(m+1)`` on the compression defect."""
    return m * eps + 1.0 / (m + 1)


def _single(fam, name):
    if isinstance(fam, np.ndarray) and fam.ndim == 2:
        return as_matrix(fam)
    fam = list(fam)
    if len(fam) != 1:
        raise UnsupportedFamilySize(
            f"{name} has {len(fam)} unitaries; only a single pair can be dilated"
        )
    return as_matrix(fam[0])


def _require_unitary(U, name):
    if U.shape[0] != U.shape[1]:
        raise NotUnitary(f"{name} is not square")
    defect = op_norm(U.conj().T @ U - identity(U.shape[0]))
    if defect > TOL.unitary:
        raise NotUnitary(f"{name} deviates from unitary by {defect:.3e}")


def _powers(U, count, every=16):
    """``[U^0, ..., U^(count-1)]`` with a polar re-unitarisation every ``every`` steps."""
    out = [identity(U.shape[0])]
    for s in range(1, count):
        nxt = out[-1] @ U
        if s % every == 0:
            nxt = polar_unitary(nxt)
        out.append(nxt)
    return out


def folner_dilation(U_fam, V_fam, params):
    """Dilate almost commuting unitaries ``U, V`` to commuting torus shifts.

    Builds ``W xi = |F|^{-1/2} sum_{(p,q) in F} delta_(p,q) (x) U^p V^q xi`` for
    ``F = {0..m}^2`` inside ``l2(Z_M x Z_M) (x) H``. The shifts by ``(-1, 0)``
    and ``(0, -1)`` commute exactly and compress to within
    ``m eps + 1/(m+1)`` of ``U`` and ``V``.
    """
    U = _single(U_fam, "U family")
    V = _single(V_fam, "V family")
    if U.shape != V.shape:
        raise DimensionMismatch(f"{U.shape} vs {V.shape}")
    _require_unitary(U, "U")
    _require_unitary(V, "V")
    eps = commutator_norm(U, V)
    if eps > params.epsilon + 1e-12:  # round-off slack for exactly commuting input
        raise CommutatorBudgetExceeded(f"||[U,V]|| = {eps:.6g} > budget {params.epsilon:.6g}")
    m, M = params.resolve(eps)
    n = U.shape[0]

    Upow, Vpow = _powers(U, m + 1), _powers(V, m + 1)
    W = np.zeros((M, M, n, n), dtype=np.complex128)
    scale = 1.0 / (m + 1)  # |F|^{-1/2}
    for p in range(m + 1):
        for q in range(m + 1):
            W[p, q] = scale * (Upow[p] @ Vpow[q])
    W = Isometry(W.reshape(M * M * n, n))

    u = TorusShift(M, n, (-1, 0))
    v = TorusShift(M, n, (0, -1))
    defect_u = _defects([u], [U], W)
    defect_v = _defects([v], [V], W)
    bound = folner_bound(eps, m)
    return DilationResult(
        kind="folner",
        ambient_dim=M * M * n,
        isometry=W,
        dilated_alice=[u],
        dilated_bob=[v],
        defect_alice=defect_u,
        defect_bob=defect_v,
        dilated_commutator=_commutator_of(u, v),
        extras={
            "epsilon": eps,
            "m": m,
            "torus_size": M,
            "bound": bound,
            "two_sqrt_eps": 2.0 * sqrt(eps),
        },
    )


# --- contraction dilation ----------------------------------------------------------------


def _defect_operators(x):
    """``(sqrt(1 - x x^*), sqrt(1 - x^* x))`` sharing the singular vectors of ``x``.

    Taking both from one SVD keeps the intertwining
    ``x sqrt(1 - x^* x) = sqrt(1 - x x^*) x`` exact to round-off.
    """
    W, s, Zh = np.linalg.svd(x)
    c = np.sqrt(np.clip(1.0 - np.minimum(s, 1.0) ** 2, 0.0, None))
    left = (W * c) @ W.conj().T
    right = (Zh.conj().T * c) @ Zh
    return left, right


def contraction_dilation_pair(x, y):
    """Block unitaries ``U_x, V_y`` of size ``4n`` with ``(U_x V_y)_{11} = x y``.

    ``U_x`` holds two diagonal copies of ``[[x, D*], [D, -x^*]]``; ``V_y`` spreads
    the same pattern for ``y`` over the block positions (1,3), (2,4), (3,1), (4,2).
    Here ``D* = sqrt(1 - x x^*)`` and ``D = sqrt(1 - x^* x)``.
    """
    x, y = as_matrix(x), as_matrix(y)
    if x.shape != y.shape or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    for name, z in (("x", x), ("y", y)):
        norm = op_norm(z)
        if norm > 1 + 1e-10:
            raise NotContraction(f"||{name}|| = {norm:.6g} > 1")
    n = x.shape[0]
    Z = np.zeros((n, n), dtype=np.complex128)
    lx, rx = _defect_operators(x)
    ly, ry = _defect_operators(y)
    xs, ys = x.conj().T, y.conj().T
    Ux = np.block([
        [x, lx, Z, Z],
        [rx, -xs, Z, Z],
        [Z, Z, x, lx],
        [Z, Z, rx, -xs],
    ])
    Vy = np.block([
        [y, Z, ly, Z],
        [Z, y, Z, ly],
        [ry, Z, -ys, Z],
        [Z, ry, Z, -ys],
    ])
    return Ux, Vy


def contraction_dilation(x, y):
    """:func:`contraction_dilation_pair` packaged with its diagnostics."""
    x, y = as_matrix(x), as_matrix(y)
    Ux, Vy = contraction_dilation_pair(x, y)
    n = x.shape[0]
    V = np.zeros((4 * n, n), dtype=np.complex128)
    V[:n] = identity(n)
    V = Isometry(V)
    one = identity(4 * n)
    return DilationResult(
        kind="contraction",
        ambient_dim=4 * n,
        isometry=V,
        dilated_alice=[Ux],
        dilated_bob=[Vy],
        defect_alice=_defects([Ux], [x], V),
        defect_bob=_defects([Vy], [y], V),
        dilated_commutator=commutator_norm(Ux, Vy),
        extras={
            "product_defect": op_norm(compress(Ux @ Vy, V) - x @ y),
            "unitary_defect": max(op_norm(T.conj().T @ T - one) for T in (Ux, Vy)),
            "input_commutator": commutator_norm(x, y),
            "input_adjoint_commutator": commutator_norm(x.conj().T, y),
        },
    )


# --- consistency report --------------------------------------------------------------------


def dilation_report(result, original_alice, original_bob):
    """Recompute every defect and the dilated commutator from scratch.

    Raises :class:`InconsistentResult` if any stored number differs from the
    recomputation by more than ``1e-10``; otherwise returns a summary dict.
    """
    originals_a = [as_matrix(A) for A in original_alice]
    originals_b = [as_matrix(B) for B in original_bob]
    if len(originals_a) != len(result.dilated_alice) or len(originals_b) != len(result.dilated_bob):
        raise DimensionMismatch("original families do not match the dilation")
    if result.isometry.source_dim != originals_a[0].shape[0]:
        raise DimensionMismatch("isometry source dimension does not match originals")
    V = result.isometry
    da = _defects(result.dilated_alice, originals_a, V)
    db = _defects(result.dilated_bob, originals_b, V)
    comm = _max_cross_commutator(result.dilated_alice, result.dilated_bob)
    stored = list(result.defect_alice) + list(result.defect_bob) + [result.dilated_commutator]
    fresh = da + db + [comm]
    discrepancy = max(abs(a - b) for a, b in zip(stored, fresh))
    if len(stored) != len(fresh) or discrepancy > 1e-10:
        raise InconsistentResult(f"stored diagnostics differ from recomputation by {discrepancy:.3e}")
    return {
        "kind": result.kind,
        "ambient_dim": result.ambient_dim,
        "defect_alice": da,
        "defect_bob": db,
        "max_defect": max(da + db),
        "dilated_commutator": comm,
        "max_discrepancy": discrepancy,
        "consistent": discrepancy <= 1e-12,
        **{k: v for k, v in result.extras.items()},
    }
