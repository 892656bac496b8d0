"""Finite-dimensional operator algebra on weighted inner-product spaces.

Every operator in this package is a real matrix together with two space
tags.  A tag carries the per-coordinate quadrature weights of the discrete
inner product, so adjoints are weighted transposes and "skew-selfadjoint"
always means skew with respect to those weights.  The module provides the
block construction [[0, -C*], [C, 0]], a quantitative compatibility check
for projection/restriction maps, and the relative construction
[[0, -B0 C* B1*], [B1 C B0*, 0]] used everywhere else to project systems
onto subspaces.

All values are immutable after construction and safe to share across
threads; the functions here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

# Operators with at least this many rows are kept in sparse storage.
SPARSE_THRESHOLD = 4096

# Relative singular-value cutoff declaring a map "boundedly left-invertible".
DEFAULT_RANK_TOL = 1e-10


class TagMismatchError(ValueError):
    """Domain/codomain tags do not line up for the attempted operation."""


class PreconditionError(ValueError):
    """A stated hypothesis of a construction is violated."""


class SpaceTag:
    """Label, dimension and inner-product weights of a coordinate space.

    Two tags compose only when they are equal (same name, dimension and
    bitwise-identical weights).
    """

    __slots__ = ("name", "dim", "weight")

    def __init__(self, name, dim, weight=None):
        if dim < 1:
            raise ValueError(f"space dimension must be >= 1, got {dim}")
        if weight is None:
            weight = np.ones(dim)
        weight = np.asarray(weight, dtype=float)
        if weight.ndim == 0:
            weight = np.full(dim, float(weight))
        if weight.shape != (dim,):
            raise ValueError(f"weight shape {weight.shape} does not match dim {dim}")
        if not np.all(weight > 0):
            raise ValueError("all inner-product weights must be positive")
        weight.setflags(write=False)
        object.__setattr__(self, "name", str(name))
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "weight", weight)

    def __setattr__(self, *_):
        raise AttributeError("SpaceTag is immutable")

    def __eq__(self, other):
        if not isinstance(other, SpaceTag):
            return NotImplemented
        return (
            self.name == other.name
            and self.dim == other.dim
            and np.array_equal(self.weight, other.weight)
        )

    def __hash__(self):
        return hash((self.name, self.dim))

    def __repr__(self):
        return f"SpaceTag({self.name!r}, dim={self.dim})"


def direct_sum_tags(tags, name=None):
    """Tag of the direct sum, weights concatenated."""
    tags = list(tags)
    if name is None:
        name = "(" + " + ".join(t.name for t in tags) + ")"
    w = np.concatenate([t.weight for t in tags])
    return SpaceTag(name, len(w), w)


def _normalize_storage(entries):
    """Dense below SPARSE_THRESHOLD rows, sparse (csr) at or above it."""
    if sp.issparse(entries):
        if entries.shape[0] < SPARSE_THRESHOLD:
            out = np.asarray(entries.todense(), dtype=float)
            out.setflags(write=False)
            return out
        return entries.tocsr().astype(float)
    out = np.asarray(entries, dtype=float)
    if out.ndim != 2:
        raise ValueError(f"operator entries must be 2-d, got shape {out.shape}")
    if out.shape[0] >= SPARSE_THRESHOLD:
        return sp.csr_matrix(out)
    out = out.copy()
    out.setflags(write=False)
    return out


class MatrixOperator:
    """Real matrix with tagged domain and codomain.

    The adjoint is the weighted transpose W_dom^-1 T^T W_cod.  Adjoint
    pairs are memoized so that ``adjoint(adjoint(T)) is T`` holds exactly,
    with no repeated floating-point work.
    """

    __slots__ = ("entries", "domain", "codomain", "_adj")

    def __init__(self, entries, domain, codomain):
        entries = _normalize_storage(entries)
        if entries.shape != (codomain.dim, domain.dim):
            raise TagMismatchError(
                f"entries shape {entries.shape} does not match tags "
                f"({codomain.dim}, {domain.dim})"
            )
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "codomain", codomain)
        object.__setattr__(self, "_adj", None)

    def __setattr__(self, *_):
        raise AttributeError("MatrixOperator is immutable")

    # -- storage helpers ---------------------------------------------------

    @property
    def shape(self):
        return self.entries.shape

    def to_dense(self):
        if sp.issparse(self.entries):
            return np.asarray(self.entries.todense())
        return np.asarray(self.entries)

    def max_abs(self):
        if sp.issparse(self.entries):
            return abs(self.entries).max() if self.entries.nnz else 0.0
        return float(np.abs(self.entries).max()) if self.entries.size else 0.0

    # -- algebra -----------------------------------------------------------

    def apply(self, vec):
        return self.entries @ np.asarray(vec, dtype=float)

    def __matmul__(self, other):
        if isinstance(other, MatrixOperator):
            if self.domain != other.codomain:
                raise TagMismatchError(
                    f"cannot compose: {self.domain.name} != {other.codomain.name}"
                )
            return MatrixOperator(self.entries @ other.entries, other.domain, self.codomain)
        return self.apply(other)

    def _require_same_tags(self, other):
        if self.domain != other.domain or self.codomain != other.codomain:
            raise TagMismatchError("operator tags differ")

    def __add__(self, other):
        self._require_same_tags(other)
        return MatrixOperator(self.entries + other.entries, self.domain, self.codomain)

    def __sub__(self, other):
        self._require_same_tags(other)
        return MatrixOperator(self.entries - other.entries, self.domain, self.codomain)

    def __neg__(self):
        return MatrixOperator(-self.entries, self.domain, self.codomain)

    def __mul__(self, scalar):
        return MatrixOperator(self.entries * float(scalar), self.domain, self.codomain)

    __rmul__ = __mul__

    def adjoint(self):
        if self._adj is None:
            ratio_num = self.codomain.weight  # length = rows
            ratio_den = self.domain.weight    # length = cols
            if sp.issparse(self.entries):
                adj_entries = (
                    sp.diags(1.0 / ratio_den) @ self.entries.T @ sp.diags(ratio_num)
                )
            else:
                adj_entries = self.entries.T * ratio_num[None, :] / ratio_den[:, None]
            adj = MatrixOperator(adj_entries, self.codomain, self.domain)
            object.__setattr__(adj, "_adj", self)
            object.__setattr__(self, "_adj", adj)
        return self._adj

    def with_adjoint(self, adj_entries):
        """Attach a precomputed adjoint (used where it is exact by construction)."""
        adj = MatrixOperator(adj_entries, self.codomain, self.domain)
        object.__setattr__(adj, "_adj", self)
        object.__setattr__(self, "_adj", adj)
        return self

    def __repr__(self):
        return (
            f"MatrixOperator({self.codomain.dim}x{self.domain.dim}, "
            f"{self.domain.name} -> {self.codomain.name})"
        )


def adjoint(op: MatrixOperator) -> MatrixOperator:
    """Weighted adjoint: <T u, v>_cod = <u, T* v>_dom for all u, v."""
    return op.adjoint()


def identity(tag: SpaceTag) -> MatrixOperator:
    n = tag.dim
    ent = sp.identity(n, format="csr") if n >= SPARSE_THRESHOLD else np.eye(n)
    return MatrixOperator(ent, tag, tag)


def zero(domain: SpaceTag, codomain: SpaceTag) -> MatrixOperator:
    if codomain.dim >= SPARSE_THRESHOLD:
        return MatrixOperator(sp.csr_matrix((codomain.dim, domain.dim)), domain, codomain)
    return MatrixOperator(np.zeros((codomain.dim, domain.dim)), domain, codomain)


def block_diag(ops, name=None) -> MatrixOperator:
    """Direct sum of operators, acting blockwise."""
    ops = list(ops)
    dom = direct_sum_tags([o.domain for o in ops], name=name)
    cod = direct_sum_tags([o.codomain for o in ops], name=name)
    if any(sp.issparse(o.entries) for o in ops) or cod.dim >= SPARSE_THRESHOLD:
        ent = sp.block_diag([o.entries for o in ops], format="csr")
    else:
        ent = sla.block_diag(*[o.to_dense() for o in ops])
    return MatrixOperator(ent, dom, cod)


def inner(tag: SpaceTag, u, v) -> float:
    """Weighted inner product of two coordinate vectors."""
    return float(np.sum(tag.weight * np.asarray(u) * np.asarray(v)))


def norm(tag: SpaceTag, u) -> float:
    return float(np.sqrt(max(inner(tag, u, u), 0.0)))


def weighted_singular_values(op: MatrixOperator) -> np.ndarray:
    """Singular values of T with respect to the weighted norms on both sides."""
    m = op.to_dense()
    sw_cod = np.sqrt(op.codomain.weight)
    sw_dom = np.sqrt(op.domain.weight)
    return np.linalg.svd(sw_cod[:, None] * m / sw_dom[None, :], compute_uv=False)


@dataclass(frozen=True)
class BlockSkewOperator:
    """A = [[0, -C*], [C, 0]] on H0 (+) H1; skew-selfadjoint by construction."""

    C: MatrixOperator
    operator: MatrixOperator

    @property
    def space(self):
        return self.operator.domain

    def as_matrix(self) -> MatrixOperator:
        return self.operator


def make_block_skew(C: MatrixOperator) -> BlockSkewOperator:
    """Assemble [[0, -C*], [C, 0]] with its adjoint attached as the exact negation.

    The adjoint really is the entrywise negation (the off-diagonal blocks are
    adjoints of each other by construction), so A + A* vanishes identically,
    with no floating-point arithmetic involved.
    """
    cs = C.adjoint()
    h0, h1 = C.domain, C.codomain
    space = direct_sum_tags([h0, h1])
    use_sparse = (
        sp.issparse(C.entries) or sp.issparse(cs.entries) or space.dim >= SPARSE_THRESHOLD
    )
    if use_sparse:
        ent = sp.bmat(
            [[None, -(sp.csr_matrix(cs.entries))], [sp.csr_matrix(C.entries), None]],
            format="csr",
        )
    else:
        ent = np.zeros((space.dim, space.dim))
        ent[: h0.dim, h0.dim :] = -cs.to_dense()
        ent[h0.dim :, : h0.dim] = C.to_dense()
    A = MatrixOperator(ent, space, space)
    A.with_adjoint(-A.entries)
    return BlockSkewOperator(C=C, operator=A)


def is_skew_selfadjoint(op, tol: float = 0.0) -> bool:
    """True iff the max-entry norm of A + A* is at most tol."""
    A = op.operator if isinstance(op, BlockSkewOperator) else op
    if A.domain != A.codomain:
        raise TagMismatchError("skew-selfadjointness needs domain == codomain")
    return (A + A.adjoint()).max_abs() <= tol


def skew_defect(op) -> float:
    """Max-entry norm of A + A*."""
    A = op.operator if isinstance(op, BlockSkewOperator) else op
    if A.domain != A.codomain:
        raise TagMismatchError("skew defect needs domain == codomain")
    return (A + A.adjoint()).max_abs()


@dataclass(frozen=True)
class CompatibilityReport:
    """Quantitative stand-in for compatibility of a bounded map B with C.

    In finite dimensions C B* is always everywhere defined, so the dense-
    definedness clause is vacuous; what survives as a usable hypothesis is
    that B* has a bounded left-inverse, i.e. full column rank with a
    smallest weighted singular value above the cutoff.
    """

    dense_definedness: bool
    left_invertible: bool
    smallest_singular_value: float
    rank_tol: float

    def __bool__(self):
        return self.dense_definedness and self.left_invertible


def check_compatibility(C: MatrixOperator, B: MatrixOperator,
                        rank_tol: float = DEFAULT_RANK_TOL) -> CompatibilityReport:
    """Report whether B (H0 -> X) is compatible with C (H0 -> H1)."""
    if C.domain != B.domain:
        raise TagMismatchError(
            f"B and C must share their domain: {B.domain.name} != {C.domain.name}"
        )
    svals = weighted_singular_values(B.adjoint())
    smax = float(svals[0]) if svals.size else 0.0
    smin = float(svals[-1]) if svals.size else 0.0
    # B*: X -> H0 must be injective, i.e. no weighted singular value collapses.
    full_rank = B.codomain.dim <= B.domain.dim and smin > rank_tol * max(smax, 1e-300)
    return CompatibilityReport(
        dense_definedness=True,
        left_invertible=full_rank,
        smallest_singular_value=smin,
        rank_tol=rank_tol,
    )


def verify_adjoint_theorem(C: MatrixOperator, B: MatrixOperator, tol: float) -> bool:
    """Check (C B*)* == B C* in the max-entry norm (closures are trivial here)."""
    lhs = (C @ B.adjoint()).adjoint()
    rhs = B @ C.adjoint()
    return (lhs - rhs).max_abs() <= tol


def make_relative(A: BlockSkewOperator, B0: MatrixOperator,
                  B1: MatrixOperator) -> MatrixOperator:
    """The (B0, B1)-relative [[0, -B0 C* B1*], [B1 C B0*, 0]] of A.

    B0 maps H0 to X, B1 maps H1 to Y.  B0* must have a bounded left-inverse;
    when one of B0, B1 is not a bijection the result is a proper descendant,
    when both are unitary it is the conjugate (B0 (+) B1) A (B0 (+) B1)*.
    """
    C = A.C
    rep0 = check_compatibility(C, B0)
    if not rep0.left_invertible:
        raise PreconditionError(
            "B0* has no bounded left-inverse (smallest weighted singular value "
            f"{rep0.smallest_singular_value:.3e} below cutoff); the relative "
            "construction hypothesis fails"
        )
    rep1 = check_compatibility(C.adjoint(), B1)
    if not rep1.dense_definedness:  # pragma: no cover - vacuous in finite dim
        raise PreconditionError("B1 is not compatible with C*")
    lower = B1 @ C @ B0.adjoint()
    upper = B0 @ C.adjoint() @ B1.adjoint()
    x, y = B0.codomain, B1.codomain
    space = direct_sum_tags([x, y])
    ent = np.zeros((space.dim, space.dim))
    ent[: x.dim, x.dim :] = -upper.to_dense()
    ent[x.dim :, : x.dim] = lower.to_dense()
    return MatrixOperator(ent, space, space)
