"""Structural-identity verification suite.

Each check rebuilds the objects it audits from scratch, measures a
residual, and compares it against the tolerance that the identity is
supposed to satisfy.  The CLI `verify` command runs them all (optionally
filtered by substring) and prints one PASS/FAIL line per check.

Grid sizes can be capped for constrained environments through the
PROTOFIELD_MAX_GRID environment variable (maximum points per axis).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import catalog
from .flatgrid import Axis, TensorFieldSpace, TensorStack, build_div, build_nabla, build_stack_skew
from .linops import (
    MatrixOperator,
    SpaceTag,
    make_block_skew,
    make_relative,
    skew_defect,
    verify_adjoint_theorem,
)
from .matlaw import MaterialLaw, check_wellposed
from .evolve import (
    CRANK_NICOLSON,
    SolverConfig,
    causality_check,
    dissipation_check,
    solve,
    solve_reduced,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tol: float
    passed: bool
    detail: str = ""


def _max_grid():
    v = os.environ.get("PROTOFIELD_MAX_GRID")
    return int(v) if v else None


def _cap(n):
    cap = _max_grid()
    return n if cap is None else max(2, min(n, cap))


def _result(name, residual, tol, detail=""):
    return CheckResult(name=name, residual=float(residual), tol=tol,
                       passed=bool(residual <= tol), detail=detail)


# ---------------------------------------------------------------------------


def check_adjointness():
    """<nabla u, v> + <u, div v> = 0 over random fields, grids and ranks."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    grids = [
        (Axis.interval(_cap(8)),),
        (Axis.interval(_cap(5)), Axis.torus(_cap(4))),
        (Axis.torus(_cap(4)), Axis.torus(_cap(4)), Axis.interval(_cap(4))),
    ]
    count = 0
    for axes in grids:
        for rank in range(3):
            space = TensorFieldSpace(axes, rank)
            nab = build_nabla(space)
            div = build_div(TensorFieldSpace(axes, rank + 1))
            w0 = space.tag.weight
            w1 = nab.codomain.weight
            for _ in range(12):
                u = rng.standard_normal(space.dim)
                v = rng.standard_normal(nab.codomain.dim)
                num = abs(np.sum(w1 * nab.apply(u) * v) + np.sum(w0 * u * div.apply(v)))
                den = np.sqrt(np.sum(w0 * u * u)) * np.sqrt(np.sum(w1 * v * v))
                worst = max(worst, num / den)
                count += 1
    return _result("adjointness", worst, 1e-12, f"{count} random field pairs")


def check_skewness():
    """The stack operator and every catalog entry are skew-selfadjoint."""
    axes = (Axis.torus(_cap(4)), Axis.interval(_cap(4)), Axis.torus(_cap(4)))
    stack = TensorStack(axes, 3)
    worst = skew_defect(build_stack_skew(stack).as_matrix())
    names = []
    for entry in catalog.all_entries(max_points=_max_grid()):
        scale = max(entry.a.max_abs(), 1.0)
        worst = max(worst, skew_defect(entry.a) / scale)
        names.append(entry.name)
    return _result("skewness", worst, 1e-12, f"stack + {len(names)} catalog entries")


def check_compatibility_theorem():
    """(C B*)* = B C* for 50 random pairs with random weights."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        d0, d1, dx = rng.integers(1, 9, size=3)
        t0 = SpaceTag("h0", d0, rng.uniform(0.5, 2.0, d0))
        t1 = SpaceTag("h1", d1, rng.uniform(0.5, 2.0, d1))
        tx = SpaceTag("x", dx, rng.uniform(0.5, 2.0, dx))
        C = MatrixOperator(rng.standard_normal((d1, d0)), t0, t1)
        B = MatrixOperator(rng.standard_normal((dx, d0)), t0, tx)
        lhs = (C @ B.adjoint()).adjoint()
        rhs = B @ C.adjoint()
        scale = max(rhs.max_abs(), 1.0)
        worst = max(worst, (lhs - rhs).max_abs() / scale)
        assert verify_adjoint_theorem(C, B, 1e-12 * scale)
    return _result("compatibility_theorem", worst, 1e-12, "50 random (C, B) pairs")


def _random_partial_isometry(rng, tag_from, dim_to, name):
    m = rng.standard_normal((tag_from.dim, tag_from.dim))
    q, _ = np.linalg.qr(m)
    sw = np.sqrt(tag_from.weight)
    tag_to = SpaceTag(name, dim_to)
    ent = q[:, :dim_to].T * sw[None, :]
    return MatrixOperator(ent, tag_from, tag_to)


def check_relative_construction():
    """Relatives of block-skew operators stay skew; unitary pairs conjugate."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in range(50):
        d0, d1 = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        t0 = SpaceTag("h0", d0, rng.uniform(0.5, 2.0, d0))
        t1 = SpaceTag("h1", d1, rng.uniform(0.5, 2.0, d1))
        C = MatrixOperator(rng.standard_normal((d1, d0)), t0, t1)
        A = make_block_skew(C)
        x_dim = int(rng.integers(1, d0 + 1))
        y_dim = int(rng.integers(1, d1 + 1))
        B0 = _random_partial_isometry(rng, t0, x_dim, "x")
        B1 = _random_partial_isometry(rng, t1, y_dim, "y")
        rel = make_relative(A, B0, B1)
        scale = max(rel.max_abs(), 1.0)
        worst = max(worst, skew_defect(rel) / scale)
        if x_dim == d0 and y_dim == d1:
            u = np.zeros((d0 + d1, d0 + d1))
            u[:x_dim, :d0] = B0.to_dense()
            u[x_dim:, d0:] = B1.to_dense()
            big = MatrixOperator(
                u,
                A.as_matrix().domain,
                rel.domain,
            )
            conj = big @ A.as_matrix() @ big.adjoint()
            worst = max(worst, (conj - rel).max_abs() / scale)
    return _result("relative_construction", worst, 1e-12, "50 random isometry pairs")


def check_curl_identification():
    axes = (Axis.torus(_cap(4)),) * 3
    entry = catalog.maxwell(axes)
    np_ = entry.blocks[0][1] // 3
    lower = entry.a.to_dense()[3 * np_:, : 3 * np_]
    from .catalog import _asym_perm, _partials, SQRT2

    P = _partials(axes)
    Z = np.zeros_like(P[0])
    curl = np.block([[Z, -P[2], P[1]], [P[2], Z, -P[0]], [-P[1], P[0], Z]])
    direct = (1.0 / SQRT2) * np.kron(_asym_perm(), np.eye(np_)) @ curl
    res = float(np.abs(lower - direct).max())
    return _result("curl_identification", res, 1e-14, "descended vs stencil curl")


def check_annihilation():
    axes = (Axis.torus(_cap(4)),) * 3
    entry = catalog.extended_maxwell(axes)
    c = entry.extras["curl_part"].to_dense()
    g = entry.extras["graddiv_part"].to_dense()
    scale = max(np.abs(c).max() * np.abs(g).max(), 1.0)
    res = max(np.abs(c @ g).max(), np.abs(g @ c).max()) / scale
    return _result("annihilation", res, 1e-12, "two spatial parts, periodic, M0 = I")


def check_dirac_equivalence():
    axes = (Axis.torus(_cap(4)),) * 3
    entry = catalog.dirac(axes)
    np_ = entry.blocks[0][1]
    dim4 = 4 * np_
    from .catalog import _chiral_m1, _dirac_permutations

    u1, u2 = _dirac_permutations()
    Id = np.eye(np_)
    U = np.zeros((2 * dim4, 2 * dim4))
    U[:dim4, :dim4] = np.kron(u1, Id)
    U[dim4:, dim4:] = np.kron(u2, Id)
    conj = U @ entry.a.to_dense() @ U.T
    ext = catalog.extended_maxwell(axes, skew_stencils=True)
    target = ext.a.to_dense() + _chiral_m1(axes)
    scale = max(np.abs(target).max(), 1.0)
    res = float(np.abs(conj - target).max()) / scale

    # spectra agree on the small grid (conjugation preserves eigenvalues)
    axes2 = (Axis.torus(2),) * 3
    d2 = catalog.dirac(axes2)
    e2 = catalog.extended_maxwell(axes2, skew_stencils=True)
    ev1 = np.sort_complex(np.linalg.eigvals(d2.a.to_dense()))
    ev2 = np.sort_complex(np.linalg.eigvals(e2.a.to_dense() + _chiral_m1(axes2)))
    spec_res = float(np.abs(ev1 - ev2).max())
    passed = res <= 1e-12 and spec_res <= 1e-8
    return CheckResult(name="dirac_equivalence", residual=res, tol=1e-12,
                       passed=passed,
                       detail=f"conjugation {res:.2e}, spectra {spec_res:.2e} (tol 1e-8)")


def check_schur_equivalence():
    """Full solve vs reduced-plus-reconstructed solve on kernel-bearing systems."""
    worst = 0.0
    # acoustics on the torus (constants in the kernel)
    ac = catalog.acoustics((Axis.torus(_cap(8)),))
    rng = np.random.default_rng(5)
    u0 = rng.standard_normal(ac.dim)
    cfg = SolverConfig(tau=0.01, t_end=2.0, scheme=CRANK_NICOLSON)
    full = solve(ac.problem(initial=u0), cfg)
    red = solve_reduced(ac.problem(initial=u0), cfg)
    scale = max(np.abs(full.states).max(), 1.0)
    worst = max(worst, np.abs(full.states - red.states).max() / scale)
    # heat with a kernel
    ht = catalog.heat((Axis.torus(_cap(8)),))
    u0 = rng.standard_normal(ht.dim)
    full = solve(ht.problem(initial=u0), cfg)
    red = solve_reduced(ht.problem(initial=u0), cfg)
    scale = max(np.abs(full.states).max(), 1.0)
    worst = max(worst, np.abs(full.states - red.states).max() / scale)
    return _result("schur_equivalence", worst, 1e-10, "200 steps, two systems")


def check_dimension_reduction():
    mismatch, iso, op_defect = catalog.verify_dimension_reduction(
        n_line=_cap(8), n_torus=_cap(4))
    detail = f"solve {mismatch:.2e}, isometry {iso:.2e} (tol 1e-13), operator {op_defect:.2e}"
    passed = mismatch <= 1e-10 and iso <= 1e-13 and op_defect <= 1e-12
    return CheckResult(name="dimension_reduction", residual=mismatch, tol=1e-10,
                       passed=passed, detail=detail)


def check_even_odd_transport():
    entry = catalog.transport((Axis.symmetric(_cap(16), 4.0 / _cap(16)),))
    ok = catalog.verify_transport_equivalence(entry)
    return _result("even_odd_transport", 0.0 if ok else 1.0, 1e-12,
                   "combined vs split solve")


def check_second_order_forms():
    rm = catalog.reissner_mindlin((Axis.interval(_cap(8)), Axis.interval(_cap(8))),
                                  d=0.3)
    res_rm = catalog.verify_second_order_form(rm)
    tb = catalog.timoshenko((Axis.interval(_cap(16)),), d=0.2)
    res_tb = catalog.verify_second_order_form(tb)
    return _result("second_order_forms", max(res_rm, res_tb), 1e-8,
                   f"plate {res_rm:.2e}, beam {res_tb:.2e}")


def check_polar_decomposition():
    worst = 0.0
    for n in (8, 16, 32):
        G = build_nabla(TensorFieldSpace((Axis.interval(_cap(n)),), 0))
        U, absG = catalog.polar_decompose(G)
        rebuilt = (U @ absG).to_dense()
        worst = max(worst, np.abs(G.to_dense() - rebuilt).max())
    reports = [catalog.second_order_wave_relative((Axis.interval(_cap(12)),), eps)
               for eps in (0.25, 1.0)]
    wave_res = max(
        max(r.conjugation_residual, r.unitarity_residual, r.adjoint_swap_residual,
            r.s_isometry_residual, r.material_transform_residual)
        for r in reports
    )
    return _result("polar_decomposition", max(worst, wave_res), 1e-10,
                   f"polar {worst:.2e}, wave identities {wave_res:.2e}")


def check_energy_conservation():
    worst = 0.0
    cfg = SolverConfig(tau=0.01, t_end=10.0, scheme=CRANK_NICOLSON)
    rng = np.random.default_rng(3)
    systems = [
        catalog.acoustics((Axis.interval(_cap(16)),)),
        catalog.maxwell((Axis.torus(_cap(3)),) * 3),
        catalog.reissner_mindlin((Axis.interval(_cap(6)), Axis.interval(_cap(6)))),
    ]
    for entry in systems:
        u0 = rng.standard_normal(entry.dim)
        traj = solve(entry.problem(initial=u0), cfg)
        drift = np.abs(traj.energies - traj.energies[0]).max() / max(traj.energies[0], 1e-30)
        worst = max(worst, drift)
    # dissipative variant must decrease strictly
    damped = catalog.acoustics((Axis.interval(_cap(16)),), sigma=0.5)
    u0 = rng.standard_normal(damped.dim)
    traj = solve(damped.problem(initial=u0), cfg)
    rep = dissipation_check(traj, damped.law)
    if not rep.monotone or not rep.holds:
        worst = max(worst, 1.0)
    return _result("energy_conservation", worst, 1e-10,
                   "1000 CN steps; conservative drift + dissipation identity")


def check_causality():
    cap = _max_grid()
    worst = 0.0
    for entry in catalog.all_entries(max_points=min(cap, 3) if cap else 3):
        sl = entry.block_slices()
        first = entry.blocks[0][0]
        pulse = np.zeros(entry.dim)
        pulse[sl[first]] = 1.0

        def forcing(t, pulse=pulse):
            return pulse if t >= 0.5 else np.zeros_like(pulse)

        cfg = SolverConfig(tau=0.05, t_end=1.0, scheme=CRANK_NICOLSON)
        ok = causality_check(entry.problem(forcing=forcing), cfg, t0=0.5)
        if not ok:
            worst = max(worst, 1.0)
    return _result("causality", worst, 1e-13, "all entries, onset at t = 0.5")


def check_wellposedness_gate():
    ht = catalog.heat((Axis.interval(8),))
    rep = check_wellposed(ht.law)
    ok = rep.passed and rep.c0_estimate > 0
    # the degenerate pair must fail through the kernel block
    tag = SpaceTag("toy", 2)
    m0 = MatrixOperator(np.diag([1.0, 0.0]), tag, tag)
    m1 = MatrixOperator(np.zeros((2, 2)), tag, tag)
    bad = check_wellposed(MaterialLaw(m0=m0, m1=m1))
    ok = ok and (not bad.passed) and (not bad.kernel_block_positive)
    return _result("wellposedness_gate", 0.0 if ok else 1.0, 0.5,
                   f"heat passes (c0 = {rep.c0_estimate:.3f}); degenerate law fails")


CHECKS = [
    check_adjointness,
    check_skewness,
    check_compatibility_theorem,
    check_relative_construction,
    check_curl_identification,
    check_annihilation,
    check_dirac_equivalence,
    check_schur_equivalence,
    check_dimension_reduction,
    check_even_odd_transport,
    check_second_order_forms,
    check_polar_decomposition,
    check_energy_conservation,
    check_causality,
    check_wellposedness_gate,
]


def run_checks(name_filter=None):
    results = []
    for fn in CHECKS:
        name = fn.__name__.removeprefix("check_")
        if name_filter and name_filter not in name:
            continue
        results.append(fn())
    return results
