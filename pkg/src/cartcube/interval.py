"""The interval kit on the cube site: endpoints, boundary, diagonal,
pathobjects as dimension shifts, the root functor (right adjoint to the
pathobject), and the sliced interval with its generic point.

Pathobjects come in two implementations that are cross-validated: the
shift (precomposition with the successor functor, exact but one level
shorter) and the general exponential (intrinsic at all levels).  The shift
is the default wherever speed matters.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

from .cube import CubeMap, TruncatedCubeSite, build_site, compose as cube_compose
from .fincat import FinCat, SiteFunctor
from .nerve import ElementsCategory, slice_category, slice_object_mor
from .presheaf import (
    Exponential,
    NatTrans,
    Presheaf,
    ValidityUnderflow,
    compose_nat,
    coproduct,
    enumerate_nat_trans,
    exponential,
    identity_nat,
    inclusion_functor,
    iso_search,
    pair_into_product,
    precompose,
    product2,
    pullback,
    terminal,
    yoneda,
    yoneda_map,
)
from .report import FAIL, PASS, CheckReport, Stopwatch


@dataclass
class IntervalKit:
    site: TruncatedCubeSite
    I: Presheaf
    one: Presheaf
    delta0: NatTrans
    delta1: NatTrans
    boundary: NatTrans       # 1+1 -> I
    two: Presheaf            # 1+1
    diagonal: NatTrans       # I -> I×I
    I_squared: Presheaf

    def check_invariants(self) -> None:
        assert self.delta0.components != self.delta1.components
        assert self.boundary.is_mono()
        assert self.diagonal.is_mono()
        pb, _, _ = pullback(self.delta0, self.delta1)
        assert pb.is_empty(), "endpoints must have empty intersection"


def interval_kit(site: TruncatedCubeSite) -> IntervalKit:
    I = yoneda(site, 1)
    one = yoneda(site, 0)
    d0 = yoneda_map(site, site.map_id(CubeMap(0, 1, (0,))))
    d1 = yoneda_map(site, site.map_id(CubeMap(0, 1, (1,))))
    two, (i1, i2) = coproduct([one, one])
    boundary_comps = tuple(
        tuple([d0.components[o][0], d1.components[o][0]]) for o in range(len(one.sizes))
    )
    boundary = NatTrans(two, I, boundary_comps, label="boundary")
    I2, p1, p2 = product2(I, I)
    diag = pair_into_product(identity_nat(I), identity_nat(I), I2)
    kit = IntervalKit(site, I, one, d0, d1, boundary, two, diag, I2)
    kit.check_invariants()
    return kit


# -- shift machinery -----------------------------------------------------------


def successor_functor(N: int) -> SiteFunctor:
    """[n] -> [n+1], u -> u⊗id : the shift □≤(N-1) -> □≤N."""
    small, big = build_site(N - 1), build_site(N)
    obj_map = {n: n + 1 for n in range(N)}
    mor_map = {}
    for mid in small.all_mor_ids():
        u = small.cube_map(mid)
        shifted = CubeMap(
            u.src + 1,
            u.tgt + 1,
            tuple(u.src + 2 if e == u.src + 1 else e for e in u.entries) + (u.src + 1,),
        )
        mor_map[mid] = big.map_id(shifted)
    return SiteFunctor(small, big, obj_map, mor_map)


def restrict(X: Presheaf, N_new: int) -> Presheaf:
    """Restriction of a cube-site presheaf to a lower truncation."""
    site = X.site
    assert isinstance(site, TruncatedCubeSite)
    small = build_site(N_new)
    inc = inclusion_functor(small, site, {n: n for n in range(N_new + 1)})
    v = X.validity if X.validity is None else min(X.validity, N_new)
    out = precompose(X, inc, validity=v)
    out.label = X.label
    return out


def restrict_map(f: NatTrans, N_new: int) -> NatTrans:
    return NatTrans(
        restrict(f.source, N_new),
        restrict(f.target, N_new),
        f.components[: N_new + 1],
        label=f.label,
    )


def pathobject_shift(X: Presheaf) -> Presheaf:
    """X^I as a dimension shift: a presheaf on □≤(N-1), validity v-1."""
    site = X.site
    assert isinstance(site, TruncatedCubeSite)
    v = site.N if X.validity is None else X.validity
    if v < 1:
        raise ValidityUnderflow(f"pathobject of a presheaf with validity {v}")
    succ = successor_functor(site.N)
    out = precompose(X, succ, validity=v - 1)
    out.label = f"({X.label})^I"
    return out


def pathobject_shift_map(f: NatTrans) -> NatTrans:
    """f^I between shift pathobjects (drop the level-0 component)."""
    return NatTrans(
        pathobject_shift(f.source),
        pathobject_shift(f.target),
        f.components[1:],
        label=f"({f.label})^I",
    )


def endpoint_evaluation(X: Presheaf, eps: int) -> NatTrans:
    """ε_eps : X^I -> X|_(N-1), evaluation at the endpoint eps."""
    site = X.site
    assert isinstance(site, TruncatedCubeSite)
    PX = pathobject_shift(X)
    RX = restrict(X, site.N - 1)
    comps = []
    for n in range(site.N):
        last = 0 if eps == 0 else n + 1
        e = site.map_id(CubeMap(n, n + 1, tuple(range(1, n + 1)) + (last,)))
        comps.append(X.action[e])
    return NatTrans(PX, RX, tuple(comps), label=f"ev{eps}")


def pathobject_consistency_check(X: Presheaf, budget: Optional[int] = None) -> CheckReport:
    """The shift pathobject agrees with the general exponential X^I below
    the horizon (natural iso found by search)."""
    with Stopwatch() as sw:
        site = X.site
        assert isinstance(site, TruncatedCubeSite)
        kit_I = yoneda(site, 1)
        E = exponential(X, kit_I, budget=budget, validity_drop=1)
        lhs = restrict(E.presheaf, site.N - 1)
        rhs = pathobject_shift(X)
        iso = iso_search(lhs, rhs, budget)
    return CheckReport(
        "pathobject-consistency",
        params={"X": X.label, "trunc": site.N},
        verdict=PASS if iso is not None else FAIL,
        validity=rhs.validity,
        counters={"shift_cells": rhs.total_cells(), "exp_cells": lhs.total_cells()},
        witness=None if iso else {"shift_sizes": list(rhs.sizes), "exp_sizes": list(lhs.sizes)},
        wall_time=sw.elapsed,
    )


# -- the binomial identity -----------------------------------------------------


def check_binomial(N: int, budget: Optional[int] = None) -> CheckReport:
    """I^I is naturally isomorphic to I+1 at levels <= N-1, with levelwise
    count n+3 on both sides."""
    if N < 2:
        raise ValueError("binomial check needs truncation N >= 2")
    with Stopwatch() as sw:
        site = build_site(N)
        I = yoneda(site, 1)
        shift = pathobject_shift(I)
        small = build_site(N - 1)
        Ir = restrict(I, N - 1)
        oner = terminal(small)
        Iplus1, _ = coproduct([Ir, oner])
        counts_l = list(shift.sizes)
        counts_r = list(Iplus1.sizes)
        expected = [n + 3 for n in range(N)]
        iso = iso_search(shift, Iplus1, budget)
        ok = iso is not None and counts_l == expected and counts_r == expected
    rep = CheckReport(
        "binomial",
        params={"trunc": N},
        verdict=PASS if ok else FAIL,
        validity=N - 1,
        counters={"levels": N},
        details={"lhs_counts": counts_l, "rhs_counts": counts_r, "expected": expected},
        wall_time=sw.elapsed,
    )
    if not ok:
        rep.witness = {
            "lhs_counts": counts_l,
            "rhs_counts": counts_r,
            "expected": expected,
            "iso_found": iso is not None,
        }
    return rep


# -- the root functor ----------------------------------------------------------


@dataclass
class RootObject:
    base: Presheaf              # X over □≤N
    root: Presheaf              # X_I over □≤N
    tables: dict[int, list[NatTrans]]   # carrier cells: maps shift(y[n]) -> X|

    def formula_counts(self) -> list[int]:
        """The binomial product formula: |X_I(n)| = Π_k |X_k|^C(n,k)."""
        X = self.base
        out = []
        for n in range(len(self.root.sizes)):
            total = 1
            for k in range(n + 1):
                total *= X.sizes[k] ** comb(n, k)
            out.append(total)
        return out


def root(X: Presheaf, budget: Optional[int] = None) -> RootObject:
    """X_I with X_I(n) = Nat(shift(y[n]), X|_(N-1)): the right adjoint of
    the shift pathobject, computed through the audited nat-trans kernel."""
    site = X.site
    assert isinstance(site, TruncatedCubeSite)
    N = site.N
    if N < 1:
        raise ValidityUnderflow("root needs truncation >= 1")
    Xr = restrict(X, N - 1)
    tables: dict[int, list[NatTrans]] = {}
    shifted_y = {}
    for n in range(N + 1):
        shifted_y[n] = pathobject_shift(yoneda(site, n))
        tables[n] = enumerate_nat_trans(shifted_y[n], Xr, budget=budget, var_order="desc")
    index = {n: {nt.components: i for i, nt in enumerate(tables[n])} for n in tables}
    sizes = tuple(len(tables[n]) for n in range(N + 1))
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        yu = pathobject_shift_map(yoneda_map(site, mid))  # shift(y[src]) -> shift(y[tgt])
        col = []
        for nt in tables[m.tgt]:
            col.append(index[m.src][compose_nat(nt, yu).components])
        action[mid] = tuple(col)
    v = site.N if X.validity is None else X.validity
    R = Presheaf(site, sizes, action, validity=max(v - 1, 0), label=f"({X.label})_I")
    return RootObject(X, R, tables)


def transpose_to_root(f: NatTrans, A: Presheaf, R: RootObject) -> NatTrans:
    """The adjunction transpose of f: shift(A) -> X| into A -> X_I."""
    site = A.site
    assert isinstance(site, TruncatedCubeSite)
    N = site.N
    index = {n: {nt.components: i for i, nt in enumerate(R.tables[n])} for n in R.tables}
    comps = []
    for n in range(N + 1):
        col = []
        for a in range(A.sizes[n]):
            # the natural map shift(y[n]) -> X|: at level d, cell g: [d+1]->[n]
            sub = []
            for d in range(N):
                row = []
                for g in site.hom(d + 1, n):
                    # A(g)(a) lands in A(d+1) = shift(A)(d)
                    row.append(f.components[d][A.action[g][a]])
                sub.append(tuple(row))
            col.append(index[n][tuple(sub)])
        comps.append(tuple(col))
    return NatTrans(A, R.root, tuple(comps), label="root-transpose")


def transpose_from_root(g: NatTrans, A: Presheaf, R: RootObject) -> NatTrans:
    """The inverse transpose of g: A -> X_I into shift(A) -> X|."""
    site = A.site
    assert isinstance(site, TruncatedCubeSite)
    N = site.N
    shiftA = pathobject_shift(A)
    Xr = restrict(R.base, N - 1)
    comps = []
    for d in range(N):
        col = []
        # identity of [d+1] sits in shift(y[d+1])(d) = hom([d+1],[d+1])
        id_pos = site.hom(d + 1, d + 1).index(site.identity(d + 1))
        for a in range(A.sizes[d + 1]):
            nt = R.tables[d + 1][g.components[d + 1][a]]
            col.append(nt.components[d][id_pos])
        comps.append(tuple(col))
    return NatTrans(shiftA, Xr, tuple(comps), label="root-untranspose")


def check_root_counts(X: Presheaf, budget: Optional[int] = None) -> CheckReport:
    """Root carrier sizes against the binomial product formula (exact at
    levels <= N-1; the top level is reported but not asserted)."""
    with Stopwatch() as sw:
        site = X.site
        assert isinstance(site, TruncatedCubeSite)
        R = root(X, budget)
        actual = list(R.root.sizes)
        expected = R.formula_counts()
        horizon = R.root.validity if R.root.validity is not None else site.N
        ok = actual[: horizon + 1] == expected[: horizon + 1]
    rep = CheckReport(
        "root-counts",
        params={"X": X.label, "trunc": site.N},
        verdict=PASS if ok else FAIL,
        validity=horizon,
        counters={"cells": sum(actual)},
        details={"actual": actual, "formula": expected, "asserted_levels": horizon + 1},
        wall_time=sw.elapsed,
    )
    if not ok:
        rep.witness = {"actual": actual, "formula": expected}
    return rep


def check_root_adjunction(X: Presheaf, Y: Presheaf, budget: Optional[int] = None) -> CheckReport:
    """|Hom(X^I, Y|)| = |Hom(X, Y_I)| with mutually inverse transposes."""
    with Stopwatch() as sw:
        site = X.site
        assert isinstance(site, TruncatedCubeSite)
        N = site.N
        R = root(Y, budget)
        shiftX = pathobject_shift(X)
        Yr = restrict(Y, N - 1)
        lhs = enumerate_nat_trans(shiftX, Yr, budget=budget, var_order="desc")
        rhs = enumerate_nat_trans(X, R.root, budget=budget, var_order="desc")
        ok = len(lhs) == len(rhs)
        inverse_ok = True
        for f in lhs:
            up = transpose_to_root(f, X, R)
            back = transpose_from_root(up, X, R)
            if back.components != f.components:
                inverse_ok = False
                break
        if inverse_ok:
            for g in rhs:
                down = transpose_from_root(g, X, R)
                back = transpose_to_root(down, X, R)
                if back.components != g.components:
                    inverse_ok = False
                    break
    rep = CheckReport(
        "root-adjunction",
        params={"X": X.label, "Y": Y.label, "trunc": site.N},
        verdict=PASS if (ok and inverse_ok) else FAIL,
        validity=N - 1,
        counters={"lhs": len(lhs), "rhs": len(rhs)},
        wall_time=sw.elapsed,
    )
    if rep.verdict == FAIL:
        rep.witness = {"lhs": len(lhs), "rhs": len(rhs), "transposes_inverse": inverse_ok}
    return rep


# -- the sliced interval -------------------------------------------------------


@dataclass
class SlicedInterval:
    """□≤N/[1] with the pulled-back interval and its generic point."""

    N: int
    site: ElementsCategory           # □≤N/[1]
    interval: Presheaf               # I*I as a presheaf on the slice site
    generic_point: NatTrans          # 1 -> I*I

    def pull_presheaf(self, X: Presheaf) -> Presheaf:
        """I*X: the constant-along-fibers pullback of a cube-site presheaf."""
        S = self.site
        sizes = tuple(X.sizes[c] for (c, _x) in S.objects)
        action = {m.mid: X.action[m.payload[0]] for m in S.mors}
        out = Presheaf(S, sizes, action, validity=X.validity, label=f"I*({X.label})")
        return out

    def pull_map(self, f: NatTrans) -> NatTrans:
        src = self.pull_presheaf(f.source)
        tgt = self.pull_presheaf(f.target)
        comps = tuple(f.components[c] for (c, _x) in self.site.objects)
        return NatTrans(src, tgt, comps, label=f"I*({f.label})")


def sliced_interval(N: int) -> SlicedInterval:
    base = build_site(N)
    S = slice_category(base, 1)
    I = yoneda(base, 1)
    II = SlicedInterval(N, S, None, None)  # type: ignore[arg-type]
    interval = II.pull_presheaf(I)
    interval.label = "I*I"
    one = terminal(S)
    comps = []
    for idx, (n, cell) in enumerate(S.objects):
        comps.append((cell,))  # the generic point picks the indexing map itself
    gp = NatTrans(one, interval, tuple(comps), label="generic-point")
    gp.check_natural()
    II.interval = interval
    II.generic_point = gp
    return II


def slice_successor_functor(N: int) -> SiteFunctor:
    """(n, i) -> (n+1, i∘p) on slice sites, p the last-variable projection."""
    small = slice_category(build_site(N - 1), 1)
    big = slice_category(build_site(N), 1)
    base_small, base_big = build_site(N - 1), build_site(N)
    obj_map = {}
    for idx, (n, cell) in enumerate(small.objects):
        i_map = base_small.cube_map(slice_object_mor(small, idx))
        p = CubeMap(n + 1, n, tuple(range(1, n + 1)))
        ip = cube_compose(i_map, p)
        big_cell = yoneda(base_big, 1).cell_data[n + 1].index(base_big.map_id(ip))
        obj_map[idx] = big.obj_index[(n + 1, big_cell)]
    mor_map = {}
    for m in small.mors:
        u_mid, c_obj, x_obj = m.payload
        u = base_small.cube_map(u_mid)
        u_shift = CubeMap(
            u.src + 1,
            u.tgt + 1,
            tuple(u.src + 2 if e == u.src + 1 else e for e in u.entries) + (u.src + 1,),
        )
        tgt_big = obj_map[m.tgt]
        n2, cell2 = big.objects[tgt_big]
        mor_map[m.mid] = big.mor_by_payload(
            obj_map[m.src], tgt_big, (base_big.map_id(u_shift), n2, cell2)
        )
    return SiteFunctor(small, big, obj_map, mor_map)


def slice_pathobject(X: Presheaf, N: int, succ: Optional[SiteFunctor] = None) -> Presheaf:
    """X^(I*I) over the reduced slice site, by the slice shift."""
    if succ is None:
        succ = slice_successor_functor(N)
    v = X.validity if X.validity is not None else N
    if v < 1:
        raise ValidityUnderflow("slice pathobject needs validity >= 1")
    out = precompose(X, succ, validity=v - 1)
    out.label = f"({X.label})^II"
    return out


def slice_restrict(X: Presheaf, N: int, small: Optional[ElementsCategory] = None) -> Presheaf:
    """Restrict a slice-site presheaf from □≤N/[1] to □≤(N-1)/[1]."""
    big_site = X.site
    if small is None:
        small = slice_category(build_site(N - 1), 1)
    base_small, base_big = build_site(N - 1), build_site(N)
    obj_map = {}
    for idx, (n, cell) in enumerate(small.objects):
        i_map = base_small.cube_map(slice_object_mor(small, idx))
        big_cell = yoneda(base_big, 1).cell_data[n].index(base_big.map_id(i_map))
        obj_map[idx] = big_site.obj_index[(n, big_cell)]
    mor_map = {}
    for m in small.mors:
        u_mid, c_obj, x_obj = m.payload
        u = base_small.cube_map(u_mid)
        tgt_big = obj_map[m.tgt]
        n2, cell2 = big_site.objects[tgt_big]
        mor_map[m.mid] = big_site.mor_by_payload(
            obj_map[m.src], tgt_big, (base_big.map_id(u), n2, cell2)
        )
    F = SiteFunctor(small, big_site, obj_map, mor_map)
    v = X.validity if X.validity is None else min(X.validity, N - 1)
    out = precompose(X, F, validity=v)
    out.label = X.label
    return out


def generic_point_instantiation_check(N: int) -> CheckReport:
    """Pulling the generic point back along δ_ε recovers the endpoint δ_ε:
    at the slice object (0, ε), the generic point is the cell δ_ε ∈ I(0)."""
    with Stopwatch() as sw:
        SI = sliced_interval(N)
        base = build_site(N)
        I = yoneda(base, 1)
        ok = True
        details = {}
        for eps in (0, 1):
            cell = I.cell_data[0].index(base.map_id(CubeMap(0, 1, (0,) if eps == 0 else (1,))))
            obj = SI.site.obj_index[(0, cell)]
            got = SI.generic_point.components[obj][0]
            details[f"eps{eps}"] = {"expected": cell, "got": got}
            if got != cell:
                ok = False
    return CheckReport(
        "generic-point-endpoints",
        params={"trunc": N},
        verdict=PASS if ok else FAIL,
        details=details,
        wall_time=sw.elapsed,
    )


# -- generic root machinery (any tiny object given by a shift functor) ----------


@dataclass
class KanRoot:
    """The right adjoint to precomposition with a shift functor succ:
    S' -> S, with decodable carrier cells."""

    succ: SiteFunctor
    root: Presheaf                       # over S
    tables: dict[int, list[NatTrans]]    # e -> maps (y_S(e)∘succ) -> Y

    def shifted_yoneda(self, e: int) -> Presheaf:
        big = self.succ.target
        return precompose(yoneda(big, e), self.succ, validity=None)


def kan_root(Y: Presheaf, succ: SiteFunctor, budget: Optional[int] = None) -> KanRoot:
    """Y_T over S for Y over S': carrier at e is Nat(y_S(e)∘succ, Y)."""
    small, big = succ.source, succ.target
    assert Y.site is small
    tables: dict[int, list[NatTrans]] = {}
    shifted = {}
    for e in range(len(big.objects)):
        shifted[e] = precompose(yoneda(big, e), succ, validity=None)
        tables[e] = enumerate_nat_trans(shifted[e], Y, budget=budget, var_order="desc")
    index = {e: {nt.components: i for i, nt in enumerate(tables[e])} for e in tables}
    sizes = tuple(len(tables[e]) for e in range(len(big.objects)))
    action: dict[int, tuple[int, ...]] = {}
    for mid in big.all_mor_ids():
        m = big.mors[mid]
        yu = yoneda_map(big, mid)
        yu_shift = NatTrans(
            shifted[m.src], shifted[m.tgt],
            tuple(yu.components[succ.obj_map[o]] for o in range(len(small.objects))),
        )
        col = []
        for nt in tables[m.tgt]:
            col.append(index[m.src][compose_nat(nt, yu_shift).components])
        action[mid] = tuple(col)
    v = None if (big.trunc is None or Y.validity is None) else Y.validity
    R = Presheaf(big, sizes, action, validity=v, label=f"root({Y.label})")
    return KanRoot(succ, R, tables)


def kan_root_map(R_src: KanRoot, R_tgt: KanRoot, g: NatTrans) -> NatTrans:
    """g_T : Y_T -> Z_T for g: Y -> Z over S'."""
    comps = []
    for e in range(len(R_src.root.sizes)):
        idx = {nt.components: i for i, nt in enumerate(R_tgt.tables[e])}
        col = []
        for nt in R_src.tables[e]:
            col.append(idx[compose_nat(g, nt).components])
        comps.append(tuple(col))
    return NatTrans(R_src.root, R_tgt.root, tuple(comps), label="root(g)")


def kan_transpose_in(f: NatTrans, A: Presheaf, R: KanRoot) -> NatTrans:
    """Hom(A∘succ, Y) -> Hom(A, Y_T)."""
    succ = R.succ
    small, big = succ.source, succ.target
    index = {e: {nt.components: i for i, nt in enumerate(R.tables[e])} for e in R.tables}
    y_cells = {e: yoneda(big, e).cell_data for e in range(len(big.objects))}
    comps = []
    for e in range(len(big.objects)):
        col = []
        for a in range(A.sizes[e]):
            sub = []
            for o in range(len(small.objects)):
                row = []
                for g in y_cells[e][succ.obj_map[o]]:
                    row.append(f.components[o][A.action[g][a]])
                sub.append(tuple(row))
            col.append(index[e][tuple(sub)])
        comps.append(tuple(col))
    return NatTrans(A, R.root, tuple(comps), label="kan-transpose")


def kan_unit(X: Presheaf, succ: SiteFunctor, R: KanRoot) -> NatTrans:
    """η: X -> (X∘succ)_T, the unit of the adjunction."""
    shifted = precompose(X, succ, validity=None)
    return kan_transpose_in(identity_nat(shifted), X, R)
