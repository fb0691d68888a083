"""The fibration weak factorization system: pushout-products, pullback-homs,
generating trivial cofibrations (biased and unbiased), uniform fibration
structures cross-validated through two independent routes, the bounded
small-object factorization, and the classifying types for trivial-fibration
and fibration structures.

Truncated fibrancy is one-directionally sound: a refutation at valid levels
refutes ambient fibrancy; a pass does not prove it.  Every fibration report
carries this caveat.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .budget import BudgetCounter, BudgetExceeded
from .cube import CubeMap, TruncatedCubeSite, build_site
from .cofib import (
    BasicFamily,
    CofibrationClass,
    Generator,
    UniformStructure,
    all_monos_class,
    basic_lifting_check,
    is_trivial_fibration,
    map_to_slice,
    plus_object,
    slice_to_total,
    class_on_elements,
    trivial_fibration_structure,
    uniform_structure_search,
    _flat_cells,
)
from .fincat import FinCat, SiteFunctor
from .interval import (
    KanRoot,
    SlicedInterval,
    kan_root,
    kan_root_map,
    kan_unit,
    slice_restrict,
    slice_successor_functor,
    sliced_interval,
)
from .nerve import ElementsCategory, elements, slice_category, slice_object_mor
from .presheaf import (
    Exponential,
    NatTrans,
    Presheaf,
    Subobject,
    compose_nat,
    enumerate_nat_trans,
    exponential,
    exponential_post,
    exponential_pre,
    finite_colimit,
    finite_limit,
    identity_nat,
    induced_from_colimit,
    induced_into_limit,
    precompose,
    product2,
    pushforward,
    terminal,
    yoneda,
)
from .report import BUDGET, FAIL, PASS, CheckReport, Stopwatch

TRUNCATION_CAVEAT = (
    "truncated verdict: a refutation at valid levels refutes ambient "
    "fibrancy; a pass does not prove it"
)


# -- Leibniz constructions -------------------------------------------------------


def pushout_product(a: NatTrans, b: NatTrans) -> NatTrans:
    """a⊗b : (A0×B1) +_(A0×B0) (A1×B0) -> A1×B1."""
    A0, A1 = a.source, a.target
    B0, B1 = b.source, b.target
    P01, _, _ = product2(A0, B1)
    P10, _, _ = product2(A1, B0)
    P00, _, _ = product2(A0, B0)
    P11, _, _ = product2(A1, B1)
    idA0, idA1 = identity_nat(A0), identity_nat(A1)
    idB0, idB1 = identity_nat(B0), identity_nat(B1)
    from .presheaf import product_of_maps

    top = product_of_maps(idA0, b, P00, P01)      # A0×B0 -> A0×B1
    left = product_of_maps(a, idB0, P00, P10)     # A0×B0 -> A1×B0
    Q, injs = finite_colimit(
        {"x": P01, "y": P10, "z": P00},
        [("z", "x", top), ("z", "y", left)],
    )
    legs = {
        "x": product_of_maps(a, idB1, P01, P11),
        "y": product_of_maps(idA1, b, P10, P11),
        "z": product_of_maps(a, b, P00, P11),
    }
    out = induced_from_colimit(Q, injs, legs)
    out.label = "pushout-product"
    return out


def pullback_hom(u: NatTrans, f: NatTrans, budget: Optional[int] = None) -> NatTrans:
    """u ⇒ f : X^B -> X^A ×_(Y^A) Y^B for u: A -> B and f: X -> Y."""
    A, B = u.source, u.target
    X, Y = f.source, f.target
    EXB = exponential(X, B, budget)
    EXA = exponential(X, A, budget)
    EYB = exponential(Y, B, budget)
    EYA = exponential(Y, A, budget)
    restr_X = exponential_pre(EXB, EXA, u)        # X^B -> X^A
    restr_Y = exponential_pre(EYB, EYA, u)        # Y^B -> Y^A
    post_A = exponential_post(EXA, EYA, f)        # X^A -> Y^A
    post_B = exponential_post(EXB, EYB, f)        # X^B -> Y^B
    L, projs = finite_limit(
        {"xa": EXA.presheaf, "yb": EYB.presheaf, "ya": EYA.presheaf},
        [("xa", "ya", post_A), ("yb", "ya", restr_Y)],
    )
    out = induced_into_limit(
        L, projs,
        {"xa": restr_X, "yb": post_B, "ya": compose_nat(post_A, restr_X)},
    )
    out.label = "pullback-hom"
    return out


# -- generating trivial cofibrations ----------------------------------------------


@dataclass(frozen=True)
class GeneratingTrivialCofibration:
    """c ⊗_i δ : I^n +_C (C×I) ↣ I^(n+1) in subobject form: the union of
    the graph of i with the cylinder over C."""

    n: int
    c_index: int          # index into basic cofibrations of y[n]
    i_mid: int            # site morphism id of i: [n] -> [1]
    sub: Subobject        # of y[n+1]


def _box_subobject(
    site: TruncatedCubeSite, cls: CofibrationClass, n: int, c: Subobject, i_mid: int
) -> Subobject:
    """graph(i) ∨ (C×I) inside y[n+1]: a cell w: [d] -> [n+1] is in when its
    first n coordinates land in C, or its last coordinate equals i∘π(w)."""
    y_n1 = yoneda(site, n + 1)
    y_n = yoneda(site, n)
    i_map = site.cube_map(i_mid)
    c_sets = [set(ms) for ms in c.members]
    members = []
    for d in range(len(site.objects)):
        mem = []
        for pos, wmid in enumerate(y_n1.cell_data[d]):
            w = site.cube_map(wmid)
            pi_w = CubeMap(d, n, w.entries[:n])
            last = CubeMap(d, 1, (w.entries[n],))
            in_cyl = y_n.cell_data[d].index(site.map_id(pi_w)) in c_sets[d]
            from .cube import compose as ccompose
            in_graph = ccompose(i_map, pi_w).entries == last.entries
            if in_cyl or in_graph:
                mem.append(pos)
        members.append(tuple(mem))
    return Subobject(y_n1, tuple(members))


def enumerate_generators(
    site: TruncatedCubeSite,
    cls: CofibrationClass,
    mode: str = "unbiased",
    budget: Optional[int] = None,
) -> list[GeneratingTrivialCofibration]:
    """Basic generating trivial cofibrations c ⊗_i δ with n+1 <= N, in
    canonical (n, c, i) order.  Biased mode keeps only constant indexings."""
    gens = []
    for n in range(site.N):
        basics = cls.basic_cofibrations(n, budget)
        for c_idx, c in enumerate(basics):
            for i_mid in site.hom(n, 1):
                i_map = site.cube_map(i_mid)
                if mode == "biased" and any(1 <= e <= n for e in i_map.entries):
                    continue
                gens.append(GeneratingTrivialCofibration(
                    n, c_idx, i_mid, _box_subobject(site, cls, n, c, i_mid)
                ))
    return gens


def fib_family(
    site: TruncatedCubeSite,
    cls: CofibrationClass,
    mode: str = "unbiased",
    budget: Optional[int] = None,
    horizon: Optional[int] = None,
) -> BasicFamily:
    """The uniform-lifting family of the generators: reindexing transports
    along u×I for every cube map u at truncation."""
    N = site.N if horizon is None else min(site.N, horizon + 1)
    gens_data = [
        g for g in enumerate_generators(site, cls, mode, budget) if g.n + 1 <= N
    ]
    gens = []
    gen_index: dict[tuple[int, int, int], int] = {}
    by_members: dict[tuple[int, tuple], int] = {}
    for g in gens_data:
        k = len(gens)
        gen_index[(g.n, g.c_index, g.i_mid)] = k
        by_members[(g.n + 1, g.sub.members)] = k
        gens.append(Generator(g.n + 1, g.sub, (g.n + 1, g.c_index, g.i_mid)))
    y_cells = {e: yoneda(site, e).cell_data for e in range(N + 1)}
    reindex: list[list[tuple[int, int, tuple[int, ...]]]] = [[] for _ in gens]
    for k, (g, meta) in enumerate(zip(gens, gens_data)):
        n = meta.n
        flat_k = {cell: p for p, cell in enumerate(_flat_cells(g.sub))}
        for m in range(N):
            for u_mid in site.hom(m, n):
                u = site.cube_map(u_mid)
                v = CubeMap(
                    m + 1, n + 1,
                    tuple(m + 2 if e == m + 1 else e for e in u.entries) + (m + 1,),
                )
                v_mid = site.map_id(v)
                # pulled generator: members of v*(sub)
                members = []
                for d in range(len(site.objects)):
                    sets = set(g.sub.members[d])
                    mem = []
                    for c_pos, h in enumerate(y_cells[m + 1][d]):
                        vh = site.compose(v_mid, h)
                        if y_cells[n + 1][d].index(vh) in sets:
                            mem.append(c_pos)
                    members.append(tuple(mem))
                k2 = by_members[(m + 1, tuple(members))]
                trans = []
                for d in range(len(site.objects)):
                    for c_pos in members[d]:
                        h = y_cells[m + 1][d][c_pos]
                        vh = site.compose(v_mid, h)
                        trans.append(flat_k[(d, y_cells[n + 1][d].index(vh))])
                reindex[k].append((v_mid, k2, tuple(trans)))
    return BasicFamily(site, gens, reindex, label=f"BCof⊗δ({mode})")


def derive_biased_structure(
    st: UniformStructure, site: TruncatedCubeSite, cls: CofibrationClass,
    budget: Optional[int] = None,
) -> tuple[bool, dict]:
    """Restrict an unbiased structure to the constant indexings and verify
    it is a valid biased structure for each endpoint."""
    biased_fam = fib_family(site, cls, "biased", budget)
    slot_lookup = {s: i for i, s in enumerate(st.slots)}
    unbiased_keys = {g.key: k for k, g in enumerate(st.family.gens)}
    slots = []
    fillers = {}
    for k2, g2 in enumerate(biased_fam.gens):
        k = unbiased_keys[g2.key]
        for i, (kk, bottom, top) in enumerate(st.slots):
            if kk == k:
                fillers[len(slots)] = st.fillers[i]
                slots.append((k2, bottom, top))
    sub = UniformStructure(biased_fam, st.f, slots, fillers)
    return sub.verify(), {"biased_slots": len(slots)}


# -- fibration structure: two routes -----------------------------------------------


@dataclass
class FibrationResult:
    verdict: str
    structure: Optional[UniformStructure]
    report: CheckReport


def fibration_structure_route_a(
    f: NatTrans, cls: CofibrationClass, mode: str = "unbiased",
    budget: Optional[int] = None, family: Optional[BasicFamily] = None,
) -> tuple[Optional[UniformStructure], Optional[dict], dict]:
    site = f.source.site
    assert isinstance(site, TruncatedCubeSite)
    if family is None:
        from .cofib import _horizon
        family = fib_family(site, cls, mode, budget, horizon=_horizon(f))
    return uniform_structure_search(family, f, budget=budget)


def slice_generic_evaluation(
    SI: SlicedInterval, X: Presheaf, succ: SiteFunctor, small: ElementsCategory
) -> NatTrans:
    """Evaluation at the generic point: X^(I*I) -> X| over the reduced
    slice site, acting along the graph morphisms (n,i) -> (n+1, i∘p)."""
    big = SI.site
    base_big = build_site(SI.N)
    shifted = precompose(X, succ, validity=None)
    restricted = slice_restrict(X, SI.N, small)
    comps = []
    for o in range(len(small.objects)):
        n, _cell = small.objects[o]
        i_mid = slice_object_mor(small, o)
        i_map = succ.source.base.cube_map(i_mid) if hasattr(succ.source, "base") else None
        # the graph ⟨id_n, i⟩: [n] -> [n+1] over the big base site
        base_small = build_site(SI.N - 1)
        i_cm = base_small.cube_map(i_mid)
        graph = CubeMap(n, n + 1, tuple(range(1, n + 1)) + (i_cm.entries[0],))
        tgt_big = succ.obj_map[o]
        n2, cell2 = big.objects[tgt_big]
        src_big_idx = _restr_obj(small, big, SI.N, o)
        emid = big.mor_by_payload(src_big_idx, tgt_big, (base_big.map_id(graph), n2, cell2))
        comps.append(X.action[emid])
    return NatTrans(shifted, restricted, tuple(comps), label="ev-generic")


def _restr_obj(small: ElementsCategory, big: ElementsCategory, N: int, o: int) -> int:
    n, cell = small.objects[o]
    base_small, base_big = build_site(N - 1), build_site(N)
    i_map = base_small.cube_map(slice_object_mor(small, o))
    big_cell = yoneda(base_big, 1).cell_data[n].index(base_big.map_id(i_map))
    return big.obj_index[(n, big_cell)]


def generic_pullback_hom(
    SI: SlicedInterval, f: NatTrans, budget: Optional[int] = None
) -> NatTrans:
    """δ ⇒ (I*f) over the reduced slice site: the comparison map
    (I*A)^(I*I) -> (I*X)^(I*I) ×_(I*X) (I*A)."""
    N = SI.N
    succ = slice_successor_functor(N)
    small = succ.source
    IA = SI.pull_presheaf(f.source)
    IX = SI.pull_presheaf(f.target)
    If = SI.pull_map(f)
    PA = precompose(IA, succ, validity=(N - 1))
    PX = precompose(IX, succ, validity=(N - 1))
    PA.label, PX.label = "(I*A)^II", "(I*X)^II"
    shift_f = NatTrans(
        PA, PX, tuple(If.components[succ.obj_map[o]] for o in range(len(small.objects))),
        label="f^II",
    )
    ev_A = slice_generic_evaluation(SI, IA, succ, small)
    ev_X = slice_generic_evaluation(SI, IX, succ, small)
    IA_r, IX_r = ev_A.target, ev_X.target
    If_r = NatTrans(
        IA_r, IX_r,
        tuple(If.components[_restr_obj(small, SI.site, N, o)] for o in range(len(small.objects))),
        label="I*f|",
    )
    L, projs = finite_limit(
        {"px": PX, "a": IA_r, "ix": IX_r},
        [("px", "ix", ev_X), ("a", "ix", If_r)],
    )
    u = induced_into_limit(L, projs, {"px": shift_f, "a": ev_A, "ix": compose_nat(ev_X, shift_f)})
    u.label = "delta=>I*f"
    return u


def fibration_structure(
    f: NatTrans,
    cls: CofibrationClass,
    mode: str = "unbiased",
    routes: str = "both",
    budget: Optional[int] = None,
    family: Optional[BasicFamily] = None,
) -> FibrationResult:
    """Route A: uniform fillers against the generating family.  Route B:
    δ ⇒ (I*f) over the sliced interval, tested as a trivial fibration.
    Verdicts must agree at valid levels."""
    site = f.source.site
    assert isinstance(site, TruncatedCubeSite)
    with Stopwatch() as sw:
        counters: dict[str, int] = {}
        details: dict[str, Any] = {}
        verdicts: dict[str, bool] = {}
        structure = None

        if routes in ("a", "both"):
            structure, witness_a, ctr = fibration_structure_route_a(
                f, cls, mode, budget, family
            )
            verdicts["A"] = structure is not None
            counters.update({f"route_a_{k}": v for k, v in ctr.items()})
            details["route_a"] = "ok" if structure is not None else witness_a
            if structure is not None:
                if not structure.verify():
                    raise AssertionError("fibration structure failed replay")
                if mode == "unbiased":
                    ok_b, info = derive_biased_structure(structure, site, cls, budget)
                    details["biased_derivation"] = {"valid": ok_b, **info}

        if routes in ("b", "both") and mode == "unbiased":
            SI = sliced_interval(site.N)
            u = generic_pullback_hom(SI, f, budget)
            cls_slice = all_monos_class(u.source.site, budget)
            res = trivial_fibration_structure(u, cls_slice, budget, modes=(2, 3))
            verdicts["B"] = res.verdict == PASS
            details["route_b"] = res.report.details["mode_verdicts"]
            counters["route_b_nodes"] = res.report.counters.get("nodes", 0)

        agree = len(set(verdicts.values())) <= 1
        is_fib = all(verdicts.values()) if verdicts else False
    rep = CheckReport(
        "fib-structure",
        params={"map": f.label or "f", "mode": mode, "routes": routes, "trunc": site.N},
        verdict=PASS if agree else FAIL,
        validity=site.N - 1,
        counters=counters,
        notes=[TRUNCATION_CAVEAT],
        details={"is_fibration": is_fib, "route_verdicts": verdicts, **details},
        wall_time=sw.elapsed,
    )
    if not agree:
        rep.witness = {"route_verdicts": verdicts}
    return FibrationResult(PASS if is_fib else FAIL, structure, rep)


# -- bounded small-object factorization ---------------------------------------------


def factor_tcof_fib(
    f: NatTrans,
    cls: CofibrationClass,
    max_iterations: int = 4,
    max_cells: int = 100_000,
    budget: Optional[int] = None,
) -> tuple[Optional[NatTrans], Optional[NatTrans], CheckReport]:
    """Bounded algebraic small-object iteration: batch-attach fillers for
    all outstanding generator squares until the right leg is a fibration or
    the budget is hit."""
    site = f.source.site
    assert isinstance(site, TruncatedCubeSite)
    with Stopwatch() as sw:
        fam = fib_family(site, cls, "unbiased", budget)
        i_map = identity_nat(f.source)
        W = f.source
        p = f
        iterations = 0
        outcome = "pending"
        try:
            while True:
                witness = basic_lifting_check(fam, p, budget)
                if witness is None:
                    outcome = "fibration"
                    break
                if iterations >= max_iterations or W.total_cells() > max_cells:
                    outcome = "budget"
                    break
                problems = _outstanding_problems(fam, p, budget)
                W, p, i_map = _attach_cells(site, fam, p, i_map, problems)
                iterations += 1
        except BudgetExceeded:
            outcome = "budget"
        composite_ok = compose_nat(p, i_map).components == f.components
        cert = None
        if outcome == "fibration":
            structure, w, ctr = uniform_structure_search(fam, p, budget=budget)
            cert = structure is not None
    verdict = PASS if (outcome == "fibration" and composite_ok and cert) else (
        BUDGET if outcome == "budget" else FAIL
    )
    rep = CheckReport(
        "factor-tcof-fib",
        params={"map": f.label or "f", "max_iterations": max_iterations},
        verdict=verdict,
        counters={"iterations": iterations, "middle_cells": W.total_cells()},
        notes=[TRUNCATION_CAVEAT],
        details={"outcome": outcome, "composite_equals_f": composite_ok,
                 "uniform_certificate": cert},
        wall_time=sw.elapsed,
    )
    if verdict == BUDGET:
        rep.details["partial_state"] = {"cells": list(W.sizes), "iterations": iterations}
    if verdict == PASS:
        return i_map, p, rep
    if verdict == BUDGET:
        return i_map, p, rep
    return None, None, rep


def _outstanding_problems(fam: BasicFamily, p: NatTrans, budget: Optional[int]):
    """All (generator, top, bottom) squares with no filler."""
    site = fam.site
    A, X = p.source, p.target
    counter = BudgetCounter(budget, "outstanding problems")
    out = []
    for k, g in enumerate(fam.gens):
        Sp, incl = fam.sub_presheaf(k)
        flat = _flat_cells(g.sub)
        for bottom in range(X.sizes[g.obj]):
            def filt(o: int, i: int, _g=g, _bottom=bottom) -> Sequence[int]:
                cell = _g.sub.members[o][i]
                mor = site.hom(o, _g.obj)[cell]
                want = X.action[mor][_bottom]
                return [v for v in range(A.sizes[o]) if p.components[o][v] == want]
            for top in enumerate_nat_trans(Sp, A, counter=counter,
                                           candidate_filter=filt, var_order="desc"):
                has = False
                for a in range(A.sizes[g.obj]):
                    if p.components[g.obj][a] != bottom:
                        continue
                    if all(
                        A.action[site.hom(d, g.obj)[cell]][a] == top.components[d][g.sub.members[d].index(cell)]
                        for (d, cell) in flat
                    ):
                        has = True
                        break
                if not has:
                    out.append((k, top, bottom))
    return out


def _attach_cells(site, fam: BasicFamily, p: NatTrans, i_map: NatTrans, problems):
    """One batched attachment step: pushout of all problem boxes."""
    A, X = p.source, p.target
    nodes = {"w": A}
    edges = []
    legs = {"w": p}
    for idx, (k, top, bottom) in enumerate(problems):
        g = fam.gens[k]
        Sp, incl = fam.sub_presheaf(k)
        ye = yoneda(site, g.obj)
        nodes[f"c{idx}"] = Sp
        nodes[f"y{idx}"] = ye
        # span: W <- Sp -> y(e); the colimit glues a copy of y(e) along the box
        edges.append((f"c{idx}", "w", top))
        edges.append((f"c{idx}", f"y{idx}", incl))
        legs[f"c{idx}"] = compose_nat(p, top)
        legs[f"y{idx}"] = NatTrans(
            ye, X,
            tuple(
                tuple(X.action[site.hom(d, g.obj)[c]][bottom] for c in range(ye.sizes[d]))
                for d in range(len(site.objects))
            ),
        )
    Q, injs = finite_colimit(nodes, edges)
    p2 = induced_from_colimit(Q, injs, legs)
    i2 = compose_nat(injs["w"], i_map)
    Q.validity = A.validity
    return Q, p2, i2


# -- classifying types ----------------------------------------------------------------


@dataclass
class ClassifyingType:
    kind: str
    base_map: NatTrans
    total: Presheaf          # the classifying object over the base
    projection: NatTrans
    sections: list[NatTrans]


def _slice_exponential_pair(E, Zhat: Presheaf, What: Presheaf, budget):
    return exponential(What, Zhat, budget)


def tfib_classifying_type(
    a: NatTrans, cls: CofibrationClass, budget: Optional[int] = None
) -> ClassifyingType:
    """TFib(A) over X: the equalizer-style pullback of [A⁺,A] -> [A,A]
    against the identity point, computed in psh(∫X)."""
    sm = map_to_slice(a)
    E = sm.E
    cls_E = class_on_elements(cls, E)
    pd = plus_object(sm.fiber, cls_E, budget)
    Ahat = sm.fiber
    E_AA = exponential(Ahat, Ahat, budget)
    E_PA = exponential(Ahat, pd.plus, budget)
    # [η, A] : [A⁺, A] -> [A, A], precomposition with the unit
    pre_eta = exponential_pre(E_PA, E_AA, pd.eta)
    one_E = terminal(E)
    from .presheaf import transpose_map, product2 as _p2
    # the identity point 1 -> [A,A]
    P_1A, _, _ = _p2(one_E, Ahat)
    id_pt_map = NatTrans(
        P_1A, Ahat,
        tuple(tuple(range(Ahat.sizes[o])) for o in range(len(Ahat.sizes))),
    )
    id_point = transpose_map(id_pt_map, one_E, E_AA, P_1A)
    L, projs = finite_limit(
        {"pa": E_PA.presheaf, "one": one_E, "aa": E_AA.presheaf},
        [("pa", "aa", pre_eta), ("one", "aa", id_point)],
    )
    total, proj = slice_to_total(E, L)
    sections = enumerate_nat_trans(terminal(E), L, budget=budget, var_order="desc")
    return ClassifyingType("TFIB", a, total, proj, sections)


def tfib_sections_vs_retractions(
    a: NatTrans, cls: CofibrationClass, budget: Optional[int] = None
) -> CheckReport:
    """Sections of TFib(A) biject with +-algebra retractions found by
    direct search (counts compared)."""
    with Stopwatch() as sw:
        ct = tfib_classifying_type(a, cls, budget)
        sm = map_to_slice(a)
        cls_E = class_on_elements(cls, sm.E)
        pd = plus_object(sm.fiber, cls_E, budget)
        fixed = {}
        for i in range(len(sm.E.objects)):
            for v in range(pd.base.sizes[i]):
                fixed[(i, pd.eta.components[i][v])] = v
        retractions = enumerate_nat_trans(
            pd.plus, pd.base, fixed=fixed, budget=budget, var_order="desc"
        )
        ok = len(ct.sections) == len(retractions)
    rep = CheckReport(
        "tfib-classifying-sections",
        params={"map": a.label or "a"},
        verdict=PASS if ok else FAIL,
        counters={"sections": len(ct.sections), "retractions": len(retractions)},
        wall_time=sw.elapsed,
    )
    if not ok:
        rep.witness = {"sections": len(ct.sections), "retractions": len(retractions)}
    return rep


def weak_proposition_check(
    a: NatTrans, cls: CofibrationClass, budget: Optional[int] = None
) -> CheckReport:
    """TFib(A)² -> TFib(A) is a trivial fibration (weak-proposition law)."""
    with Stopwatch() as sw:
        ct = tfib_classifying_type(a, cls, budget)
        P, p1, p2 = None, None, None
        L, projs = finite_limit(
            {"l": ct.total, "r": ct.total, "x": a.target},
            [("l", "x", ct.projection), ("r", "x", ct.projection)],
        )
        ok = is_trivial_fibration(projs["l"], cls, budget)
    rep = CheckReport(
        "tfib-weak-prop",
        params={"map": a.label or "a"},
        verdict=PASS if ok else FAIL,
        counters={"square_cells": L.total_cells()},
        wall_time=sw.elapsed,
    )
    return rep


def biased_fib_classifying_type(
    a: NatTrans, SI: SlicedInterval, cls_slice: CofibrationClass,
    budget: Optional[int] = None,
) -> ClassifyingType:
    """Fib_δ(A) -> X for a: A -> X over the slice site: pullback-hom at the
    generic point, TFib of it, pushforward to X^(I*I), root, then pull back
    along the unit."""
    N = SI.N
    S = SI.site
    succ = slice_successor_functor(N)
    small = succ.source
    A, X = a.source, a.target

    # step 1-2: ε_A := δ ⇒ a over the reduced slice site
    PA = precompose(A, succ, validity=N - 1)
    PX = precompose(X, succ, validity=N - 1)
    shift_a = NatTrans(
        PA, PX, tuple(a.components[succ.obj_map[o]] for o in range(len(small.objects))),
    )
    ev_A = slice_generic_evaluation(SI, A, succ, small)
    ev_X = slice_generic_evaluation(SI, X, succ, small)
    A_r, X_r = ev_A.target, ev_X.target
    a_r = NatTrans(
        A_r, X_r,
        tuple(a.components[_restr_obj(small, S, N, o)] for o in range(len(small.objects))),
    )
    A_eps, projs = finite_limit(
        {"px": PX, "a": A_r, "x": X_r},
        [("px", "x", ev_X), ("a", "x", a_r)],
    )
    eps_A = induced_into_limit(
        A_eps, projs, {"px": shift_a, "a": ev_A, "x": compose_nat(ev_X, shift_a)}
    )

    # steps 3-4: TFib(ε_A) over A_eps via the elements engine
    sm = map_to_slice(eps_A)
    clsE = class_on_elements(cls_slice, sm.E)
    pd = plus_object(sm.fiber, clsE, budget)
    E_AA = exponential(sm.fiber, sm.fiber, budget)
    E_PA = exponential(sm.fiber, pd.plus, budget)
    pre_eta = exponential_pre(E_PA, E_AA, pd.eta)
    one_E = terminal(sm.E)
    from .presheaf import transpose_map, product2 as _p2
    P_1A, _, _ = _p2(one_E, sm.fiber)
    id_pt_map = NatTrans(
        P_1A, sm.fiber,
        tuple(tuple(range(sm.fiber.sizes[o])) for o in range(len(sm.fiber.sizes))),
    )
    id_point = transpose_map(id_pt_map, one_E, E_AA, P_1A)
    L, lprojs = finite_limit(
        {"pa": E_PA.presheaf, "one": one_E, "aa": E_AA.presheaf},
        [("pa", "aa", pre_eta), ("one", "aa", id_point)],
    )
    tfib_total, tfib_proj = slice_to_total(sm.E, L)   # TFib(ε_A) -> A_eps

    # step 5: pushforward along p_eps: A_eps -> X^(I*I)
    p_eps = projs["px"]
    F_A, f_proj = pushforward(tfib_proj, p_eps, budget)

    # step 6: root along the slice shift, pulled back along the unit
    R = kan_root(F_A, succ, budget)
    RX = kan_root(PX, succ, budget)
    f_I = kan_root_map(R, RX, f_proj)
    eta_X = kan_unit(X, succ, RX)
    FibA, fprojs = finite_limit(
        {"x": X, "rf": R.root, "rx": RX.root},
        [("x", "rx", eta_X), ("rf", "rx", f_I)],
    )
    sections = sections_of(fprojs["x"], budget)
    return ClassifyingType("FIB_BIASED", a, FibA, fprojs["x"], sections)


def sections_of(proj: NatTrans, budget: Optional[int] = None) -> list[NatTrans]:
    """All sections of a projection T -> X, canonical order."""
    X, T = proj.target, proj.source

    def filt(o: int, i: int) -> Sequence[int]:
        return [v for v in range(T.sizes[o]) if proj.components[o][v] == i]

    return enumerate_nat_trans(X, T, budget=budget, candidate_filter=filt,
                               var_order="desc")


def slice_nat_to_total(E: ElementsCategory, f: NatTrans) -> NatTrans:
    """Totalize a map of presheaves on ∫X to a map of their totals."""
    src_total, _ = slice_to_total(E, f.source)
    tgt_total, _ = slice_to_total(E, f.target)
    tgt_pos = {
        c: {cz: i for i, cz in enumerate(tgt_total.cell_data[c])}
        for c in tgt_total.cell_data
    }
    comps = []
    for c in range(len(src_total.sizes)):
        col = []
        for (x, z) in src_total.cell_data[c]:
            e = E.obj_index[(c, x)]
            col.append(tgt_pos[c][(x, f.components[e][z])])
        comps.append(tuple(col))
    return NatTrans(src_total, tgt_total, tuple(comps), label=f"total({f.label})")


def unbiased_fib_classifying_type(
    a: NatTrans, cls: CofibrationClass, budget: Optional[int] = None
) -> ClassifyingType:
    """Fib(A) -> X over the cube site: the pushforward along q: I×X -> X of
    the biased classifier for I*a over the sliced interval."""
    site = a.source.site
    assert isinstance(site, TruncatedCubeSite)
    SI = sliced_interval(site.N)
    cls_slice = all_monos_class(SI.site, budget)
    Ia = SI.pull_map(a)
    ct = biased_fib_classifying_type(Ia, SI, cls_slice, budget)
    # psh(□/[1]) ≅ cSet/I: totalize Fib_i(I*A) -> I*X, landing over I×X
    over_IX = slice_nat_to_total(SI.site, ct.projection)
    I = yoneda(site, 1)
    X = a.target
    P, p_I, p_X = product2(I, X)
    assert over_IX.target.sizes == P.sizes, "slice total must match I×X"
    over_P = NatTrans(over_IX.source, P, over_IX.components)
    PF, proj = pushforward(over_P, p_X, budget)
    return ClassifyingType("FIB_UNBIASED", a, PF, proj, sections_of(proj, budget))
