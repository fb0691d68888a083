"""Finite presheaves over a FinCat: carriers, actions, limits, colimits,
exponentials, the subobject classifier, and the search kernels everything
else is built from.

Carriers are dense integer ranges per site object; all constructions index
their cells in a fixed canonical order, so identical inputs rebuild
bit-identical data.  Every presheaf carries a validity horizon: on sites
that truncate an ambient site (the cube site and its slices), levels up to
the horizon agree with the ambient computation; None means exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

from .budget import BudgetCounter
from .fincat import FinCat, SiteFunctor


class SiteMismatch(Exception):
    pass


class FunctorialityError(Exception):
    pass


class ValidityUnderflow(Exception):
    pass


def combine_validity(*vs: Optional[int]) -> Optional[int]:
    ints = [v for v in vs if v is not None]
    if not ints:
        return None
    return min(ints)


@dataclass
class Presheaf:
    site: FinCat
    sizes: tuple[int, ...]
    action: dict[int, tuple[int, ...]]
    validity: Optional[int] = None
    label: str = ""
    cell_data: dict[int, list] = field(default_factory=dict, repr=False, compare=False)

    def size(self, obj: int) -> int:
        return self.sizes[obj]

    def act(self, mid: int, cell: int) -> int:
        return self.action[mid][cell]

    def cells(self) -> Iterable[tuple[int, int]]:
        for o, n in enumerate(self.sizes):
            for i in range(n):
                yield (o, i)

    def total_cells(self) -> int:
        return sum(self.sizes)

    def is_empty(self) -> bool:
        return all(n == 0 for n in self.sizes)

    def audit(self, pairs: Optional[Iterable[tuple[int, int]]] = None) -> None:
        """Functoriality: identities and (all or given) composable pairs."""
        site = self.site
        for o in range(len(site.objects)):
            ident = self.action[site.identity(o)]
            if ident != tuple(range(self.sizes[o])):
                raise FunctorialityError(f"identity action wrong at object {o} ({self.label})")
        if pairs is None:
            pairs = site.composable_pairs()
        for g, f in pairs:
            gf = site.compose(g, f)
            af, ag, agf = self.action[f], self.action[g], self.action[gf]
            mg = site.mors[g]
            for i in range(self.sizes[site.mors[gf].tgt]):
                if af[ag[i]] != agf[i]:
                    raise FunctorialityError(
                        f"action breaks composition at pair ({g},{f}) cell {i} ({self.label})"
                    )

    def same_data(self, other: "Presheaf") -> bool:
        return self.sizes == other.sizes and self.action == other.action


@dataclass
class NatTrans:
    source: Presheaf
    target: Presheaf
    components: tuple[tuple[int, ...], ...]
    label: str = ""

    def at(self, obj: int, cell: int) -> int:
        return self.components[obj][cell]

    def check_natural(self) -> None:
        X, Y = self.source, self.target
        for mid in X.site.all_mor_ids():
            m = X.site.mors[mid]
            xf, yf = X.action[mid], Y.action[mid]
            comp_b, comp_a = self.components[m.tgt], self.components[m.src]
            for x in range(X.sizes[m.tgt]):
                if comp_a[xf[x]] != yf[comp_b[x]]:
                    raise FunctorialityError(
                        f"naturality fails at morphism {mid}, cell {x} ({self.label})"
                    )

    def is_mono(self) -> bool:
        return all(len(set(c)) == len(c) for c in self.components)

    def is_epi(self) -> bool:
        return all(
            set(c) == set(range(self.target.sizes[o])) for o, c in enumerate(self.components)
        )

    def is_iso(self) -> bool:
        return self.is_mono() and all(
            self.source.sizes[o] == self.target.sizes[o] for o in range(len(self.components))
        )


def identity_nat(X: Presheaf) -> NatTrans:
    return NatTrans(X, X, tuple(tuple(range(n)) for n in X.sizes), label="id")


def compose_nat(g: NatTrans, f: NatTrans) -> NatTrans:
    assert f.target.sizes == g.source.sizes, "nat trans not composable"
    comps = tuple(
        tuple(g.components[o][f.components[o][i]] for i in range(f.source.sizes[o]))
        for o in range(len(f.components))
    )
    return NatTrans(f.source, g.target, comps)


def constant_nat(X: Presheaf, Y: Presheaf, point: "NatTrans") -> NatTrans:
    """X -> Y through a global point 1 -> Y."""
    comps = tuple(
        tuple(point.components[o][0] for _ in range(X.sizes[o])) for o in range(len(X.sizes))
    )
    return NatTrans(X, Y, comps)


def is_mono(f: NatTrans) -> bool:
    return f.is_mono()


def is_iso(f: NatTrans) -> bool:
    return f.is_iso()


# -- representables and (co)limits ------------------------------------------


def yoneda(site: FinCat, c: int) -> Presheaf:
    """The representable presheaf at object index c; validity = trunc."""
    if not 0 <= c < len(site.objects):
        raise KeyError(f"unknown object index {c}")
    homs = {d: site.hom(d, c) for d in range(len(site.objects))}
    index = {d: {m: i for i, m in enumerate(homs[d])} for d in homs}
    sizes = tuple(len(homs[d]) for d in range(len(site.objects)))
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        action[mid] = tuple(index[m.src][site.compose(g, mid)] for g in homs[m.tgt])
    ps = Presheaf(site, sizes, action, validity=site.trunc, label=f"y({site.objects[c]})")
    ps.cell_data = {d: list(homs[d]) for d in homs}
    return ps


def yoneda_map(site: FinCat, mid: int) -> NatTrans:
    """y(f): y(a) -> y(b) for f: a -> b, by postcomposition."""
    m = site.mors[mid]
    ya, yb = yoneda(site, m.src), yoneda(site, m.tgt)
    comps = []
    for d in range(len(site.objects)):
        idx = {g: i for i, g in enumerate(site.hom(d, m.tgt))}
        comps.append(tuple(idx[site.compose(mid, g)] for g in site.hom(d, m.src)))
    return NatTrans(ya, yb, tuple(comps), label=f"y(mor {mid})")


def terminal(site: FinCat) -> Presheaf:
    sizes = tuple(1 for _ in site.objects)
    action = {mid: (0,) for mid in site.all_mor_ids()}
    return Presheaf(site, sizes, action, validity=site.trunc, label="1")


def initial(site: FinCat) -> Presheaf:
    sizes = tuple(0 for _ in site.objects)
    action = {mid: () for mid in site.all_mor_ids()}
    return Presheaf(site, sizes, action, validity=site.trunc, label="0")


def terminal_map(X: Presheaf) -> NatTrans:
    one = terminal(X.site)
    return NatTrans(X, one, tuple(tuple(0 for _ in range(n)) for n in X.sizes), label="!")


def initial_map(X: Presheaf) -> NatTrans:
    zero = initial(X.site)
    return NatTrans(zero, X, tuple(() for _ in X.sizes), label="0->")


def _mixed_radix_index(sizes: Sequence[int], digits: Sequence[int]) -> int:
    idx = 0
    for s, d in zip(sizes, digits):
        idx = idx * s + d
    return idx


def product_list(Xs: Sequence[Presheaf]) -> tuple[Presheaf, list[NatTrans]]:
    """Cartesian product with row-major cell indexing and projections."""
    if not Xs:
        raise ValueError("use terminal(site) for the empty product")
    site = Xs[0].site
    for X in Xs:
        if X.site is not site:
            raise SiteMismatch("product over mixed sites")
    sizes = tuple(
        int(_prod(X.sizes[o] for X in Xs)) for o in range(len(site.objects))
    )
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        tgt_sizes = [X.sizes[m.tgt] for X in Xs]
        src_sizes = [X.sizes[m.src] for X in Xs]
        out = []
        for digits in itertools.product(*[range(s) for s in tgt_sizes]):
            img = [X.action[mid][d] for X, d in zip(Xs, digits)]
            out.append(_mixed_radix_index(src_sizes, img))
        action[mid] = tuple(out)
    P = Presheaf(
        site,
        sizes,
        action,
        validity=combine_validity(*[X.validity for X in Xs]),
        label="x".join(X.label or "?" for X in Xs),
    )
    projections = []
    for k, X in enumerate(Xs):
        comps = []
        for o in range(len(site.objects)):
            osizes = [Z.sizes[o] for Z in Xs]
            col = []
            for digits in itertools.product(*[range(s) for s in osizes]):
                col.append(digits[k])
            comps.append(tuple(col))
        projections.append(NatTrans(P, X, tuple(comps), label=f"pi{k + 1}"))
    return P, projections


def _prod(it: Iterable[int]) -> int:
    out = 1
    for v in it:
        out *= v
    return out


def product2(X: Presheaf, Y: Presheaf) -> tuple[Presheaf, NatTrans, NatTrans]:
    P, projs = product_list([X, Y])
    return P, projs[0], projs[1]


def pair_into_product(f: NatTrans, g: NatTrans, P: Presheaf) -> NatTrans:
    """⟨f, g⟩ : Z -> X×Y for f: Z->X, g: Z->Y and P = product2(X, Y)."""
    X, Y, Z = f.target, g.target, f.source
    comps = []
    for o in range(len(Z.sizes)):
        ny = Y.sizes[o]
        comps.append(
            tuple(f.components[o][i] * ny + g.components[o][i] for i in range(Z.sizes[o]))
        )
    return NatTrans(Z, P, tuple(comps), label="<,>")


def product_of_maps(f: NatTrans, g: NatTrans, P_src: Presheaf, P_tgt: Presheaf) -> NatTrans:
    """f×g : X×Y -> X'×Y' for given source/target product presheaves."""
    X, Y = f.source, g.source
    comps = []
    for o in range(len(X.sizes)):
        ny, ny2 = Y.sizes[o], g.target.sizes[o]
        col = []
        for i in range(X.sizes[o]):
            for j in range(ny):
                col.append(f.components[o][i] * ny2 + g.components[o][j])
        comps.append(tuple(col))
    return NatTrans(P_src, P_tgt, tuple(comps), label="fxg")


def tuple_into_product(maps: Sequence[NatTrans], P: Presheaf) -> NatTrans:
    Z = maps[0].source
    sizes = [m.target.sizes for m in maps]
    comps = []
    for o in range(len(Z.sizes)):
        osz = [s[o] for s in sizes]
        col = []
        for i in range(Z.sizes[o]):
            digits = [m.components[o][i] for m in maps]
            col.append(_mixed_radix_index(osz, digits))
        comps.append(tuple(col))
    return NatTrans(Z, P, tuple(comps), label="<...>")


def finite_limit(
    nodes: dict[str, Presheaf], edges: list[tuple[str, str, NatTrans]]
) -> tuple[Presheaf, dict[str, NatTrans]]:
    """Limit of a finite diagram, levelwise; cells are canonical tuples."""
    names = sorted(nodes)
    site = nodes[names[0]].site
    for X in nodes.values():
        if X.site is not site:
            raise SiteMismatch("diagram over mixed sites")
    pos = {nm: k for k, nm in enumerate(names)}
    cells_per_obj: list[list[tuple[int, ...]]] = []
    for o in range(len(site.objects)):
        good = []
        for tup in itertools.product(*[range(nodes[nm].sizes[o]) for nm in names]):
            if all(e.components[o][tup[pos[a]]] == tup[pos[b]] for a, b, e in edges):
                good.append(tup)
        cells_per_obj.append(good)
    index = [{t: i for i, t in enumerate(cells)} for cells in cells_per_obj]
    sizes = tuple(len(cells) for cells in cells_per_obj)
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        out = []
        for tup in cells_per_obj[m.tgt]:
            img = tuple(nodes[nm].action[mid][tup[pos[nm]]] for nm in names)
            out.append(index[m.src][img])
        action[mid] = tuple(out)
    L = Presheaf(
        site,
        sizes,
        action,
        validity=combine_validity(*[X.validity for X in nodes.values()]),
        label="lim",
    )
    L.cell_data = {o: list(cells) for o, cells in enumerate(cells_per_obj)}
    projs = {}
    for nm in names:
        comps = tuple(
            tuple(tup[pos[nm]] for tup in cells_per_obj[o]) for o in range(len(site.objects))
        )
        projs[nm] = NatTrans(L, nodes[nm], comps, label=f"proj_{nm}")
    return L, projs


def pullback(f: NatTrans, g: NatTrans) -> tuple[Presheaf, NatTrans, NatTrans]:
    """Pullback of f: X->Z, g: Y->Z; returns (P, to X, to Y)."""
    P, projs = finite_limit(
        {"x": f.source, "y": g.source, "z": f.target},
        [("x", "z", f), ("y", "z", g)],
    )
    return P, projs["x"], projs["y"]


def induced_into_limit(
    L: Presheaf, projs: dict[str, NatTrans], legs: dict[str, NatTrans]
) -> NatTrans:
    """Universal map Z -> lim from a compatible cone of legs."""
    names = sorted(projs)
    Z = legs[names[0]].source
    index = [
        {tuple(t): i for i, t in enumerate(L.cell_data[o])} for o in range(len(L.sizes))
    ]
    comps = []
    for o in range(len(Z.sizes)):
        col = []
        for i in range(Z.sizes[o]):
            tup = tuple(legs[nm].components[o][i] for nm in names)
            col.append(index[o][tup])
        comps.append(tuple(col))
    return NatTrans(Z, L, tuple(comps), label="into-lim")


def equalizer(f: NatTrans, g: NatTrans) -> "Subobject":
    X = f.source
    members = []
    for o in range(len(X.sizes)):
        members.append(
            tuple(
                i
                for i in range(X.sizes[o])
                if f.components[o][i] == g.components[o][i]
            )
        )
    return Subobject(X, tuple(members))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra  # representative = least index


def coproduct(Xs: Sequence[Presheaf]) -> tuple[Presheaf, list[NatTrans]]:
    site = Xs[0].site
    offsets = []
    sizes = []
    for o in range(len(site.objects)):
        offs, acc = [], 0
        for X in Xs:
            offs.append(acc)
            acc += X.sizes[o]
        offsets.append(offs)
        sizes.append(acc)
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        col = []
        for k, X in enumerate(Xs):
            base = offsets[m.src][k]
            col.extend(base + v for v in X.action[mid])
        action[mid] = tuple(col)
    C = Presheaf(
        site,
        tuple(sizes),
        action,
        validity=combine_validity(*[X.validity for X in Xs]),
        label="+".join(X.label or "?" for X in Xs),
    )
    injections = []
    for k, X in enumerate(Xs):
        comps = tuple(
            tuple(offsets[o][k] + i for i in range(X.sizes[o]))
            for o in range(len(site.objects))
        )
        injections.append(NatTrans(X, C, comps, label=f"inj{k + 1}"))
    return C, injections


def quotient(X: Presheaf, pairs: Iterable[tuple[int, int, int]]) -> tuple[Presheaf, NatTrans]:
    """Quotient of X by the congruence generated by (obj, cell, cell) pairs.

    Union-find with path compression; representatives are least global
    indices, then re-densified in sorted order.
    """
    site = X.site
    base = []
    acc = 0
    for n in X.sizes:
        base.append(acc)
        acc += n
    uf = _UnionFind(acc)
    for o, a, b in pairs:
        uf.union(base[o] + a, base[o] + b)
    # congruence closure: identified cells must have identified images
    changed = True
    while changed:
        changed = False
        for mid in site.all_mor_ids():
            m = site.mors[mid]
            act = X.action[mid]
            classes: dict[int, int] = {}
            for i in range(X.sizes[m.tgt]):
                r = uf.find(base[m.tgt] + i)
                img = base[m.src] + act[i]
                if r in classes:
                    if uf.find(classes[r]) != uf.find(img):
                        uf.union(classes[r], img)
                        changed = True
                else:
                    classes[r] = img
    reps_per_obj: list[list[int]] = []
    rep_index: list[dict[int, int]] = []
    for o in range(len(site.objects)):
        reps = sorted({uf.find(base[o] + i) for i in range(X.sizes[o])})
        reps_per_obj.append(reps)
        rep_index.append({r: k for k, r in enumerate(reps)})
    sizes = tuple(len(r) for r in reps_per_obj)
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        act = X.action[mid]
        col = []
        for r in reps_per_obj[m.tgt]:
            col.append(rep_index[m.src][uf.find(base[m.src] + act[r - base[m.tgt]])])
        action[mid] = tuple(col)
    Q = Presheaf(site, sizes, action, validity=X.validity, label=f"{X.label}/~")
    comps = tuple(
        tuple(rep_index[o][uf.find(base[o] + i)] for i in range(X.sizes[o]))
        for o in range(len(site.objects))
    )
    return Q, NatTrans(X, Q, comps, label="quot")


def coequalizer(f: NatTrans, g: NatTrans) -> tuple[Presheaf, NatTrans]:
    Y = f.target
    pairs = [
        (o, f.components[o][i], g.components[o][i])
        for o in range(len(Y.sizes))
        for i in range(f.source.sizes[o])
    ]
    return quotient(Y, pairs)


def pushout_span(f: NatTrans, g: NatTrans) -> tuple[Presheaf, NatTrans, NatTrans]:
    """Pushout of the span X <-f- Z -g-> Y; returns (P, X->P, Y->P)."""
    X, Y, Z = f.target, g.target, f.source
    C, (inx, iny) = coproduct([X, Y])
    pairs = [
        (o, inx.components[o][f.components[o][i]], iny.components[o][g.components[o][i]])
        for o in range(len(Z.sizes))
        for i in range(Z.sizes[o])
    ]
    Q, q = quotient(C, pairs)
    return Q, compose_nat(q, inx), compose_nat(q, iny)


def finite_colimit(
    nodes: dict[str, Presheaf], edges: list[tuple[str, str, NatTrans]]
) -> tuple[Presheaf, dict[str, NatTrans]]:
    """Colimit of a finite diagram: coproduct then union-find quotient."""
    names = sorted(nodes)
    C, injs = coproduct([nodes[nm] for nm in names])
    inj = dict(zip(names, injs))
    pairs = []
    for a, b, e in edges:
        for o in range(len(C.sizes)):
            for i in range(nodes[a].sizes[o]):
                pairs.append(
                    (o, inj[a].components[o][i], inj[b].components[o][e.components[o][i]])
                )
    Q, q = quotient(C, pairs)
    return Q, {nm: compose_nat(q, inj[nm]) for nm in names}


def induced_from_colimit(
    Q: Presheaf, injections: dict[str, NatTrans], legs: dict[str, NatTrans]
) -> NatTrans:
    """Universal map colim -> W from a compatible cocone of legs."""
    W = next(iter(legs.values())).target
    out = [[-1] * Q.sizes[o] for o in range(len(Q.sizes))]
    for nm, inj in injections.items():
        leg = legs[nm]
        for o in range(len(Q.sizes)):
            for i in range(inj.source.sizes[o]):
                q = inj.components[o][i]
                v = leg.components[o][i]
                if out[o][q] not in (-1, v):
                    raise FunctorialityError("cocone legs disagree on a glued cell")
                out[o][q] = v
    if any(v == -1 for col in out for v in col):
        raise FunctorialityError("colimit cell not covered by any injection")
    return NatTrans(Q, W, tuple(tuple(col) for col in out), label="from-colim")


# -- subobjects --------------------------------------------------------------


@dataclass(frozen=True)
class Subobject:
    ambient: Presheaf
    members: tuple[tuple[int, ...], ...]  # sorted cell indices per object

    def __post_init__(self):
        for o, ms in enumerate(self.members):
            assert tuple(sorted(set(ms))) == ms, "subobject members must be sorted and unique"

    def contains(self, obj: int, cell: int) -> bool:
        return cell in self._member_sets()[obj]

    def _member_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(ms) for ms in self.members)

    def check_closed(self) -> None:
        X = self.ambient
        sets = self._member_sets()
        for mid in X.site.all_mor_ids():
            m = X.site.mors[mid]
            for c in self.members[m.tgt]:
                if X.action[mid][c] not in sets[m.src]:
                    raise FunctorialityError(f"subobject not action-closed at morphism {mid}")

    def as_presheaf(self) -> tuple[Presheaf, NatTrans]:
        X = self.ambient
        index = [{c: k for k, c in enumerate(ms)} for ms in self.members]
        sizes = tuple(len(ms) for ms in self.members)
        action: dict[int, tuple[int, ...]] = {}
        for mid in X.site.all_mor_ids():
            m = X.site.mors[mid]
            action[mid] = tuple(
                index[m.src][X.action[mid][c]] for c in self.members[m.tgt]
            )
        S = Presheaf(X.site, sizes, action, validity=X.validity, label=f"sub({X.label})")
        incl = NatTrans(
            S, X, tuple(tuple(ms) for ms in self.members), label="incl"
        )
        return S, incl

    def is_full(self) -> bool:
        return all(len(ms) == n for ms, n in zip(self.members, self.ambient.sizes))


def full_subobject(X: Presheaf) -> Subobject:
    return Subobject(X, tuple(tuple(range(n)) for n in X.sizes))


def empty_subobject(X: Presheaf) -> Subobject:
    return Subobject(X, tuple(() for _ in X.sizes))


def union_subobjects(S: Subobject, T: Subobject) -> Subobject:
    if S.ambient is not T.ambient and not S.ambient.same_data(T.ambient):
        raise SiteMismatch("subobjects of different ambients")
    return Subobject(
        S.ambient,
        tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(S.members, T.members)),
    )


def intersect_subobjects(S: Subobject, T: Subobject) -> Subobject:
    if S.ambient is not T.ambient and not S.ambient.same_data(T.ambient):
        raise SiteMismatch("subobjects of different ambients")
    return Subobject(
        S.ambient,
        tuple(tuple(sorted(set(a) & set(b))) for a, b in zip(S.members, T.members)),
    )


def image_subobject(f: NatTrans) -> Subobject:
    return Subobject(
        f.target,
        tuple(tuple(sorted(set(c))) for c in f.components),
    )


def preimage_subobject(f: NatTrans, T: Subobject) -> Subobject:
    sets = T._member_sets()
    return Subobject(
        f.source,
        tuple(
            tuple(i for i in range(f.source.sizes[o]) if f.components[o][i] in sets[o])
            for o in range(len(f.components))
        ),
    )


def subobject_closure(X: Presheaf, seed: Iterable[tuple[int, int]]) -> Subobject:
    """Smallest action-closed subset containing the seed cells."""
    sets: list[set[int]] = [set() for _ in X.sizes]
    stack = list(seed)
    for o, c in stack:
        sets[o].add(c)
    while stack:
        o, c = stack.pop()
        for mid in X.site.all_mor_ids():
            m = X.site.mors[mid]
            if m.tgt != o:
                continue
            img = X.action[mid][c]
            if img not in sets[m.src]:
                sets[m.src].add(img)
                stack.append((m.src, img))
    return Subobject(X, tuple(tuple(sorted(s)) for s in sets))


def enumerate_subobjects(X: Presheaf, budget: Optional[int] = None) -> list[Subobject]:
    """All action-closed subsets, in canonical order (graded lexicographic
    on the global cell vector).  Canonical-generation DFS: each closed set
    is emitted exactly once."""
    counter = BudgetCounter(budget, "subobject enumeration")
    cells = list(X.cells())
    cell_pos = {cc: k for k, cc in enumerate(cells)}

    def close_with(current: frozenset, new: tuple[int, int]) -> Optional[frozenset]:
        sub = subobject_closure(X, [c for c in cells if frozenset([c]) <= current] + [new])
        out = frozenset(
            (o, c) for o in range(len(X.sizes)) for c in sub.members[o]
        )
        return out

    results: list[frozenset] = []

    def dfs(idx: int, current: frozenset) -> None:
        counter.tick()
        if idx == len(cells):
            results.append(current)
            return
        cc = cells[idx]
        if cc in current:
            dfs(idx + 1, current)
            return
        dfs(idx + 1, current)  # exclude
        closed = subobject_closure(X, list(current) + [cc])
        flat = frozenset((o, c) for o in range(len(X.sizes)) for c in closed.members[o])
        # canonical generation: the closure may not add cells before idx
        if all(cell_pos[c] >= idx or c in current for c in flat):
            dfs(idx + 1, flat)

    dfs(0, frozenset())
    subs = []
    for flat in results:
        members = tuple(
            tuple(sorted(c for (o2, c) in flat if o2 == o)) for o in range(len(X.sizes))
        )
        subs.append(Subobject(X, members))
    subs.sort(key=lambda s: tuple(s.members))
    return subs


# -- the subobject classifier -------------------------------------------------


def enumerate_sieves(site: FinCat, c: int, budget: Optional[int] = None) -> list[frozenset]:
    """All sieves on object c, as frozensets of morphism ids, canonical order."""
    subs = enumerate_subobjects(yoneda(site, c), budget)
    y = yoneda(site, c)
    out = []
    for s in subs:
        ids = []
        for d in range(len(site.objects)):
            hom = y.cell_data[d]
            ids.extend(hom[k] for k in s.members[d])
        out.append(frozenset(ids))
    out.sort(key=lambda s: tuple(sorted(s)))
    return out


def subobject_classifier(site: FinCat, budget: Optional[int] = None) -> tuple[Presheaf, NatTrans]:
    """Ω with carrier = sieves, plus true: 1 -> Ω picking maximal sieves."""
    sieves = {c: enumerate_sieves(site, c, budget) for c in range(len(site.objects))}
    index = {c: {s: i for i, s in enumerate(sieves[c])} for c in sieves}
    sizes = tuple(len(sieves[c]) for c in range(len(site.objects)))
    action: dict[int, tuple[int, ...]] = {}
    into: dict[int, list[int]] = {
        a: [mid for mid in site.all_mor_ids() if site.mors[mid].tgt == a]
        for a in range(len(site.objects))
    }
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        col = []
        for s in sieves[m.tgt]:
            pulled = frozenset(h for h in into[m.src] if site.compose(mid, h) in s)
            col.append(index[m.src][pulled])
        action[mid] = tuple(col)
    omega = Presheaf(site, sizes, action, validity=site.trunc, label="Omega")
    omega.cell_data = {c: list(sieves[c]) for c in sieves}
    one = terminal(site)
    maximal = tuple(
        (index[c][frozenset(into[c])],) for c in range(len(site.objects))
    )
    true = NatTrans(one, omega, maximal, label="true")
    return omega, true


def characteristic_map(S: Subobject, omega: Presheaf) -> NatTrans:
    """χ_S : X -> Ω with S = χ⁻¹(true)."""
    X = S.ambient
    site = X.site
    sets = S._member_sets()
    index = {c: {s: i for i, s in enumerate(omega.cell_data[c])} for c in omega.cell_data}
    into = {
        a: [mid for mid in site.all_mor_ids() if site.mors[mid].tgt == a]
        for a in range(len(site.objects))
    }
    comps = []
    for c in range(len(site.objects)):
        col = []
        for x in range(X.sizes[c]):
            sieve = frozenset(
                f for f in into[c] if X.action[f][x] in sets[site.mors[f].src]
            )
            col.append(index[c][sieve])
        comps.append(tuple(col))
    return NatTrans(X, omega, tuple(comps), label="chi")


# -- natural transformation search -------------------------------------------


def _into_table(site: FinCat) -> dict[int, list[int]]:
    cached = getattr(site, "_into_cache", None)
    if cached is None:
        cached = {}
        for mid in site.all_mor_ids():
            cached.setdefault(site.mors[mid].tgt, []).append(mid)
        site._into_cache = cached  # type: ignore[attr-defined]
    return cached


def enumerate_nat_trans(
    X: Presheaf,
    Y: Presheaf,
    fixed: Optional[dict[tuple[int, int], int]] = None,
    bijective: bool = False,
    first_only: bool = False,
    budget: Optional[int] = None,
    candidate_filter: Optional[Callable[[int, int], Sequence[int]]] = None,
    counter: Optional[BudgetCounter] = None,
    var_order: str = "asc",
) -> list[NatTrans]:
    """All natural transformations X -> Y.

    Backtracking over cells with full naturality propagation: assigning a
    value forces the images of that cell under every site morphism, so most
    cells are never branched on.  var_order picks the branching order:
    "asc" = level-ascending, cell-ascending (the canonical first-solution
    order), "desc" = level-descending (usually much faster for exhaustive
    enumeration because top cells force their faces).  The returned list is
    always sorted by component tables, so exhaustive results are
    order-independent.
    """
    if X.site is not Y.site:
        raise SiteMismatch("nat trans across sites")
    site = X.site
    if counter is None:
        counter = BudgetCounter(budget, "nat trans enumeration")
    if bijective and X.sizes != Y.sizes:
        return []

    into = _into_table(site)

    cells = [(o, i) for o, n in enumerate(X.sizes) for i in range(n)]
    if var_order == "desc":
        cells.sort(key=lambda ci: (-site.levels[ci[0]], ci[0], ci[1]))
    assign: dict[tuple[int, int], int] = {}
    used: list[set[int]] = [set() for _ in X.sizes]
    results: list[NatTrans] = []

    def propagate(queue: list[tuple[int, int, int]], trail: list[tuple[int, int]]) -> bool:
        while queue:
            o, i, v = queue.pop()
            cur = assign.get((o, i))
            if cur is not None:
                if cur != v:
                    return False
                continue
            if bijective and v in used[o]:
                return False
            assign[(o, i)] = v
            if bijective:
                used[o].add(v)
            trail.append((o, i))
            for mid in into.get(o, ()):
                m = site.mors[mid]
                queue.append((m.src, X.action[mid][i], Y.action[mid][v]))
        return True

    def undo(trail: list[tuple[int, int]]) -> None:
        for o, i in trail:
            v = assign.pop((o, i))
            if bijective:
                used[o].discard(v)

    if fixed:
        trail: list[tuple[int, int]] = []
        if not propagate([(o, i, v) for (o, i), v in fixed.items()], trail):
            return []

    def bt(k: int) -> bool:
        counter.tick()
        while k < len(cells) and cells[k] in assign:
            k += 1
        if k == len(cells):
            comps = tuple(
                tuple(assign[(o, i)] for i in range(X.sizes[o])) for o in range(len(X.sizes))
            )
            results.append(NatTrans(X, Y, comps))
            return first_only
        o, i = cells[k]
        cands = candidate_filter(o, i) if candidate_filter else range(Y.sizes[o])
        for v in cands:
            if bijective and v in used[o]:
                continue
            trail: list[tuple[int, int]] = []
            if propagate([(o, i, v)], trail):
                if bt(k + 1):
                    return True
            undo(trail)
        return False

    bt(0)
    if not first_only:
        results.sort(key=lambda nt: nt.components)
    return results


def hom_count(X: Presheaf, Y: Presheaf, budget: Optional[int] = None) -> int:
    return len(enumerate_nat_trans(X, Y, budget=budget, var_order="desc"))


def _wl_fingerprints(X: Presheaf, rounds: int = 3) -> list[list[int]]:
    """Weisfeiler-Leman-style cell colors, stable across isomorphic data."""
    colors = [[0] * n for n in X.sizes]
    site = X.site
    for _ in range(rounds):
        sigs = {}
        new = [[0] * n for n in X.sizes]
        for o in range(len(X.sizes)):
            for i in range(X.sizes[o]):
                profile = []
                for mid in site.all_mor_ids():
                    m = site.mors[mid]
                    if m.tgt == o:
                        profile.append((mid, colors[m.src][X.action[mid][i]]))
                sig = (o, colors[o][i], tuple(profile))
                new[o][i] = sigs.setdefault(sig, len(sigs))
        colors = new
    return colors


def iso_search(
    X: Presheaf, Y: Presheaf, budget: Optional[int] = None
) -> Optional[NatTrans]:
    """First levelwise-bijective natural map in canonical order, or None.

    Prunes by level cardinalities and iterated action-profile colors.
    """
    if X.sizes != Y.sizes:
        return None
    cx, cy = _wl_fingerprints(X), _wl_fingerprints(Y)
    # colors must match as multisets per object
    for o in range(len(X.sizes)):
        if sorted(cx[o]) != sorted(cy[o]):
            return None
    by_color: dict[tuple[int, int], list[int]] = {}
    for o in range(len(Y.sizes)):
        for j in range(Y.sizes[o]):
            by_color.setdefault((o, cy[o][j]), []).append(j)

    def filt(o: int, i: int) -> Sequence[int]:
        return by_color.get((o, cx[o][i]), ())

    found = enumerate_nat_trans(
        X, Y, bijective=True, first_only=True, budget=budget,
        candidate_filter=filt, var_order="desc",
    )
    return found[0] if found else None


# -- exponentials -------------------------------------------------------------


@dataclass
class Exponential:
    """X^Y with decodable cells: table[c] lists the maps y(c)×Y -> X."""

    presheaf: Presheaf
    base: Presheaf  # X
    exponent: Presheaf  # Y
    table: dict[int, list[NatTrans]]
    products: dict[int, Presheaf]  # y(c) × Y
    product_projs: dict[int, tuple[NatTrans, NatTrans]]

    def index_of(self, c: int, nt_components: tuple) -> int:
        for i, nt in enumerate(self.table[c]):
            if nt.components == nt_components:
                return i
        raise KeyError("cell not found in exponential table")


def exponential(
    X: Presheaf,
    Y: Presheaf,
    budget: Optional[int] = None,
    validity_drop: Optional[int] = None,
) -> Exponential:
    """X^Y computed by the general formula: cells at c are natural maps
    y(c)×Y -> X, acted on by precomposition.

    validity_drop: when the exponent is (isomorphic to) a k-fold interval
    power the caller passes k and validity becomes min(vX, vY) - k;
    otherwise the result is intrinsic-only (validity 0) on truncated sites.
    """
    if X.site is not Y.site:
        raise SiteMismatch("exponential across sites")
    site = X.site
    counter = BudgetCounter(budget, "exponential")
    ys = {c: yoneda(site, c) for c in range(len(site.objects))}
    products: dict[int, Presheaf] = {}
    projs: dict[int, tuple[NatTrans, NatTrans]] = {}
    for c in ys:
        P, p1, p2 = product2(ys[c], Y)
        products[c] = P
        projs[c] = (p1, p2)
    table = {
        c: enumerate_nat_trans(products[c], X, counter=counter, var_order="desc")
        for c in products
    }
    index = {
        c: {nt.components: i for i, nt in enumerate(table[c])} for c in table
    }
    sizes = tuple(len(table[c]) for c in range(len(site.objects)))
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        # precompose with y(f) × id_Y : y(a)×Y -> y(b)×Y
        yf = yoneda_map(site, mid)
        idy = identity_nat(Y)
        shift = product_of_maps(yf, idy, products[m.src], products[m.tgt])
        col = []
        for nt in table[m.tgt]:
            moved = compose_nat(nt, shift)
            col.append(index[m.src][moved.components])
        action[mid] = tuple(col)
    if site.trunc is None:
        validity: Optional[int] = None
    elif validity_drop is not None:
        base_v = combine_validity(X.validity, Y.validity)
        v = (site.trunc if base_v is None else base_v) - validity_drop
        if v < 0:
            raise ValidityUnderflow("exponential drops validity below zero")
        validity = v
    else:
        validity = 0  # intrinsic-only
    E = Presheaf(
        site,
        sizes,
        action,
        validity=validity,
        label=f"({X.label})^({Y.label})",
    )
    return Exponential(E, X, Y, table, products, projs)


def exponential_post(E_src: Exponential, E_tgt: Exponential, f: NatTrans) -> NatTrans:
    """f^Y : X^Y -> X'^Y for f: X -> X' (same exponent)."""
    comps = []
    for c in range(len(E_src.presheaf.sizes)):
        idx = {nt.components: i for i, nt in enumerate(E_tgt.table[c])}
        col = []
        for nt in E_src.table[c]:
            col.append(idx[compose_nat(f, nt).components])
        comps.append(tuple(col))
    return NatTrans(E_src.presheaf, E_tgt.presheaf, tuple(comps), label="post")


def exponential_pre(E_src: Exponential, E_tgt: Exponential, u: NatTrans) -> NatTrans:
    """X^u : X^B -> X^A for u: A -> B, same base X: precompose id×u."""
    comps = []
    for c in range(len(E_src.presheaf.sizes)):
        yc = yoneda(E_src.presheaf.site, c)
        shift = product_of_maps(
            identity_nat(yc), u, E_tgt.products[c], E_src.products[c]
        )
        idx = {nt.components: i for i, nt in enumerate(E_tgt.table[c])}
        col = []
        for nt in E_src.table[c]:
            col.append(idx[compose_nat(nt, shift).components])
        comps.append(tuple(col))
    return NatTrans(E_src.presheaf, E_tgt.presheaf, tuple(comps), label="pre")


def evaluation_map(E: Exponential, P: Presheaf) -> NatTrans:
    """ev : X^Y × Y -> X on the given product presheaf P = (X^Y)×Y."""
    X, Y = E.base, E.exponent
    site = X.site
    comps = []
    for c in range(len(site.objects)):
        ny = Y.sizes[c]
        yc_cells = yoneda(site, c)
        id_idx = yc_cells.cell_data[c].index(site.identity(c))
        col = []
        for phi_i in range(E.presheaf.sizes[c]):
            nt = E.table[c][phi_i]
            for y in range(ny):
                pair_idx = id_idx * ny + y
                col.append(nt.components[c][pair_idx])
        comps.append(tuple(col))
    return NatTrans(P, X, tuple(comps), label="eval")


def transpose_map(
    f: NatTrans, Z: Presheaf, E: Exponential, P_src: Presheaf
) -> NatTrans:
    """Transpose f: Z×Y -> X into Z -> X^Y; P_src must be product2(Z, Y)."""
    X, Y = E.base, E.exponent
    site = X.site
    comps = []
    for c in range(len(site.objects)):
        yc = yoneda(site, c)
        idx = {nt.components: i for i, nt in enumerate(E.table[c])}
        col = []
        for z in range(Z.sizes[c]):
            # the natural map y(c)×Y -> X: (g: d->c, y) -> f_d(Z(g)(z), y)
            sub = []
            for d in range(len(site.objects)):
                ny = Y.sizes[d]
                row = []
                for gi, g in enumerate(yc.cell_data[d]):
                    zg = Z.action[g][z]
                    for y in range(ny):
                        row.append(f.components[d][zg * ny + y])
                sub.append(tuple(row))
            col.append(idx[tuple(sub)])
        comps.append(tuple(col))
    return NatTrans(Z, E.presheaf, tuple(comps), label="transpose")


# -- pushforward --------------------------------------------------------------


def pushforward(
    a: NatTrans, f: NatTrans, budget: Optional[int] = None
) -> tuple[Presheaf, NatTrans]:
    """f_*A -> Y for a: A -> X and f: X -> Y.

    Cells at c are pairs (y ∈ Y(c), s) where s is a natural section over y:
    for each (g: d->c, x ∈ X(d)) with f(x) = Y(g)(y), an element
    s(g,x) ∈ A(d) with a(s(g,x)) = x, natural in (g,x).
    """
    A, X, Y = a.source, a.target, f.target
    site = X.site
    counter = BudgetCounter(budget, "pushforward")
    into = {
        c: [mid for mid in site.all_mor_ids() if site.mors[mid].tgt == c]
        for c in range(len(site.objects))
    }
    fibers: dict[tuple[int, int], list[int]] = {}
    for d in range(len(site.objects)):
        for x in range(X.sizes[d]):
            fibers.setdefault((d, x), [])
    for d in range(len(site.objects)):
        for al in range(A.sizes[d]):
            fibers[(d, a.components[d][al])].append(al)

    def sections(c: int, y: int) -> list[tuple[tuple[tuple[int, int], int], ...]]:
        # domain pairs in canonical order
        domain: list[tuple[int, int]] = []
        for g in into[c]:
            d = site.mors[g].src
            for x in range(X.sizes[d]):
                if f.components[d][x] == Y.action[g][y]:
                    domain.append((g, x))
        dom_pos = {p: k for k, p in enumerate(domain)}
        assign: dict[tuple[int, int], int] = {}
        out: list[tuple[tuple[tuple[int, int], int], ...]] = []

        def propagate(queue: list[tuple[tuple[int, int], int]], trail: list) -> bool:
            while queue:
                key, v = queue.pop()
                cur = assign.get(key)
                if cur is not None:
                    if cur != v:
                        return False
                    continue
                assign[key] = v
                trail.append(key)
                g, x = key
                d = site.mors[g].src
                for h in into[d]:
                    e = site.mors[h].src
                    key2 = (site.compose(g, h), X.action[h][x])
                    queue.append((key2, A.action[h][v]))
            return True

        def bt(k: int) -> None:
            counter.tick()
            while k < len(domain) and domain[k] in assign:
                k += 1
            if k == len(domain):
                out.append(tuple(sorted(assign.items(), key=lambda kv: dom_pos[kv[0]])))
                return
            key = domain[k]
            g, x = key
            d = site.mors[g].src
            for v in fibers[(d, x)]:
                trail: list = []
                if propagate([(key, v)], trail):
                    bt(k + 1)
                for kk in trail:
                    del assign[kk]

        bt(0)
        return out

    cells: dict[int, list[tuple[int, tuple]]] = {}
    for c in range(len(site.objects)):
        lst = []
        for y in range(Y.sizes[c]):
            for s in sections(c, y):
                lst.append((y, s))
        cells[c] = lst
    index = {c: {cell: i for i, cell in enumerate(cells[c])} for c in cells}
    sizes = tuple(len(cells[c]) for c in range(len(site.objects)))
    action: dict[int, tuple[int, ...]] = {}
    for mid in site.all_mor_ids():
        m = site.mors[mid]
        col = []
        for y, s in cells[m.tgt]:
            stab = dict(s)
            y2 = Y.action[mid][y]
            s2 = []
            for g2 in into[m.src]:
                d = site.mors[g2].src
                for x in range(X.sizes[d]):
                    if f.components[d][x] == Y.action[g2][y2]:
                        s2.append(((g2, x), stab[(site.compose(mid, g2), x)]))
            col.append(index[m.src][(y2, tuple(s2))])
        action[mid] = tuple(col)
    PF = Presheaf(
        site,
        sizes,
        action,
        validity=combine_validity(A.validity, X.validity, Y.validity),
        label=f"push({A.label})",
    )
    PF.cell_data = {c: list(cells[c]) for c in cells}
    proj = NatTrans(
        PF,
        Y,
        tuple(tuple(y for y, _ in cells[c]) for c in range(len(site.objects))),
        label="push-proj",
    )
    return PF, proj


# -- presheaf functor precomposition ------------------------------------------


def precompose(X: Presheaf, F: SiteFunctor, validity: Optional[int] = None) -> Presheaf:
    """X ∘ F as a presheaf on F.source."""
    src = F.source
    sizes = tuple(X.sizes[F.obj_map[o]] for o in range(len(src.objects)))
    action = {mid: X.action[F.mor_map[mid]] for mid in src.all_mor_ids()}
    return Presheaf(src, sizes, action, validity=validity, label=f"{X.label}∘F")


def inclusion_functor(sub: FinCat, full: FinCat, obj_map: dict[int, int]) -> SiteFunctor:
    """Inclusion of a full subcategory given the object correspondence;
    morphisms are matched by payload."""
    mor_map = {}
    for mid in sub.all_mor_ids():
        m = sub.mors[mid]
        mor_map[mid] = full.mor_by_payload(obj_map[m.src], obj_map[m.tgt], m.payload)
    return SiteFunctor(sub, full, dict(obj_map), mor_map)


# -- deterministic random instances -------------------------------------------


def random_presheaf(
    site: FinCat, rng, max_generators: int = 2, max_glue: int = 2,
    max_level: Optional[int] = None,
) -> Presheaf:
    """A random colimit of representables: deterministic given the rng state.

    max_level caps the dimension of the representable generators so test
    instances stay enumerable.
    """
    pool = [
        o for o in range(len(site.objects))
        if max_level is None or site.levels[o] <= max_level
    ]
    k = rng.randrange(1, max_generators + 1)
    gens = [yoneda(site, pool[rng.randrange(len(pool))]) for _ in range(k)]
    C, _ = coproduct(gens)
    pairs = []
    for _ in range(rng.randrange(0, max_glue + 1)):
        o = rng.randrange(len(site.objects))
        if C.sizes[o] >= 2:
            a, b = rng.randrange(C.sizes[o]), rng.randrange(C.sizes[o])
            pairs.append((o, a, b))
    Q, _ = quotient(C, pairs)
    Q.validity = site.trunc
    return Q


def random_nat_trans(X: Presheaf, Y: Presheaf, rng, budget: Optional[int] = None) -> Optional[NatTrans]:
    """First natural map found with rng-shuffled candidate order."""
    orders = {}

    def filt(o: int, i: int) -> Sequence[int]:
        key = (o, i)
        if key not in orders:
            cands = list(range(Y.sizes[o]))
            rng.shuffle(cands)
            orders[key] = cands
        return orders[key]

    found = enumerate_nat_trans(X, Y, first_only=True, budget=budget, candidate_filter=filt)
    return found[0] if found else None
