"""Finite categories with explicit object and morphism tables.

Everything downstream (presheaves, slices, nerves) runs over a FinCat.
Morphisms are global integer ids; composition is memoized through a
callback so large sites (e.g. the cube site at high truncation) never
materialize their full composition table unless asked to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional


class CategoryLawError(Exception):
    """A composition/identity table violates the category laws."""


@dataclass(frozen=True)
class Mor:
    """One arrow: src/tgt are object indices, payload is site-specific."""

    mid: int
    src: int
    tgt: int
    payload: Any = None


class FinCat:
    """A finite category over indexed objects.

    objects: hashable labels in a fixed order (their index is the object id).
    levels:  per-object truncation level (cube dimension or analogue);
             used by the validity bookkeeping.  trunc is the max meaningful
             level, or None when the site is not a truncation of anything.
    """

    def __init__(
        self,
        objects: Iterable[Any],
        compose_fn: Optional[Callable[[Mor, Mor], Any]] = None,
        levels: Optional[list[int]] = None,
        trunc: Optional[int] = None,
        name: str = "fincat",
    ):
        self.objects: tuple[Any, ...] = tuple(objects)
        self.obj_index: dict[Any, int] = {o: i for i, o in enumerate(self.objects)}
        self.mors: list[Mor] = []
        self._hom: dict[tuple[int, int], list[int]] = {}
        self._payload_index: dict[tuple[int, int, Any], int] = {}
        self._identity: dict[int, int] = {}
        self._comp: dict[tuple[int, int], int] = {}
        self._compose_fn = compose_fn
        self.levels = list(levels) if levels is not None else [0] * len(self.objects)
        self.trunc = trunc
        self.name = name

    # -- construction -----------------------------------------------------

    def add_mor(self, src: int, tgt: int, payload: Any = None) -> int:
        mid = len(self.mors)
        self.mors.append(Mor(mid, src, tgt, payload))
        self._hom.setdefault((src, tgt), []).append(mid)
        self._payload_index[(src, tgt, payload)] = mid
        return mid

    def set_identity(self, obj: int, mid: int) -> None:
        self._identity[obj] = mid

    def set_composite(self, g: int, f: int, h: int) -> None:
        self._comp[(g, f)] = h

    # -- queries -----------------------------------------------------------

    def hom(self, src: int, tgt: int) -> list[int]:
        return self._hom.get((src, tgt), [])

    def identity(self, obj: int) -> int:
        return self._identity[obj]

    def mor_by_payload(self, src: int, tgt: int, payload: Any) -> int:
        return self._payload_index[(src, tgt, payload)]

    def all_mor_ids(self) -> range:
        return range(len(self.mors))

    def is_identity(self, mid: int) -> bool:
        m = self.mors[mid]
        return m.src == m.tgt and self._identity.get(m.src) == mid

    def compose(self, g: int, f: int) -> int:
        """Composite g∘f for f: a→b, g: b→c."""
        key = (g, f)
        got = self._comp.get(key)
        if got is not None:
            return got
        mf, mg = self.mors[f], self.mors[g]
        if mf.tgt != mg.src:
            raise CategoryLawError(
                f"not composable: {mf.src}->{mf.tgt} then {mg.src}->{mg.tgt}"
            )
        if self._compose_fn is None:
            raise CategoryLawError("no composite registered and no compose callback")
        payload = self._compose_fn(mg, mf)
        h = self._payload_index[(mf.src, mg.tgt, payload)]
        self._comp[key] = h
        return h

    def composable_pairs(self) -> Iterable[tuple[int, int]]:
        for g in self.all_mor_ids():
            mg = self.mors[g]
            for a in range(len(self.objects)):
                for f in self.hom(a, mg.src):
                    yield (g, f)

    # -- law checks ---------------------------------------------------------

    def check_laws(self, triples: Optional[Iterable[tuple[int, int, int]]] = None) -> None:
        """Identity laws for all morphisms; associativity on the given triples
        (all composable triples when None)."""
        for mid in self.all_mor_ids():
            m = self.mors[mid]
            if self.compose(mid, self.identity(m.src)) != mid:
                raise CategoryLawError(f"right identity fails at morphism {mid}")
            if self.compose(self.identity(m.tgt), mid) != mid:
                raise CategoryLawError(f"left identity fails at morphism {mid}")
        if triples is None:
            triples = self._all_triples()
        for h, g, f in triples:
            if self.compose(self.compose(h, g), f) != self.compose(h, self.compose(g, f)):
                raise CategoryLawError(f"associativity fails at ({h},{g},{f})")

    def _all_triples(self) -> Iterable[tuple[int, int, int]]:
        for g, f in list(self.composable_pairs()):
            mg = self.mors[g]
            for c in range(len(self.objects)):
                for h in self.hom(mg.tgt, c):
                    yield (h, g, f)

    def __repr__(self) -> str:
        return f"FinCat({self.name}: {len(self.objects)} objects, {len(self.mors)} morphisms)"


def dense_fincat(
    objects: list[Any],
    mor_specs: list[tuple[Any, Any, Any]],
    identities: dict[Any, Any],
    composites: Callable[[Any, Any], Any],
    name: str = "fincat",
) -> FinCat:
    """Build a FinCat from labelled data.

    mor_specs: (src_label, tgt_label, payload) in canonical order.
    identities: object label -> payload of its identity.
    composites: (g_payload, f_payload) -> h_payload.
    """
    cat = FinCat(objects, compose_fn=lambda mg, mf: composites(mg.payload, mf.payload), name=name)
    for src, tgt, payload in mor_specs:
        cat.add_mor(cat.obj_index[src], cat.obj_index[tgt], payload)
    for obj, payload in identities.items():
        i = cat.obj_index[obj]
        cat.set_identity(i, cat.mor_by_payload(i, i, payload))
    return cat


@dataclass
class SiteFunctor:
    """A functor between FinCats given by explicit tables.

    obj_map: source object index -> target object index.
    mor_map: source morphism id -> target morphism id.
    """

    source: FinCat
    target: FinCat
    obj_map: dict[int, int] = field(default_factory=dict)
    mor_map: dict[int, int] = field(default_factory=dict)

    def check(self) -> None:
        for mid in self.source.all_mor_ids():
            m = self.source.mors[mid]
            im = self.target.mors[self.mor_map[mid]]
            if im.src != self.obj_map[m.src] or im.tgt != self.obj_map[m.tgt]:
                raise CategoryLawError(f"functor breaks src/tgt at morphism {mid}")
        for o in range(len(self.source.objects)):
            if self.mor_map[self.source.identity(o)] != self.target.identity(self.obj_map[o]):
                raise CategoryLawError(f"functor breaks identity at object {o}")
        for g, f in self.source.composable_pairs():
            lhs = self.mor_map[self.source.compose(g, f)]
            rhs = self.target.compose(self.mor_map[g], self.mor_map[f])
            if lhs != rhs:
                raise CategoryLawError(f"functor breaks composition at ({g},{f})")


def enumerate_functors(src: FinCat, tgt: FinCat, budget: Optional[int] = None) -> list[SiteFunctor]:
    """All functors src -> tgt, in canonical order.

    Backtracks over object images, then over hom-wise morphism images with
    identity/composition pruning.  budget counts search nodes.
    """
    from .budget import BudgetCounter

    counter = BudgetCounter(budget)
    n_obj = len(src.objects)
    results: list[SiteFunctor] = []
    mor_order = sorted(src.all_mor_ids(), key=lambda m: (src.mors[m].src, src.mors[m].tgt, m))
    non_id_mors = [m for m in mor_order if not src.is_identity(m)]

    def assign_mors(obj_map: dict[int, int]) -> None:
        mor_map: dict[int, int] = {}
        for o in range(n_obj):
            mor_map[src.identity(o)] = tgt.identity(obj_map[o])

        def bt(k: int) -> None:
            counter.tick()
            if k == len(non_id_mors):
                # composition closure over all composable pairs
                for g, f in src.composable_pairs():
                    if tgt.compose(mor_map[g], mor_map[f]) != mor_map[src.compose(g, f)]:
                        return
                results.append(SiteFunctor(src, tgt, dict(obj_map), dict(mor_map)))
                return
            mid = non_id_mors[k]
            m = src.mors[mid]
            for cand in tgt.hom(obj_map[m.src], obj_map[m.tgt]):
                mor_map[mid] = cand
                ok = True
                # partial composition check against already-assigned arrows
                for g, f in src.composable_pairs():
                    if g in mor_map and f in mor_map:
                        h = src.compose(g, f)
                        if h in mor_map and tgt.compose(mor_map[g], mor_map[f]) != mor_map[h]:
                            ok = False
                            break
                if ok:
                    bt(k + 1)
                del mor_map[mid]

        bt(0)

    def assign_objs(i: int, obj_map: dict[int, int]) -> None:
        counter.tick()
        if i == n_obj:
            assign_mors(obj_map)
            return
        for t in range(len(tgt.objects)):
            ok = True
            # prune: every hom that must map somewhere needs a nonempty target hom
            for j in range(i):
                if src.hom(i, j) and not tgt.hom(t, obj_map[j]):
                    ok = False
                if src.hom(j, i) and not tgt.hom(obj_map[j], t):
                    ok = False
            if src.hom(i, i) and not tgt.hom(t, t):
                ok = False
            if ok:
                obj_map[i] = t
                assign_objs(i + 1, obj_map)
                del obj_map[i]

    assign_objs(0, {})
    return results
