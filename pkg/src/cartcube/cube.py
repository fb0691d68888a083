"""The Cartesian cube category and its truncations.

An arrow [m] -> [n] is stored as an n-tuple of symbols drawn from
{0, x_1..x_m, 1}, encoded as integers 0 (zero), 1..m (variables),
m+1 (one).  Composition is substitution; the canonical hom ordering is
plain lexicographic order on entry tuples, which realizes
0 < x_1 < ... < x_m < 1.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .fincat import FinCat

HOM_TABLE_BUDGET = 10_000_000


class DimensionMismatch(Exception):
    pass


class HomBudgetError(Exception):
    pass


@dataclass(frozen=True)
class CubeMap:
    """An arrow [src] -> [tgt] of the cube category, in tuple form."""

    src: int
    tgt: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.tgt:
            raise DimensionMismatch(f"expected {self.tgt} entries, got {len(self.entries)}")
        for e in self.entries:
            if not 0 <= e <= self.src + 1:
                raise DimensionMismatch(f"entry {e} out of range for source [{self.src}]")

    def is_zero(self, j: int) -> bool:
        return self.entries[j] == 0

    def is_one(self, j: int) -> bool:
        return self.entries[j] == self.src + 1

    def var(self, j: int) -> int:
        """1-based variable index at slot j, or 0 when the entry is constant."""
        e = self.entries[j]
        return e if 1 <= e <= self.src else 0

    def __str__(self) -> str:
        return format_map_literal(self)


def identity_map(n: int) -> CubeMap:
    return CubeMap(n, n, tuple(range(1, n + 1)))


def compose(g: CubeMap, f: CubeMap) -> CubeMap:
    """g∘f by substituting f's entries into g's variable slots."""
    if f.tgt != g.src:
        raise DimensionMismatch(f"cannot compose [{g.src}]->[{g.tgt}] after [{f.src}]->[{f.tgt}]")
    one_out = f.src + 1
    out = []
    for e in g.entries:
        if e == 0:
            out.append(0)
        elif e == g.src + 1:
            out.append(one_out)
        else:
            out.append(f.entries[e - 1])
    return CubeMap(f.src, g.tgt, tuple(out))


def monoidal_product(f: CubeMap, g: CubeMap) -> CubeMap:
    """f ⊗ g : [f.src + g.src] -> [f.tgt + g.tgt], juxtaposing the tuples
    and shifting g's variables past f's source."""
    m = f.src
    left = [m + g.src + 1 if e == m + 1 else e for e in f.entries]
    right = [m + g.src + 1 if e == g.src + 1 else (m + e if e else 0) for e in g.entries]
    return CubeMap(f.src + g.src, f.tgt + g.tgt, tuple(left + right))


# Named generators.

def face(n: int, i: int, eps: int) -> CubeMap:
    """δ: [n] -> [n+1] inserting the constant eps at slot i (1-based)."""
    entries = list(range(1, n + 1))
    entries.insert(i - 1, 0 if eps == 0 else n + 1)
    return CubeMap(n, n + 1, tuple(entries))


def degeneracy(n: int, i: int) -> CubeMap:
    """σ: [n+1] -> [n] dropping variable i (1-based)."""
    entries = [e if e < i else e + 1 for e in range(1, n + 1)]
    return CubeMap(n + 1, n, tuple(entries))


def diagonal(n: int = 1) -> CubeMap:
    """[n] -> [2n] duplicating all variables; n=1 is the interval diagonal."""
    return CubeMap(n, 2 * n, tuple(list(range(1, n + 1)) * 2))


def projection(n: int, keep: int) -> CubeMap:
    """[n] -> [1] returning variable `keep` (1-based)."""
    return CubeMap(n, 1, (keep,))


def constant(n: int, eps: int) -> CubeMap:
    """[n] -> [1] constant at the endpoint eps."""
    return CubeMap(n, 1, (0,) if eps == 0 else (n + 1,))


def enumerate_hom(m: int, n: int) -> list[CubeMap]:
    """All maps [m] -> [n] in canonical (lexicographic) order; (m+2)^n maps."""
    return [CubeMap(m, n, t) for t in itertools.product(range(m + 2), repeat=n)]


class TruncatedCubeSite(FinCat):
    """The full subcategory of the cube category on objects [0..N].

    Hom tables are built eagerly in canonical order; the composition table
    fills lazily through substitution.  Immutable after construction.
    """

    def __init__(self, N: int, hom_budget: int = HOM_TABLE_BUDGET):
        if N < 0:
            raise ValueError("truncation level must be >= 0")
        total = sum((m + 2) ** n for m in range(N + 1) for n in range(N + 1))
        if total > hom_budget:
            raise HomBudgetError(f"hom tables need {total} entries, budget {hom_budget}")
        super().__init__(
            objects=list(range(N + 1)),
            compose_fn=lambda mg, mf: compose(mg.payload, mf.payload),
            levels=list(range(N + 1)),
            trunc=N,
            name=f"cube:{N}",
        )
        self.N = N
        for m in range(N + 1):
            for n in range(N + 1):
                for cm in enumerate_hom(m, n):
                    self.add_mor(m, n, cm)
        for n in range(N + 1):
            self.set_identity(n, self.mor_by_payload(n, n, identity_map(n)))

    def map_id(self, cm: CubeMap) -> int:
        return self.mor_by_payload(cm.src, cm.tgt, cm)

    def cube_map(self, mid: int) -> CubeMap:
        return self.mors[mid].payload

    def verify(self, samples: int = 2000) -> None:
        """Category laws: exhaustive for N <= 2, deterministic sample above
        (full triple enumeration is far too large from N = 3 up)."""
        if self.N <= 2:
            self.check_laws()
            return
        total = len(self.mors)
        triples = []
        state = 0x9E3779B1
        for _ in range(samples):
            state = (state * 0x5DEECE66D + 0xB) % (1 << 48)
            f = self.mors[state % total]
            gs = [g for n in range(self.N + 1) for g in self.hom(f.tgt, n)]
            state = (state * 0x5DEECE66D + 0xB) % (1 << 48)
            g = gs[state % len(gs)]
            hs = [h for n in range(self.N + 1) for h in self.hom(self.mors[g].tgt, n)]
            state = (state * 0x5DEECE66D + 0xB) % (1 << 48)
            h = hs[state % len(hs)]
            triples.append((h, g, f.mid))
        self.check_laws(triples)


_SITES: dict[int, TruncatedCubeSite] = {}


def build_site(N: int, hom_budget: int = HOM_TABLE_BUDGET) -> TruncatedCubeSite:
    """Memoized construction of the truncated cube site, laws verified."""
    site = _SITES.get(N)
    if site is None:
        site = TruncatedCubeSite(N, hom_budget)
        site.verify()
        _SITES[N] = site
    return site


# Textual literals: "[2->1: x1]", "[0->2: 0,1]".

_LITERAL_RE = re.compile(r"^\[(\d+)->(\d+):\s*([^\]]*)\]$")


def format_map_literal(cm: CubeMap) -> str:
    parts = []
    for e in cm.entries:
        if e == 0:
            parts.append("0")
        elif e == cm.src + 1:
            parts.append("1")
        else:
            parts.append(f"x{e}")
    return f"[{cm.src}->{cm.tgt}: {','.join(parts)}]"


def parse_map_literal(text: str) -> CubeMap:
    mt = _LITERAL_RE.match(text.strip())
    if not mt:
        raise ValueError(f"bad cube map literal: {text!r}")
    m, n = int(mt.group(1)), int(mt.group(2))
    body = mt.group(3).strip()
    raw = [] if body == "" else [p.strip() for p in body.split(",")]
    if len(raw) != n:
        raise ValueError(f"literal {text!r} needs {n} entries, got {len(raw)}")
    entries = []
    for p in raw:
        if p == "0":
            entries.append(0)
        elif p == "1":
            entries.append(m + 1)
        elif p.startswith("x"):
            k = int(p[1:])
            if not 1 <= k <= m:
                raise ValueError(f"variable {p} out of range in {text!r}")
            entries.append(k)
        else:
            raise ValueError(f"bad entry {p!r} in {text!r}")
    return CubeMap(m, n, tuple(entries))
