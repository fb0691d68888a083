"""JSON formats for presheaves, maps, finite categories, and certificates.

Round-trip serialization is identity on the canonical representation.
Cube-site morphisms are keyed by their textual literal (e.g. "[2->1: x1]");
plain FinCat morphisms by index.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

from .cube import TruncatedCubeSite, build_site, format_map_literal, parse_map_literal
from .fincat import FinCat, dense_fincat
from .presheaf import NatTrans, Presheaf
from .report import SCHEMA_VERSION, stable_digest


class FormatError(Exception):
    pass


def site_to_json(site: FinCat) -> dict[str, Any]:
    if isinstance(site, TruncatedCubeSite):
        return {"kind": "cube", "N": site.N}
    return {
        "kind": "fincat",
        "objects": [str(o) for o in site.objects],
        "morphisms": [
            {"src": m.src, "tgt": m.tgt, "label": str(m.payload)} for m in site.mors
        ],
        "identities": [site.identity(o) for o in range(len(site.objects))],
        "composition": [
            [g, f, site.compose(g, f)] for g, f in site.composable_pairs()
        ],
    }


def site_from_json(data: dict[str, Any]) -> FinCat:
    if data["kind"] == "cube":
        return build_site(int(data["N"]))
    if data["kind"] == "fincat":
        objects = list(data["objects"])
        cat = FinCat(objects, name="fincat")
        for spec in data["morphisms"]:
            cat.add_mor(int(spec["src"]), int(spec["tgt"]), spec.get("label"))
        for o, mid in enumerate(data["identities"]):
            cat.set_identity(o, int(mid))
        for g, f, h in data["composition"]:
            cat.set_composite(int(g), int(f), int(h))
        cat.check_laws()
        return cat
    raise FormatError(f"unknown site kind {data.get('kind')!r}")


def _mor_key(site: FinCat, mid: int) -> str:
    if isinstance(site, TruncatedCubeSite):
        return format_map_literal(site.cube_map(mid))
    return str(mid)


def _mor_from_key(site: FinCat, key: str) -> int:
    if isinstance(site, TruncatedCubeSite):
        return site.map_id(parse_map_literal(key))
    return int(key)


def presheaf_to_json(X: Presheaf) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "site": site_to_json(X.site),
        "levels": {str(o): X.sizes[o] for o in range(len(X.sizes))},
        "action": {
            _mor_key(X.site, mid): list(X.action[mid]) for mid in X.site.all_mor_ids()
        },
        "validity": X.validity,
        "label": X.label,
    }


def presheaf_from_json(data: dict[str, Any], site: Optional[FinCat] = None) -> Presheaf:
    if site is None:
        site = site_from_json(data["site"])
    sizes = tuple(
        int(data["levels"][str(o)]) for o in range(len(site.objects))
    )
    action = {
        _mor_from_key(site, key): tuple(vals) for key, vals in data["action"].items()
    }
    if set(action) != set(site.all_mor_ids()):
        raise FormatError("action table does not cover the site's morphisms")
    X = Presheaf(site, sizes, action, validity=data.get("validity"), label=data.get("label", ""))
    X.audit()
    return X


def nat_trans_to_json(f: NatTrans) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "site": site_to_json(f.source.site),
        "source": presheaf_to_json(f.source),
        "target": presheaf_to_json(f.target),
        "components": {str(o): list(c) for o, c in enumerate(f.components)},
    }


def nat_trans_from_json(data: dict[str, Any]) -> NatTrans:
    site = site_from_json(data["site"])
    src = presheaf_from_json(data["source"], site)
    tgt = presheaf_from_json(data["target"], site)
    comps = tuple(
        tuple(data["components"][str(o)]) for o in range(len(site.objects))
    )
    f = NatTrans(src, tgt, comps)
    f.check_natural()
    return f


def nat_trans_digest(f: NatTrans) -> str:
    data = nat_trans_to_json(f)
    data.pop("schema", None)
    return stable_digest(data)


def load_map_file(path: str | Path) -> NatTrans:
    with open(path, "r", encoding="utf-8") as fh:
        return nat_trans_from_json(json.load(fh))


def load_presheaf_file(path: str | Path) -> Presheaf:
    with open(path, "r", encoding="utf-8") as fh:
        return presheaf_from_json(json.load(fh))


def dump_json(data: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
