#!/usr/bin/env python3
"""Build a screening database export from the Materials Project API.

Optional tooling: the screening pipeline itself only reads the line-
delimited JSON export this script writes, so tests never touch the
network. Needs an API key in the MP_API_KEY environment variable and the
`requests` package. The service schema changes over time; expect to adapt
field names.

Usage:
    MP_API_KEY=... python scripts/fetch_materials_project.py out.jsonl
"""

import json
import os
import sys

import requests

API = "https://api.materialsproject.org"
PAGE = 500

# point groups with an inversion center
CENTROSYMMETRIC_POINT_GROUPS = {
    "-1", "2/m", "mmm", "4/m", "4/mmm", "-3", "-3m", "6/m", "6/mmm",
    "m-3", "m-3m",
}


def get(session, path, params):
    response = session.get(API + path, params=params, timeout=120)
    response.raise_for_status()
    return response.json()["data"]


def fetch_all(session, path, fields):
    skip = 0
    while True:
        page = get(session, path, {
            "_fields": ",".join(fields), "_limit": PAGE, "_skip": skip})
        if not page:
            return
        yield from page
        skip += len(page)


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 1
    key = os.environ.get("MP_API_KEY")
    if not key:
        print("set MP_API_KEY", file=sys.stderr)
        return 1

    session = requests.Session()
    session.headers["X-API-KEY"] = key

    print("fetching elasticity ...", file=sys.stderr)
    elastic = {
        d["material_id"]: d
        for d in fetch_all(session, "/materials/elasticity/",
                           ["material_id", "bulk_modulus", "shear_modulus"])}
    print("fetching dielectric tensors ...", file=sys.stderr)
    dielectric = {
        d["material_id"]: d
        for d in fetch_all(session, "/materials/dielectric/",
                           ["material_id", "e_total", "e_electronic"])}

    print("fetching summaries ...", file=sys.stderr)
    count = 0
    with open(sys.argv[1], "w", encoding="utf-8") as out:
        fields = ["material_id", "formula_pretty", "symmetry", "band_gap",
                  "is_magnetic", "total_magnetization", "density", "nsites",
                  "volume"]
        for doc in fetch_all(session, "/materials/summary/", fields):
            mid = doc["material_id"]
            symmetry = doc.get("symmetry") or {}
            rec = {
                "material_id": mid,
                "formula": doc.get("formula_pretty", ""),
                "spacegroup_symbol": symmetry.get("symbol", ""),
                "is_centrosymmetric": symmetry.get("point_group")
                in CENTROSYMMETRIC_POINT_GROUPS,
                "band_gap_pbe_ev": doc.get("band_gap"),
                "is_magnetic": bool(doc.get("is_magnetic")),
                "total_magnetization_mu_b": doc.get("total_magnetization"),
                "density_g_per_cm3": doc.get("density"),
                "natoms": doc.get("nsites"),
                "volume_angstrom3": doc.get("volume"),
            }
            moduli = elastic.get(mid)
            if moduli:
                bulk = (moduli.get("bulk_modulus") or {}).get("vrh")
                shear = (moduli.get("shear_modulus") or {}).get("vrh")
                if bulk is not None:
                    rec["bulk_modulus_vrh_gpa"] = bulk
                if shear is not None:
                    rec["shear_modulus_vrh_gpa"] = shear
            tensors = dielectric.get(mid)
            if tensors:
                if tensors.get("e_total") is not None:
                    rec["dielectric_total"] = tensors["e_total"]
                if tensors.get("e_electronic") is not None:
                    rec["dielectric_electronic"] = tensors["e_electronic"]
            out.write(json.dumps(rec) + "\n")
            count += 1
            if count % 10000 == 0:
                print(f"  {count} records", file=sys.stderr)
    print(f"wrote {count} records to {sys.argv[1]}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
