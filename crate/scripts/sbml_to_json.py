#!/usr/bin/env python3
"""Convert an SBML level 3 / FBC v2 model into the JSON model document read by llfba.

Usage: sbml_to_json.py <model.xml[.gz]> <out.json>
Only the fields the solver needs are kept (ids, compartments, bounds,
objective coefficients, stoichiometry). Standard library only.
"""
import gzip
import json
import sys
import xml.etree.ElementTree as ET

CORE = "{http://www.sbml.org/sbml/level3/version1/core}"
FBC = "{http://www.sbml.org/sbml/level3/version1/fbc/version2}"


def strip(prefix, ident):
    return ident[len(prefix):] if ident.startswith(prefix) else ident


def main(src, dst):
    opener = gzip.open if src.endswith(".gz") else open
    with opener(src, "rb") as fh:
        root = ET.parse(fh).getroot()
    model = root.find(CORE + "model")
    params = {
        p.get("id"): float(p.get("value"))
        for p in model.iter(CORE + "parameter")
    }
    objective = {}
    for obj in model.iter(FBC + "fluxObjective"):
        objective[obj.get(FBC + "reaction")] = float(obj.get(FBC + "coefficient"))

    metabolites = [
        {"id": strip("M_", s.get("id")), "compartment": s.get("compartment")}
        for s in model.iter(CORE + "species")
    ]
    reactions = []
    for r in model.iter(CORE + "reaction"):
        rid = r.get("id")
        stoich = {}
        for tag, sign in (("listOfReactants", -1.0), ("listOfProducts", 1.0)):
            group = r.find(CORE + tag)
            if group is None:
                continue
            for ref in group.findall(CORE + "speciesReference"):
                mid = strip("M_", ref.get("species"))
                stoich[mid] = stoich.get(mid, 0.0) + sign * float(ref.get("stoichiometry"))
        reactions.append({
            "id": strip("R_", rid),
            "lower_bound": params[r.get(FBC + "lowerFluxBound")],
            "upper_bound": params[r.get(FBC + "upperFluxBound")],
            "objective_coefficient": objective.get(rid, 0.0),
            "metabolites": stoich,
        })
    doc = {
        "id": model.get("id"),
        "schema_version": "1",
        "metabolites": metabolites,
        "reactions": reactions,
    }
    with open(dst, "w") as out:
        json.dump(doc, out, indent=1)
        out.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
