#!/usr/bin/env python3
"""Generate the score-parity fixture set consumed by the web tool's tests.

Writes frontend/fixtures/parity_cases.json: a catalog with randomized weights
plus 50 random client profiles, each carrying the engine-computed score,
noise multiplier, and eligibility flag. The web tool's test suite recomputes
every case and must agree within 1e-4.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from complyfed.compliance import (
    ComplianceFactor,
    FactorCatalog,
    NoisePolicy,
    catalog_to_dict,
    compute_score,
    default_catalog,
    noise_multiplier,
)

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


def main() -> int:
    rng = np.random.default_rng(424242)
    base = default_catalog()
    catalog = FactorCatalog(
        factors=tuple(
            ComplianceFactor(f.id, f.name, float(np.round(rng.uniform(0.25, 3.0), 4)),
                             f.options)
            for f in base.factors
        ),
        version="parity-fixtures-v1",
    )
    policy = NoisePolicy(min_noise_multiplier=1e-10, participation_threshold=0.5)

    cases = []
    for i in range(50):
        selections = {
            f.id: f.options[int(rng.integers(0, len(f.options)))].label
            for f in catalog.factors
        }
        score = compute_score(catalog, selections)
        cases.append({
            "client_id": f"fixture_{i:02d}",
            "selections": selections,
            "expected_score": score,
            "expected_noise_multiplier": noise_multiplier(score, policy),
            "expected_eligible": score >= policy.participation_threshold,
        })

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    out = FIXTURE_DIR / "parity_cases.json"
    out.write_text(json.dumps({
        "catalog": catalog_to_dict(catalog),
        "policy": {
            "min_noise_multiplier": policy.min_noise_multiplier,
            "participation_threshold": policy.participation_threshold,
        },
        "cases": cases,
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(cases)} parity cases to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
