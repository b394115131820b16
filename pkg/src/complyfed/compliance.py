"""Compliance factor catalog, weighted scoring, and per-client noise multipliers.

A client's compliance score is the weight-normalized mean of its selected
option scores over the catalog's factors:

    S_c = sum(w_i * s_i) / sum(w_i)

The DP noise multiplier assigned to a client is then

    eta = (1.0 - S_c) + min_noise_multiplier

so fully compliant clients (S_c = 1.0) receive only the floor noise and
clients at S_c = 0 receive roughly unit noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class ComplianceError(ValueError):
    """Base class for compliance engine failures."""


class UnknownFactorError(ComplianceError):
    pass


class UnknownOptionError(ComplianceError):
    pass


class ZeroWeightSumError(ComplianceError):
    pass


class OutOfRangeScoreError(ComplianceError):
    pass


class MissingSelectionError(ComplianceError):
    pass


class ScoreMismatchError(ComplianceError):
    """Cached profile score disagrees with recomputation from selections."""


SCORE_RECOMPUTE_TOL = 1e-12


@dataclass(frozen=True)
class FactorOption:
    label: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise OutOfRangeScoreError(
                f"option {self.label!r} score {self.score} outside [0, 1]"
            )


@dataclass(frozen=True)
class ComplianceFactor:
    id: str
    name: str
    weight: float
    options: tuple[FactorOption, ...]

    def __post_init__(self):
        if self.weight < 0:
            raise ComplianceError(f"factor {self.id!r} has negative weight {self.weight}")
        if not self.options:
            raise ComplianceError(f"factor {self.id!r} has no options")
        labels = [o.label for o in self.options]
        if len(set(labels)) != len(labels):
            raise ComplianceError(f"factor {self.id!r} has duplicate option labels")

    def option(self, label: str) -> FactorOption:
        for opt in self.options:
            if opt.label == label:
                return opt
        raise UnknownOptionError(
            f"factor {self.id!r} has no option labelled {label!r}"
        )


@dataclass(frozen=True)
class FactorCatalog:
    factors: tuple[ComplianceFactor, ...]
    version: str = "custom"

    def __post_init__(self):
        ids = [f.id for f in self.factors]
        if len(set(ids)) != len(ids):
            raise ComplianceError("factor ids must be unique")
        if sum(f.weight for f in self.factors) <= 0:
            raise ZeroWeightSumError("catalog weights sum to zero")

    def factor(self, factor_id: str) -> ComplianceFactor:
        for f in self.factors:
            if f.id == factor_id:
                return f
        raise UnknownFactorError(f"catalog has no factor {factor_id!r}")


@dataclass(frozen=True)
class ComplianceProfile:
    """A client's per-factor option selections plus its (cached) score.

    Profiles produced by simulation sweeps may carry a bare score with no
    selections; catalog validation applies only to selection-backed profiles.
    """

    client_id: str
    selections: dict[str, str] = field(default_factory=dict)
    score: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise OutOfRangeScoreError(
                f"profile {self.client_id!r} score {self.score} outside [0, 1]"
            )


@dataclass(frozen=True)
class NoisePolicy:
    min_noise_multiplier: float = 1e-10
    participation_threshold: float = 0.5

    def __post_init__(self):
        if self.min_noise_multiplier <= 0:
            raise ComplianceError("min_noise_multiplier must be > 0")
        if not 0.0 <= self.participation_threshold <= 1.0:
            raise ComplianceError("participation_threshold must be in [0, 1]")


def compute_score(catalog: FactorCatalog, selections: dict[str, str]) -> float:
    """Weighted mean of the selected option scores over all catalog factors.

    Every catalog factor must be resolved by exactly one selection; selections
    naming unknown factors or options are rejected.
    """
    for factor_id in selections:
        catalog.factor(factor_id)  # raises UnknownFactorError
    weight_sum = 0.0
    weighted = 0.0
    for f in catalog.factors:
        if f.id not in selections:
            raise MissingSelectionError(f"no selection for factor {f.id!r}")
        opt = f.option(selections[f.id])
        weighted += f.weight * opt.score
        weight_sum += f.weight
    if weight_sum <= 0:
        raise ZeroWeightSumError("weights sum to zero; score undefined")
    return weighted / weight_sum


def noise_multiplier(score: float, policy: NoisePolicy = NoisePolicy()) -> float:
    """DP noise multiplier for a compliance score: (1.0 - S_c) + floor."""
    if not 0.0 <= score <= 1.0:
        raise OutOfRangeScoreError(f"compliance score {score} outside [0, 1]")
    return (1.0 - score) + policy.min_noise_multiplier


def eligible(profile: ComplianceProfile, policy: NoisePolicy) -> bool:
    """True iff the client's score meets the participation threshold."""
    return profile.score >= policy.participation_threshold


def validate_profile(catalog: FactorCatalog, profile: ComplianceProfile) -> ComplianceProfile:
    """Recompute a selection-backed profile's score and reject cache mismatches.

    Profiles cross a trust boundary (UI export -> simulator), so the cached
    score is never trusted as-is.
    """
    recomputed = compute_score(catalog, profile.selections)
    if abs(recomputed - profile.score) > SCORE_RECOMPUTE_TOL:
        raise ScoreMismatchError(
            f"profile {profile.client_id!r} caches score {profile.score} but "
            f"selections give {recomputed}"
        )
    return ComplianceProfile(profile.client_id, dict(profile.selections), recomputed)


# The default catalog covers twelve standard compliance areas. Option scores
# reuse the 1.0 / 0.7 / 0.5 scale of the anonymization factor; the catalog is
# data and experiment owners are expected to tailor weights and options.
_DEFAULT_FACTORS = [
    ("data_encryption", "Data Encryption Standards",
     [("AES-256 (NIST)", 1.0), ("AES-128 (Healthcare Minimum)", 0.7),
      ("No Standard Encryption", 0.5)]),
    ("ethical_ai", "Ethical AI Policies",
     [("EU AI Act", 1.0), ("FDA Guidelines", 0.7), ("No Ethical AI Policy", 0.5)]),
    ("privacy_regulations", "Privacy Regulations",
     [("HIPAA", 1.0), ("GDPR", 0.7), ("No Privacy Regulation", 0.5)]),
    ("data_quality", "Data Quality",
     [("DICOM Standard", 1.0), ("Partially Validated Data", 0.7),
      ("Unvalidated Data", 0.5)]),
    ("anonymization_practices", "Anonymization Practices",
     [("ISO/TS 25237:2017 Fully Anonymized", 1.0),
      ("Pseudonymized (Partial Anonymization)", 0.7), ("No Anonymization", 0.5)]),
    ("interoperability", "Interoperability Standards",
     [("HL7/FHIR Standards", 1.0), ("No Interoperability Standard", 0.5)]),
    ("network_security", "Secure Network Infrastructure",
     [("NIST Cybersecurity Framework", 1.0), ("No Security Framework", 0.5)]),
    ("authentication", "Authentication and Authorization",
     [("MFA", 1.0), ("RBAC", 0.7), ("No Access Control", 0.5)]),
    ("audit_logs", "Audit Logs",
     [("SOC 2 Type II Certification", 1.0), ("No Audit Logging", 0.5)]),
    ("patient_consent", "Patient Consent Management",
     [("HL7 CDA Compliant", 1.0), ("No Consent Management", 0.5)]),
    ("trusted_execution", "Trusted Execution Environments",
     [("Intel SGX", 1.0), ("AMD SEV", 0.7), ("No TEE", 0.5)]),
    ("training_quality", "Local Model Training Quality",
     [("High Accuracy (>95%)", 1.0), ("Moderate Accuracy (85-95%)", 0.7),
      ("Low Accuracy (<85%)", 0.5)]),
]

DEFAULT_CATALOG_VERSION = "default-12-v1"


def default_catalog() -> FactorCatalog:
    """The bundled twelve-factor catalog, every factor at weight 1.0."""
    return FactorCatalog(
        factors=tuple(
            ComplianceFactor(
                id=fid,
                name=name,
                weight=1.0,
                options=tuple(FactorOption(label, score) for label, score in opts),
            )
            for fid, name, opts in _DEFAULT_FACTORS
        ),
        version=DEFAULT_CATALOG_VERSION,
    )


# -- JSON interchange -------------------------------------------------------
#
# Profile file schema (written by the scoring UI, read by the CLI):
#   {"catalog_version": str,
#    "clients": [{"client_id": str,
#                 "selections": {factor_id: option_label},
#                 "score": float}]}
#
# Catalog file schema:
#   {"version": str,
#    "factors": [{"id": str, "name": str, "weight": float,
#                 "options": [{"label": str, "score": float}]}]}


def catalog_to_dict(catalog: FactorCatalog) -> dict:
    return {
        "version": catalog.version,
        "factors": [
            {
                "id": f.id,
                "name": f.name,
                "weight": f.weight,
                "options": [{"label": o.label, "score": o.score} for o in f.options],
            }
            for f in catalog.factors
        ],
    }


def catalog_from_dict(doc: dict) -> FactorCatalog:
    try:
        factors = tuple(
            ComplianceFactor(
                id=f["id"],
                name=f.get("name", f["id"]),
                weight=float(f["weight"]),
                options=tuple(
                    FactorOption(o["label"], float(o["score"])) for o in f["options"]
                ),
            )
            for f in doc["factors"]
        )
        return FactorCatalog(factors=factors, version=str(doc.get("version", "custom")))
    except KeyError as exc:
        raise ComplianceError(f"catalog document missing key {exc}") from exc


def profiles_to_dict(catalog: FactorCatalog, profiles: list[ComplianceProfile]) -> dict:
    return {
        "catalog_version": catalog.version,
        "clients": [
            {"client_id": p.client_id, "selections": dict(p.selections), "score": p.score}
            for p in profiles
        ],
    }


def load_profiles(path: str | Path, catalog: FactorCatalog) -> list[ComplianceProfile]:
    """Load and validate a profile file against a catalog.

    Every profile's score is recomputed from its selections; mismatches beyond
    1e-12 are rejected rather than silently corrected.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        clients = doc["clients"]
    except (TypeError, KeyError):
        raise ComplianceError("profile document has no 'clients' list")
    profiles = []
    for entry in clients:
        try:
            profile = ComplianceProfile(
                client_id=str(entry["client_id"]),
                selections={str(k): str(v) for k, v in entry["selections"].items()},
                score=float(entry["score"]),
            )
        except KeyError as exc:
            raise ComplianceError(f"profile entry missing key {exc}") from exc
        profiles.append(validate_profile(catalog, profile))
    return profiles


def save_profiles(
    path: str | Path, catalog: FactorCatalog, profiles: list[ComplianceProfile]
) -> None:
    Path(path).write_text(
        json.dumps(profiles_to_dict(catalog, profiles), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
