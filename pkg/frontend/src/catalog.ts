// Factor catalog types shared with the simulator's JSON schemas.

export interface FactorOption {
  label: string;
  score: number; // in [0, 1]
}

export interface ComplianceFactor {
  id: string;
  name: string;
  weight: number; // >= 0
  options: FactorOption[];
}

export interface FactorCatalog {
  version: string;
  factors: ComplianceFactor[];
}

export interface NoisePolicy {
  min_noise_multiplier: number;
  participation_threshold: number;
}

export const DEFAULT_POLICY: NoisePolicy = {
  min_noise_multiplier: 1e-10,
  participation_threshold: 0.5,
};

export const DEFAULT_CATALOG_VERSION = 'default-12-v1';

// Mirrors the simulator's bundled catalog: twelve factors, weight 1.0 each,
// options on the 1.0 / 0.7 / 0.5 scale. Fully editable in the UI.
export const DEFAULT_CATALOG: FactorCatalog = {
  version: DEFAULT_CATALOG_VERSION,
  factors: [
    {
      id: 'data_encryption', name: 'Data Encryption Standards', weight: 1.0,
      options: [
        { label: 'AES-256 (NIST)', score: 1.0 },
        { label: 'AES-128 (Healthcare Minimum)', score: 0.7 },
        { label: 'No Standard Encryption', score: 0.5 },
      ],
    },
    {
      id: 'ethical_ai', name: 'Ethical AI Policies', weight: 1.0,
      options: [
        { label: 'EU AI Act', score: 1.0 },
        { label: 'FDA Guidelines', score: 0.7 },
        { label: 'No Ethical AI Policy', score: 0.5 },
      ],
    },
    {
      id: 'privacy_regulations', name: 'Privacy Regulations', weight: 1.0,
      options: [
        { label: 'HIPAA', score: 1.0 },
        { label: 'GDPR', score: 0.7 },
        { label: 'No Privacy Regulation', score: 0.5 },
      ],
    },
    {
      id: 'data_quality', name: 'Data Quality', weight: 1.0,
      options: [
        { label: 'DICOM Standard', score: 1.0 },
        { label: 'Partially Validated Data', score: 0.7 },
        { label: 'Unvalidated Data', score: 0.5 },
      ],
    },
    {
      id: 'anonymization_practices', name: 'Anonymization Practices', weight: 1.0,
      options: [
        { label: 'ISO/TS 25237:2017 Fully Anonymized', score: 1.0 },
        { label: 'Pseudonymized (Partial Anonymization)', score: 0.7 },
        { label: 'No Anonymization', score: 0.5 },
      ],
    },
    {
      id: 'interoperability', name: 'Interoperability Standards', weight: 1.0,
      options: [
        { label: 'HL7/FHIR Standards', score: 1.0 },
        { label: 'No Interoperability Standard', score: 0.5 },
      ],
    },
    {
      id: 'network_security', name: 'Secure Network Infrastructure', weight: 1.0,
      options: [
        { label: 'NIST Cybersecurity Framework', score: 1.0 },
        { label: 'No Security Framework', score: 0.5 },
      ],
    },
    {
      id: 'authentication', name: 'Authentication and Authorization', weight: 1.0,
      options: [
        { label: 'MFA', score: 1.0 },
        { label: 'RBAC', score: 0.7 },
        { label: 'No Access Control', score: 0.5 },
      ],
    },
    {
      id: 'audit_logs', name: 'Audit Logs', weight: 1.0,
      options: [
        { label: 'SOC 2 Type II Certification', score: 1.0 },
        { label: 'No Audit Logging', score: 0.5 },
      ],
    },
    {
      id: 'patient_consent', name: 'Patient Consent Management', weight: 1.0,
      options: [
        { label: 'HL7 CDA Compliant', score: 1.0 },
        { label: 'No Consent Management', score: 0.5 },
      ],
    },
    {
      id: 'trusted_execution', name: 'Trusted Execution Environments', weight: 1.0,
      options: [
        { label: 'Intel SGX', score: 1.0 },
        { label: 'AMD SEV', score: 0.7 },
        { label: 'No TEE', score: 0.5 },
      ],
    },
    {
      id: 'training_quality', name: 'Local Model Training Quality', weight: 1.0,
      options: [
        { label: 'High Accuracy (>95%)', score: 1.0 },
        { label: 'Moderate Accuracy (85-95%)', score: 0.7 },
        { label: 'Low Accuracy (<85%)', score: 0.5 },
      ],
    },
  ],
};

export function validateCatalog(catalog: FactorCatalog): string[] {
  const problems: string[] = [];
  const seen = new Set<string>();
  let weightSum = 0;
  for (const factor of catalog.factors) {
    if (seen.has(factor.id)) problems.push(`duplicate factor id '${factor.id}'`);
    seen.add(factor.id);
    if (!(factor.weight >= 0)) problems.push(`factor '${factor.id}' has negative weight`);
    weightSum += factor.weight;
    if (factor.options.length === 0) problems.push(`factor '${factor.id}' has no options`);
    const labels = new Set<string>();
    for (const option of factor.options) {
      if (labels.has(option.label)) {
        problems.push(`factor '${factor.id}' repeats option '${option.label}'`);
      }
      labels.add(option.label);
      if (!(option.score >= 0 && option.score <= 1)) {
        problems.push(`option '${option.label}' score outside [0, 1]`);
      }
    }
  }
  if (!(weightSum > 0)) problems.push('catalog weights sum to zero');
  return problems;
}

export function cloneCatalog(catalog: FactorCatalog): FactorCatalog {
  return JSON.parse(JSON.stringify(catalog)) as FactorCatalog;
}
