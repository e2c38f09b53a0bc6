use crate::error::{Error, Result};

/// Dirichlet view of one prediction.
///
/// `alpha = evidence + 1`, `total = sum(alpha)`, `probs = alpha / total`,
/// `uncertainty = K / total`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceOutput {
    pub evidence: Vec<f64>,
    pub alpha: Vec<f64>,
    pub total: f64,
    pub probs: Vec<f64>,
    pub uncertainty: f64,
}

impl EvidenceOutput {
    pub fn from_evidence(evidence: Vec<f64>) -> Result<Self> {
        if evidence.is_empty() {
            return Err(Error::Argument("evidence vector is empty".into()));
        }
        if evidence.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::Numeric(format!("evidence must be finite and >= 0: {evidence:?}")));
        }
        let alpha: Vec<f64> = evidence.iter().map(|e| e + 1.0).collect();
        let total: f64 = alpha.iter().sum();
        let probs = alpha.iter().map(|a| a / total).collect();
        let uncertainty = alpha.len() as f64 / total;
        Ok(Self { evidence, alpha, total, probs, uncertainty })
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// Index of the largest probability; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold(0, |best, (k, p)| if *p > self.probs[best] { k } else { best })
    }

    /// Behavioural confidence: the largest class probability.
    pub fn confidence(&self) -> f64 {
        self.probs[self.argmax()]
    }
}
