use super::EvidenceOutput;
use crate::error::{arg, Result};

pub const DEFAULT_GCE_Q: f64 = 0.7;

/// Which per-sample loss a training example contributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Edl,
    Gce { q: f64 },
}

/// `log S - log alpha_y`: the negative log of the Dirichlet-mean probability
/// of the target class.
pub fn edl_loss(out: &EvidenceOutput, target: usize) -> f64 {
    out.total.ln() - out.alpha[target].ln()
}

/// `d edl / d alpha_k = 1/S - [k = y] / alpha_y`.
pub fn edl_grad_alpha(out: &EvidenceOutput, target: usize) -> Vec<f64> {
    let inv_s = 1.0 / out.total;
    let mut g = vec![inv_s; out.alpha.len()];
    g[target] -= 1.0 / out.alpha[target];
    g
}

/// Generalized cross entropy on the Dirichlet mean, `(1 - p_y^q) / q`.
pub fn gce_loss(out: &EvidenceOutput, target: usize, q: f64) -> Result<f64> {
    check_q(q)?;
    let p = out.alpha[target] / out.total;
    Ok((1.0 - p.powf(q)) / q)
}

/// `d gce / d alpha_k = -p_y^(q-1) * ([k = y] / S - alpha_y / S^2)`.
pub fn gce_grad_alpha(out: &EvidenceOutput, target: usize, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    let s = out.total;
    let p = out.alpha[target] / s;
    let scale = -p.powf(q - 1.0);
    let cross = out.alpha[target] / (s * s);
    let mut g = vec![-scale * cross; out.alpha.len()];
    g[target] = scale * (1.0 / s - cross);
    Ok(g)
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        arg(format!("GCE exponent q must be in (0, 1], got {q}"))
    }
}
