use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fused {
    pub probability: f64,
    pub label: u8,
}

/// Weighted mean of per-model probabilities with weights proportional to each
/// model's F1; models with F1 = 0 drop out.
pub fn late_fusion_predict(probs: &[f64], f1: &[f64]) -> Result<Fused> {
    if probs.len() != f1.len() || probs.is_empty() {
        return Err(Error::Dimension(format!("{} probabilities for {} weights", probs.len(), f1.len())));
    }
    let total: f64 = f1.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Invalid("late fusion needs at least one model with F1 > 0".into()));
    }
    let probability = probs.iter().zip(f1).map(|(p, w)| p * w).sum::<f64>() / total;
    Ok(Fused {
        probability,
        label: u8::from(probability >= 0.5),
    })
}

/// Majority of per-tweet predictions; a tie goes to class 0, the majority
/// (left-leaning) class of the reference datasets.
pub fn vote_user_label(labels: &[u8]) -> Result<u8> {
    if labels.is_empty() {
        return Err(Error::Invalid("cannot vote without predictions".into()));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    Ok(u8::from(2 * ones > labels.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fusion_examples() {
        let f = late_fusion_predict(&[0.9, 0.0], &[0.6, 0.3]).unwrap();
        assert!((f.probability - 0.6).abs() < 1e-12);
        assert_eq!(f.label, 1);
        let eq = late_fusion_predict(&[0.2, 0.4, 0.9], &[0.5, 0.5, 0.5]).unwrap();
        assert!((eq.probability - 0.5).abs() < 1e-12);
        let one = late_fusion_predict(&[0.3, 0.99], &[0.7, 0.0]).unwrap();
        assert_eq!(one.probability, 0.3);
        assert!(late_fusion_predict(&[0.3], &[0.0]).is_err());
    }

    #[test]
    fn votes() {
        assert_eq!(vote_user_label(&[0, 0, 1]).unwrap(), 0);
        assert_eq!(vote_user_label(&[0, 1]).unwrap(), 0);
        assert_eq!(vote_user_label(&[1]).unwrap(), 1);
        assert!(vote_user_label(&[]).is_err());
    }
}
