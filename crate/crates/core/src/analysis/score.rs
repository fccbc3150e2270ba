use serde::{Deserialize, Serialize};

use crate::graph::Leaning;

/// Minimum followed accounts on one side for a user to be labelled.
pub const ELIGIBILITY_MIN: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoliticalScore {
    pub n_right: u32,
    pub n_left: u32,
    /// `(N_R − N_L) / (N_R + N_L)`; absent when both counts are zero.
    pub score: Option<f64>,
    pub eligible: bool,
}

impl PoliticalScore {
    pub fn leaning(&self) -> Option<Leaning> {
        self.score.map(Leaning::from_score)
    }
}

pub fn political_score(n_right: u32, n_left: u32) -> PoliticalScore {
    let total = n_right as u64 + n_left as u64;
    PoliticalScore {
        n_right,
        n_left,
        score: (total > 0).then(|| (n_right as f64 - n_left as f64) / total as f64),
        eligible: n_right >= ELIGIBILITY_MIN || n_left >= ELIGIBILITY_MIN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = political_score(10, 0);
        assert_eq!((s.score, s.leaning()), (Some(1.0), Some(Leaning::Right)));
        let s = political_score(3, 7);
        assert!((s.score.unwrap() + 0.4).abs() < 1e-15);
        assert_eq!(s.leaning(), Some(Leaning::Left));
        assert!(s.eligible);
        assert_eq!(political_score(5, 5).leaning(), Some(Leaning::Right));
        let none = political_score(0, 0);
        assert_eq!(none.score, None);
        assert!(!none.eligible);
        assert!(!political_score(4, 4).eligible);
    }
}
