use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Grade {
    A,
    B,
    C,
    F,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Grade::A => "A",
            Grade::B => "B",
            Grade::C => "C",
            Grade::F => "F",
        };
        f.write_str(s)
    }
}

/// Grade from the number of covered viewpoints (out of five).
pub fn grade_for(covered: usize) -> Grade {
    match covered {
        5.. => Grade::A,
        4 => Grade::B,
        3 => Grade::C,
        _ => Grade::F,
    }
}

/// Shannon entropy of the normalised coverage vector, divided by `ln 5`.
pub fn entropy(coverage: &[f64; 5]) -> f64 {
    let total: f64 = coverage.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = coverage
        .iter()
        .filter(|c| **c > 0.0)
        .map(|c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum();
    if h <= 0.0 {
        return 0.0;
    }
    (h / 5f64.ln()).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    /// Fraction of frames each scored face is raw-visible.
    pub coverage: [f64; 5],
    pub diversity: f64,
    pub max_quality: [f64; 5],
    pub covered_viewpoints: usize,
    pub grade: Grade,
    /// Indices into the scored-face order whose best quality stays under the never-seen threshold.
    pub never_seen: Vec<usize>,
    pub mean_effective_visibility: f64,
    pub hard_to_photograph: bool,
}

/// Per-frame rows hold one value per scored face.
pub fn coverage_and_grade(
    visible: &[[bool; 5]],
    quality: &[[f64; 5]],
    effective: &[[f64; 5]],
    weights: &super::QualityWeights,
) -> CoverageSummary {
    let n = visible.len().max(1) as f64;
    let mut coverage = [0.0; 5];
    let mut max_quality = [0.0f64; 5];
    for f in 0..5 {
        coverage[f] = visible.iter().filter(|row| row[f]).count() as f64 / n;
        max_quality[f] = quality.iter().map(|row| row[f]).fold(0.0, f64::max);
    }
    let covered = max_quality.iter().filter(|q| **q >= weights.high_quality_threshold).count();
    let never_seen = (0..5).filter(|&f| max_quality[f] < weights.never_seen_threshold).collect();
    let mean_effective = if effective.is_empty() {
        0.0
    } else {
        effective.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).sum::<f64>() / effective.len() as f64
    };
    CoverageSummary {
        coverage,
        diversity: entropy(&coverage),
        max_quality,
        covered_viewpoints: covered,
        grade: grade_for(covered),
        never_seen,
        mean_effective_visibility: mean_effective,
        hard_to_photograph: mean_effective < weights.hard_to_photograph_threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_table() {
        assert!((entropy(&[0.3; 5]) - 1.0).abs() < 1e-12);
        assert_eq!(entropy(&[0.0, 0.7, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(entropy(&[0.0; 5]), 0.0);
        let h = entropy(&[0.5, 0.5, 0.0, 0.0, 0.0]);
        assert!((h - 2f64.ln() / 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn grade_table() {
        let got: Vec<Grade> = [5, 4, 3, 2, 1, 0].into_iter().map(grade_for).collect();
        assert_eq!(got, vec![Grade::A, Grade::B, Grade::C, Grade::F, Grade::F, Grade::F]);
    }

    #[test]
    fn summary_from_rows() {
        let w = super::super::QualityWeights::default();
        let visible = vec![[true, false, true, false, true], [true, false, false, false, true]];
        let quality = vec![[0.9, 0.0, 0.3, 0.0, 0.5], [0.8, 0.0, 0.0, 0.0, 0.45]];
        let effective = vec![[0.9, 0.0, 0.2, 0.0, 0.3], [0.3, 0.0, 0.0, 0.0, 0.1]];
        let s = coverage_and_grade(&visible, &quality, &effective, &w);
        assert_eq!(s.coverage, [1.0, 0.0, 0.5, 0.0, 1.0]);
        assert_eq!(s.covered_viewpoints, 2);
        assert_eq!(s.grade, Grade::F);
        assert_eq!(s.never_seen, vec![1, 3]);
        assert!((s.mean_effective_visibility - 0.6).abs() < 1e-12);
        assert!(!s.hard_to_photograph);
    }

    proptest! {
        #[test]
        fn entropy_bounded_and_permutation_invariant(c in prop::array::uniform5(0.0f64..1.0), rot in 0usize..5) {
            let h = entropy(&c);
            prop_assert!((0.0..=1.0).contains(&h));
            let mut r = c;
            r.rotate_left(rot);
            prop_assert!((entropy(&r) - h).abs() < 1e-12);
            let mut rev = c;
            rev.reverse();
            prop_assert!((entropy(&rev) - h).abs() < 1e-12);
        }

        #[test]
        fn grade_monotone(a in 0usize..6, b in 0usize..6) {
            if a <= b {
                prop_assert!(grade_for(a) >= grade_for(b));
            }
        }
    }
}
