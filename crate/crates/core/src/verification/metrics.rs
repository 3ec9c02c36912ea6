use crate::domain::{EntailmentJudgment, EntailmentLabel, VerificationMetrics};

/// Coverage and contradiction rates from labels; an empty list yields the
/// degenerate metrics (coverage 1, contradiction 0, flagged).
pub fn metrics_from_labels<I>(labels: I) -> VerificationMetrics
where
    I: IntoIterator<Item = EntailmentLabel>,
{
    let (mut entailed, mut contradicted, mut total) = (0, 0, 0);
    for label in labels {
        total += 1;
        match label {
            EntailmentLabel::ET => entailed += 1,
            EntailmentLabel::CT => contradicted += 1,
            EntailmentLabel::MS => {}
        }
    }
    VerificationMetrics::from_counts(entailed, contradicted, total).expect("counts partition the labels")
}

pub fn compute_metrics(judgments: &[EntailmentJudgment]) -> VerificationMetrics {
    metrics_from_labels(judgments.iter().map(|j| j.label))
}

/// Strict acceptance: all atoms entailed, none contradicted (or no atoms).
pub fn check_acceptance(metrics: &VerificationMetrics) -> bool {
    metrics.meets_strict_criterion()
}

#[cfg(test)]
mod tests {
    use super::*;
    use EntailmentLabel::*;

    #[test]
    fn case_study_rounds() {
        let first = metrics_from_labels([ET, MS, MS, MS]);
        assert_eq!((first.coverage(), first.contradiction()), (0.25, 0.0));
        assert!(!check_acceptance(&first));

        let second = metrics_from_labels([ET, ET, MS, ET]);
        assert_eq!(second.coverage(), 0.75);
        assert!(!check_acceptance(&second));

        let last = metrics_from_labels([ET, ET, ET, ET]);
        assert_eq!((last.coverage(), last.contradiction()), (1.0, 0.0));
        assert!(check_acceptance(&last));
    }

    #[test]
    fn single_contradiction() {
        let m = metrics_from_labels([CT]);
        assert_eq!((m.coverage(), m.contradiction()), (0.0, 1.0));
        assert!(!check_acceptance(&m));
    }

    #[test]
    fn empty_is_degenerate_acceptance() {
        let m = metrics_from_labels([]);
        assert!(m.is_degenerate());
        assert!(check_acceptance(&m));
    }

    #[test]
    fn acceptance_implies_no_missing_or_contradicted() {
        // exhaustive over {ET, MS, CT}^n, n <= 6
        for n in 1..=6u32 {
            for code in 0..3usize.pow(n) {
                let labels: Vec<_> = (0..n)
                    .map(|k| EntailmentLabel::ALL[code / 3usize.pow(k) % 3])
                    .collect();
                let m = metrics_from_labels(labels.iter().copied());
                let clean = labels.iter().all(|l| *l == ET);
                assert_eq!(check_acceptance(&m), clean, "{labels:?}");
            }
        }
    }
}
