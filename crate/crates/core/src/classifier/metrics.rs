use super::{lstm_forward, LabeledEncounter, ModelWeights};
use crate::topology::PassingSide;

/// Binary metrics with LEFT as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BinaryMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl BinaryMetrics {
    /// Metrics from `(predicted_left, actual_left)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut m = Self::default();
        for (pred, actual) in pairs {
            match (pred, actual) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, false) => m.tn += 1,
                (false, true) => m.fn_ += 1,
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let n = m.tp + m.fp + m.tn + m.fn_;
        m.accuracy = ratio(m.tp + m.tn, n);
        m.precision = ratio(m.tp, m.tp + m.fp);
        m.recall = ratio(m.tp, m.tp + m.fn_);
        m.f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn_);
        m
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Thresholds `p_l` at 0.5 (ties count as LEFT) on every encounter.
/// Encounters without usable features are skipped.
pub fn evaluate(w: &ModelWeights, test: &[LabeledEncounter]) -> BinaryMetrics {
    BinaryMetrics::from_pairs(test.iter().filter_map(|e| {
        let b = lstm_forward(w, &e.features).ok()?;
        Some((b.predicts_left(), e.label == PassingSide::Left))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor() {
        let m = BinaryMetrics::from_pairs((0..100).map(|i| (i % 2 == 0, i % 2 == 0)));
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn constant_tie_predictor() {
        let enc: Vec<LabeledEncounter> = (0..40)
            .map(|i| LabeledEncounter {
                encounter_id: i,
                times: vec![0.0],
                features: vec![[1.0, 2.0, 5f64.sqrt(), 0.0, 1.0, 0.5, 0.5]],
                label: if i % 2 == 0 {
                    PassingSide::Left
                } else {
                    PassingSide::Right
                },
            })
            .collect();
        let m = evaluate(&ModelWeights::zeros(4), &enc);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hand_counted() {
        // tp 3, fp 1, tn 4, fn 2
        let pairs = [
            (true, true),
            (true, true),
            (true, true),
            (true, false),
            (false, false),
            (false, false),
            (false, false),
            (false, false),
            (false, true),
            (false, true),
        ];
        let m = BinaryMetrics::from_pairs(pairs);
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (3, 1, 4, 2));
        assert!((m.precision - 0.75).abs() < 1e-15);
        assert!((m.recall - 0.6).abs() < 1e-15);
        assert!((m.f1 - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-15);
        assert!((m.accuracy - 0.7).abs() < 1e-15);
    }
}
