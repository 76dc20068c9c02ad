//! Binary-classification metrics over a confusion matrix.
//!
//! Conventions, fixed here and mirrored by the brute-force oracle in the
//! tests:
//! - positive class = hate (label 1); a probability `p >= 0.5` predicts
//!   positive;
//! - any 0/0 precision, recall, or F1 is defined as 0;
//! - MCC's denominator is computed as an exact integer product before the
//!   square root, and a zero denominator yields MCC = 0.

/// Confusion counts with hate as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub confusion: Confusion,
    /// Precision of the hate class.
    pub precision_hate: f64,
    pub recall_hate: f64,
    pub precision_legit: f64,
    pub recall_legit: f64,
    pub accuracy: f64,
    /// Mean of the two per-class F1 scores.
    pub macro_f1: f64,
    pub mcc: f64,
    /// Mean |p(original) − p(counterfactual)| over examples that have a
    /// counterfactual twin; `None` when none do.
    pub mean_clp_gap: Option<f64>,
}

/// `p >= 0.5` predicts the hate class.
pub fn threshold(prob: f64) -> u8 {
    if prob >= 0.5 {
        1
    } else {
        0
    }
}

/// Tallies a confusion matrix from labels and predicted classes.
pub fn confusion(labels: &[u8], preds: &[u8]) -> Confusion {
    let mut c = Confusion::default();
    for (&y, &p) in labels.iter().zip(preds) {
        match (y, p) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            _ => c.fn_ += 1,
        }
    }
    c
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Derives every metric from confusion counts.
pub fn from_confusion(c: Confusion, mean_clp_gap: Option<f64>) -> Metrics {
    let precision_hate = ratio(c.tp, c.tp + c.fp);
    let recall_hate = ratio(c.tp, c.tp + c.fn_);
    let precision_legit = ratio(c.tn, c.tn + c.fn_);
    let recall_legit = ratio(c.tn, c.tn + c.fp);
    let accuracy = ratio(c.tp + c.tn, c.total());
    let macro_f1 = (f1(precision_hate, recall_hate) + f1(precision_legit, recall_legit)) / 2.0;
    let num = (c.tp as i128 * c.tn as i128) - (c.fp as i128 * c.fn_ as i128);
    let den2 = (c.tp + c.fp) as u128
        * (c.tp + c.fn_) as u128
        * (c.tn + c.fp) as u128
        * (c.tn + c.fn_) as u128;
    let mcc = if den2 == 0 {
        0.0
    } else {
        num as f64 / (den2 as f64).sqrt()
    };
    Metrics {
        confusion: c,
        precision_hate,
        recall_hate,
        precision_legit,
        recall_legit,
        accuracy,
        macro_f1,
        mcc,
        mean_clp_gap,
    }
}

/// Metrics from labels and positive-class probabilities.
pub fn compute(labels: &[u8], probs: &[f64], mean_clp_gap: Option<f64>) -> Metrics {
    let preds: Vec<u8> = probs.iter().map(|&p| threshold(p)).collect();
    from_confusion(confusion(labels, &preds), mean_clp_gap)
}

impl Metrics {
    /// Key=value lines, one metric per line, machine-parseable.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("tp={}\n", self.confusion.tp));
        s.push_str(&format!("tn={}\n", self.confusion.tn));
        s.push_str(&format!("fp={}\n", self.confusion.fp));
        s.push_str(&format!("fn={}\n", self.confusion.fn_));
        s.push_str(&format!("precision_hate={}\n", self.precision_hate));
        s.push_str(&format!("recall_hate={}\n", self.recall_hate));
        s.push_str(&format!("precision_legit={}\n", self.precision_legit));
        s.push_str(&format!("recall_legit={}\n", self.recall_legit));
        s.push_str(&format!("accuracy={}\n", self.accuracy));
        s.push_str(&format!("macro_f1={}\n", self.macro_f1));
        s.push_str(&format!("mcc={}\n", self.mcc));
        if let Some(gap) = self.mean_clp_gap {
            s.push_str(&format!("mean_clp_gap={gap}\n"));
        }
        s
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "confusion   tp={} tn={} fp={} fn={}\n",
            self.confusion.tp, self.confusion.tn, self.confusion.fp, self.confusion.fn_
        ));
        s.push_str(&format!(
            "hate        precision={:.4} recall={:.4}\n",
            self.precision_hate, self.recall_hate
        ));
        s.push_str(&format!(
            "legitimate  precision={:.4} recall={:.4}\n",
            self.precision_legit, self.recall_legit
        ));
        s.push_str(&format!(
            "overall     accuracy={:.4} macro_f1={:.4} mcc={:+.4}\n",
            self.accuracy, self.macro_f1, self.mcc
        ));
        if let Some(gap) = self.mean_clp_gap {
            s.push_str(&format!("fairness    mean_clp_gap={gap:.6}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force re-derivation: walks the prediction pairs four separate
    /// times (once per cell), then recomputes each metric from scratch
    /// with the shared conventions.
    fn oracle(labels: &[u8], preds: &[u8]) -> Metrics {
        let tp = labels
            .iter()
            .zip(preds)
            .filter(|&(&y, &p)| y == 1 && p == 1)
            .count() as u64;
        let tn = labels
            .iter()
            .zip(preds)
            .filter(|&(&y, &p)| y == 0 && p == 0)
            .count() as u64;
        let fp = labels
            .iter()
            .zip(preds)
            .filter(|&(&y, &p)| y == 0 && p == 1)
            .count() as u64;
        let fn_ = labels
            .iter()
            .zip(preds)
            .filter(|&(&y, &p)| y == 1 && p == 0)
            .count() as u64;
        let div = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let ph = div(tp, tp + fp);
        let rh = div(tp, tp + fn_);
        let pl = div(tn, tn + fn_);
        let rl = div(tn, tn + fp);
        let f = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let den2 =
            (tp + fp) as u128 * (tp + fn_) as u128 * (tn + fp) as u128 * (tn + fn_) as u128;
        let mcc = if den2 == 0 {
            0.0
        } else {
            ((tp as i128 * tn as i128 - fp as i128 * fn_ as i128) as f64) / (den2 as f64).sqrt()
        };
        Metrics {
            confusion: Confusion { tp, tn, fp, fn_ },
            precision_hate: ph,
            recall_hate: rh,
            precision_legit: pl,
            recall_legit: rl,
            accuracy: div(tp + tn, tp + tn + fp + fn_),
            macro_f1: (f(ph, rh) + f(pl, rl)) / 2.0,
            mcc,
            mean_clp_gap: None,
        }
    }

    #[test]
    fn perfect_predictions() {
        let labels = [1, 0, 1, 0, 1];
        let probs = [0.9, 0.1, 0.8, 0.2, 0.99];
        let m = compute(&labels, &probs, None);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.mcc, 1.0);
    }

    #[test]
    fn all_positive_on_balanced_set_has_zero_mcc() {
        let labels = [1, 1, 0, 0];
        let probs = [0.9, 0.9, 0.9, 0.9];
        let m = compute(&labels, &probs, None);
        assert_eq!(m.mcc, 0.0);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision_legit, 0.0);
    }

    #[test]
    fn hand_counted_case_matches_oracle() {
        // tp=3, tn=4, fp=1, fn=2
        let labels = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let preds = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0];
        let m = from_confusion(confusion(&labels, &preds), None);
        assert_eq!(m.confusion, Confusion { tp: 3, tn: 4, fp: 1, fn_: 2 });
        let o = oracle(&labels, &preds);
        assert_eq!(m, o);
        assert_eq!(m.accuracy, 0.7);
        assert_eq!(m.precision_hate, 0.75);
        assert_eq!(m.recall_hate, 0.6);
    }

    #[test]
    fn threshold_boundary_is_positive_at_half() {
        assert_eq!(threshold(0.5), 1);
        assert_eq!(threshold(0.49999999), 0);
    }

    #[test]
    fn matches_oracle_exactly_on_1000_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.gen_range(1..40);
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            let preds: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            let m = from_confusion(confusion(&labels, &preds), None);
            let o = oracle(&labels, &preds);
            assert_eq!(m, o, "labels={labels:?} preds={preds:?}");
        }
    }

    #[test]
    fn kv_and_table_render_every_field() {
        let m = compute(&[1, 0], &[0.9, 0.8], Some(0.125));
        let kv = m.to_kv();
        for key in [
            "tp=", "tn=", "fp=", "fn=", "precision_hate=", "recall_hate=",
            "precision_legit=", "recall_legit=", "accuracy=", "macro_f1=", "mcc=",
            "mean_clp_gap=",
        ] {
            assert!(kv.contains(key), "missing {key} in {kv}");
        }
        assert!(m.to_table().contains("mean_clp_gap"));
    }
}
