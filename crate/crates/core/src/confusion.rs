//! Fairness confusion matrix: accuracy (true/false) crossed with individual
//! fairness (fair/biased).

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::SimilarPopulation;
use crate::error::{Error, Result};
use crate::nncore::{label_of, BatchScratch, DenseNetwork, PartialInput, Scratch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FairnessCategory {
    /// Correct, and every similar counterpart gets the same label.
    TF,
    /// Correct, but some counterpart gets a different label.
    TB,
    /// Wrong, and every counterpart is wrong the same way.
    FF,
    /// Wrong, and some counterpart gets a different label.
    FB,
}

impl FairnessCategory {
    pub fn from_flags(accurate: bool, fair: bool) -> Self {
        match (accurate, fair) {
            (true, true) => FairnessCategory::TF,
            (true, false) => FairnessCategory::TB,
            (false, true) => FairnessCategory::FF,
            (false, false) => FairnessCategory::FB,
        }
    }

    pub fn is_false(self) -> bool {
        matches!(self, FairnessCategory::FF | FairnessCategory::FB)
    }

    pub fn is_biased(self) -> bool {
        matches!(self, FairnessCategory::TB | FairnessCategory::FB)
    }

    /// False or biased: anything but TF.
    pub fn is_defect(self) -> bool {
        self != FairnessCategory::TF
    }
}

/// `D(y, f(x, a′)) ≤ K · d((x, a), (x, a′))` with 0/1 distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccurateFairnessCriterion {
    pub k: f64,
}

impl Default for AccurateFairnessCriterion {
    fn default() -> Self {
        AccurateFairnessCriterion { k: 0.0 }
    }
}

impl AccurateFairnessCriterion {
    pub fn new(k: f64) -> Result<Self> {
        if k >= 0.0 && k.is_finite() {
            Ok(AccurateFairnessCriterion { k })
        } else {
            Err(Error::Config(format!("K = {k} must be a finite non-negative number")))
        }
    }

    pub fn label_distance(a: u8, b: u8) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }

    pub fn input_distance(v: &[f64], w: &[f64]) -> f64 {
        if v.iter().zip(w).all(|(a, b)| a == b) {
            0.0
        } else {
            1.0
        }
    }

    /// Whether a counterpart's label conforms to the ground truth.
    pub fn holds(&self, y: u8, counterpart_label: u8, v: &[f64], counterpart: &[f64]) -> bool {
        Self::label_distance(y, counterpart_label) <= self.k * Self::input_distance(v, counterpart)
    }
}

/// Category of `v` with ground truth `y` against its counterparts. An
/// instance is fair only if every counterpart shares its predicted label.
pub fn classify(net: &DenseNetwork, v: &[f64], y: u8, counterparts: &[Vec<f64>], threshold: f64) -> Result<FairnessCategory> {
    if counterparts.is_empty() {
        return Err(Error::Precondition("empty counterpart list".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold {threshold} outside (0, 1)")));
    }
    let pred = label_of(net.forward(v)?, threshold);
    let mut fair = true;
    for c in counterparts {
        if label_of(net.forward(c)?, threshold) != pred {
            fair = false;
            break;
        }
    }
    Ok(FairnessCategory::from_flags(pred == y, fair))
}

/// Counterparts scored per batch before checking for a disagreement.
const CLASSIFY_BLOCK: usize = 32;

/// Reusable classifier over a schema's similar sub-population.
pub struct Classifier<'a> {
    net: &'a DenseNetwork,
    population: &'a SimilarPopulation,
    threshold: f64,
    scratch: Scratch,
    batch: BatchScratch,
    partial: PartialInput,
    values: Vec<f64>,
    scores: Vec<f64>,
}

impl<'a> Classifier<'a> {
    pub fn new(net: &'a DenseNetwork, population: &'a SimilarPopulation, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Config(format!("threshold {threshold} outside (0, 1)")));
        }
        Ok(Classifier {
            net,
            population,
            threshold,
            scratch: net.scratch(),
            batch: BatchScratch::default(),
            partial: PartialInput::default(),
            values: Vec::new(),
            scores: Vec::new(),
        })
    }

    pub fn predict(&mut self, v: &[f64]) -> u8 {
        label_of(self.net.forward_with(v, &mut self.scratch), self.threshold)
    }

    /// Classify `v`; `rng` only matters when the population is capped.
    pub fn classify<R: Rng + ?Sized>(&mut self, v: &[f64], y: u8, rng: &mut R) -> FairnessCategory {
        let pred = self.predict(v);
        let own = self.population.index_of(v);
        let positions = self.population.sensitive_positions();
        self.net.partial_input(v, positions, &mut self.partial);
        let others: Vec<usize> = self.population.members(v, rng).into_iter().filter(|&m| m != own).collect();
        let mut fair = true;
        for block in others.chunks(CLASSIFY_BLOCK) {
            self.values.clear();
            for &m in block {
                self.population.push_member_values(m, &mut self.values);
            }
            self.net
                .forward_partial_batch(&self.partial, &self.values, block.len(), &mut self.batch, &mut self.scores);
            if self.scores.iter().any(|s| label_of(*s, self.threshold) != pred) {
                fair = false;
                break;
            }
        }
        FairnessCategory::from_flags(pred == y, fair)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    #[serde(rename = "ACC")]
    pub acc: f64,
    #[serde(rename = "IF")]
    pub individual_fairness: f64,
    #[serde(rename = "R_TF")]
    pub r_tf: f64,
    #[serde(rename = "R_TB")]
    pub r_tb: f64,
    #[serde(rename = "R_FF")]
    pub r_ff: f64,
    #[serde(rename = "R_FB")]
    pub r_fb: f64,
}

/// Counts and rates over the fairness confusion matrix. Rates are `None`
/// when nothing was classified.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    #[serde(rename = "N_F")]
    pub n_f: u64,
    #[serde(rename = "N_B")]
    pub n_b: u64,
    #[serde(rename = "N_F|B")]
    pub n_f_or_b: u64,
    #[serde(rename = "N_TF")]
    pub n_tf: u64,
    #[serde(rename = "N_TB")]
    pub n_tb: u64,
    #[serde(rename = "N_FF")]
    pub n_ff: u64,
    #[serde(rename = "N_FB")]
    pub n_fb: u64,
    #[serde(rename = "SUM")]
    pub sum: u64,
    pub rates: Option<Rates>,
}

pub const CSV_HEADER: &str = "N_F,N_B,N_F|B,N_TF,N_TB,N_FF,N_FB,SUM,ACC,IF,R_TF,R_TB,R_FF,R_FB";

impl ConfusionReport {
    pub fn from_counts(n_tf: u64, n_tb: u64, n_ff: u64, n_fb: u64) -> Self {
        let sum = n_tf + n_tb + n_ff + n_fb;
        let rates = (sum > 0).then(|| {
            let total = sum as f64;
            let (r_tf, r_tb, r_ff, r_fb) = (
                n_tf as f64 / total,
                n_tb as f64 / total,
                n_ff as f64 / total,
                n_fb as f64 / total,
            );
            Rates {
                acc: r_tf + r_tb,
                individual_fairness: r_tf + r_ff,
                r_tf,
                r_tb,
                r_ff,
                r_fb,
            }
        });
        ConfusionReport {
            n_f: n_ff + n_fb,
            n_b: n_tb + n_fb,
            n_f_or_b: n_tb + n_ff + n_fb,
            n_tf,
            n_tb,
            n_ff,
            n_fb,
            sum,
            rates,
        }
    }

    /// Combine two shard reports; counts are additive.
    pub fn merge(&self, other: &ConfusionReport) -> ConfusionReport {
        ConfusionReport::from_counts(
            self.n_tf + other.n_tf,
            self.n_tb + other.n_tb,
            self.n_ff + other.n_ff,
            self.n_fb + other.n_fb,
        )
    }

    pub fn count(&self, category: FairnessCategory) -> u64 {
        match category {
            FairnessCategory::TF => self.n_tf,
            FairnessCategory::TB => self.n_tb,
            FairnessCategory::FF => self.n_ff,
            FairnessCategory::FB => self.n_fb,
        }
    }

    /// One header line plus one data row; undefined rates are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            self.n_f, self.n_b, self.n_f_or_b, self.n_tf, self.n_tb, self.n_ff, self.n_fb, self.sum
        );
        match &self.rates {
            Some(r) => {
                for x in [r.acc, r.individual_fairness, r.r_tf, r.r_tb, r.r_ff, r.r_fb] {
                    let _ = write!(out, ",{x}");
                }
            }
            None => out.push_str(",,,,,,"),
        }
        out.push('\n');
        out
    }
}

pub fn tally<'a, I>(records: I) -> ConfusionReport
where
    I: IntoIterator<Item = &'a FairnessCategory>,
{
    let mut counts = [0u64; 4];
    for c in records {
        counts[*c as usize] += 1;
    }
    ConfusionReport::from_counts(counts[0], counts[1], counts[2], counts[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{Activation, Layer};
    use FairnessCategory::*;

    /// Score = sigmoid(w·v); label is the sign of w·v.
    fn linear(w: Vec<f64>) -> DenseNetwork {
        let n = w.len();
        DenseNetwork::new(
            n,
            vec![Layer {
                inputs: n,
                outputs: 1,
                activation: Activation::Sigmoid,
                weights: w,
                bias: vec![0.0],
            }],
        )
        .unwrap()
    }

    #[test]
    fn classify_definitions() {
        let net = linear(vec![1.0, 1.0]);
        let v = vec![1.0, 0.0];
        let agree = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let disagree = vec![vec![1.0, 0.0], vec![1.0, -3.0]];
        assert_eq!(classify(&net, &v, 1, &agree, 0.5).unwrap(), TF);
        assert_eq!(classify(&net, &v, 1, &disagree, 0.5).unwrap(), TB);

        let v0 = vec![-1.0, 0.0];
        let all_zero = vec![vec![-1.0, 0.0], vec![-1.0, -1.0]];
        assert_eq!(classify(&net, &v0, 1, &all_zero, 0.5).unwrap(), FF);
        let mixed = vec![vec![-1.0, 0.0], vec![-1.0, 3.0]];
        assert_eq!(classify(&net, &v0, 1, &mixed, 0.5).unwrap(), FB);
        assert!(classify(&net, &v0, 1, &[], 0.5).is_err());
    }

    #[test]
    fn classify_ignores_counterpart_order() {
        let net = linear(vec![1.0, 1.0]);
        let v = vec![1.0, 0.0];
        let mut cs = vec![vec![1.0, 0.0], vec![1.0, -3.0], vec![1.0, 2.0]];
        let first = classify(&net, &v, 1, &cs, 0.5).unwrap();
        cs.reverse();
        assert_eq!(classify(&net, &v, 1, &cs, 0.5).unwrap(), first);
    }

    #[test]
    fn tally_all_categories() {
        let r = tally(&[TF, TB, FF, FB]);
        assert_eq!((r.n_f, r.n_b, r.n_f_or_b, r.sum), (2, 2, 3, 4));
        let rates = r.rates.unwrap();
        assert_eq!(rates.acc, 0.5);
        assert_eq!(rates.individual_fairness, 0.5);
    }

    #[test]
    fn tally_all_true_fair() {
        let r = tally(&[TF, TF, TF]);
        assert_eq!(r.n_f_or_b, 0);
        let rates = r.rates.unwrap();
        assert_eq!((rates.acc, rates.individual_fairness), (1.0, 1.0));
    }

    #[test]
    fn empty_tally_has_no_rates() {
        let r = tally(&[]);
        assert_eq!(r.sum, 0);
        assert!(r.rates.is_none());
        assert!(r.to_csv().ends_with("0,0,0,0,0,0,0,0,,,,,,\n"));
    }

    #[test]
    fn merge_adds_counts() {
        let a = tally(&[TF, FB]);
        let b = tally(&[TB, FF, FF]);
        assert_eq!(a.merge(&b), tally(&[TF, FB, TB, FF, FF]));
    }

    #[test]
    fn csv_column_order() {
        let r = tally(&[TF, TB, FF, FB]);
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert!(lines.next().unwrap().starts_with("2,2,3,1,1,1,1,4,0.5,0.5,0.25"));
    }

    #[test]
    fn criterion_with_zero_k_is_label_equality() {
        let c = AccurateFairnessCriterion::default();
        assert!(c.holds(1, 1, &[0.0], &[1.0]));
        assert!(!c.holds(1, 0, &[0.0], &[1.0]));
        let lenient = AccurateFairnessCriterion::new(1.0).unwrap();
        assert!(lenient.holds(1, 0, &[0.0], &[1.0]));
        assert!(!lenient.holds(1, 0, &[0.0], &[0.0]));
        assert!(AccurateFairnessCriterion::new(-1.0).is_err());
    }
}
