//! Fairness-confusion perturbation directions and Taylor ground-truth
//! approximation.
//!
//! Given the loss gradient `g` at an instance and `g′` at its most divergent
//! similar counterpart, each non-sensitive attribute is either sign-agreeing
//! (perturbing it moves both losses together: false fair) or sign-disagreeing
//! (it separates the two: true biased or false biased).

use serde::{Deserialize, Serialize};

use crate::data::Direction;
use crate::error::{Error, Result};
use crate::nncore::{loss_mse, DenseNetwork};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionVector {
    pub values: Vec<f64>,
    pub kind: Direction,
}

impl DirectionVector {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|x| *x == 0.0)
    }
}

/// Sign with `sign(0) == 0`.
#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn check_shapes(g: &[f64], g_cf: &[f64], mask: &[bool]) -> Result<()> {
    if g_cf.len() != g.len() {
        return Err(Error::Shape {
            expected: g.len(),
            actual: g_cf.len(),
        });
    }
    if mask.len() != g.len() {
        return Err(Error::Shape {
            expected: g.len(),
            actual: mask.len(),
        });
    }
    Ok(())
}

/// Fill `out` with the direction of `kind`. Shapes must already agree.
pub(crate) fn direction_into(kind: Direction, g: &[f64], g_cf: &[f64], mask: &[bool], out: &mut [f64]) {
    for (i, d) in out.iter_mut().enumerate() {
        *d = 0.0;
        if mask[i] {
            continue;
        }
        let (s, s_cf) = (sign(g[i]), sign(g_cf[i]));
        *d = match kind {
            Direction::FF if s == s_cf => g[i].abs(),
            Direction::TB if s != s_cf => {
                if s != 0 {
                    -g[i].abs()
                } else {
                    g_cf[i].abs()
                }
            }
            Direction::FB if s != s_cf => {
                if s != 0 {
                    g[i].abs()
                } else {
                    -g_cf[i].abs()
                }
            }
            _ => 0.0,
        };
    }
}

fn direction(kind: Direction, g: &[f64], g_cf: &[f64], mask: &[bool]) -> Result<DirectionVector> {
    check_shapes(g, g_cf, mask)?;
    let mut values = vec![0.0; g.len()];
    direction_into(kind, g, g_cf, mask, &mut values);
    Ok(DirectionVector { values, kind })
}

/// False-fair direction: `|g_i|` where the gradient signs agree.
pub fn dir_ff(g: &[f64], g_cf: &[f64], sensitive_mask: &[bool]) -> Result<DirectionVector> {
    direction(Direction::FF, g, g_cf, sensitive_mask)
}

/// True-biased direction: `−|g_i|` where the signs differ, or `|g′_i|` when
/// `g_i` is zero.
pub fn dir_tb(g: &[f64], g_cf: &[f64], sensitive_mask: &[bool]) -> Result<DirectionVector> {
    direction(Direction::TB, g, g_cf, sensitive_mask)
}

/// False-biased direction: the negation of [`dir_tb`].
pub fn dir_fb(g: &[f64], g_cf: &[f64], sensitive_mask: &[bool]) -> Result<DirectionVector> {
    direction(Direction::FB, g, g_cf, sensitive_mask)
}

/// Recover a label for `v_p` from the first-order expansion of the loss
/// around `v`, given `f(v)`, `f(v_p)` and `g = ∂loss(y, f(v))/∂v`.
///
/// With `L = |loss(y, f(v)) + g·(v_p − v)|`, the candidates are
/// `f(v_p) ± √L`; the one closer to `y` wins and ties go to `f(v_p) + √L`.
pub fn ground_truth_from_scores(y: f64, score_v: f64, g: &[f64], v: &[f64], v_p: &[f64], score_vp: f64) -> Result<f64> {
    let step: f64 = g.iter().zip(v_p).zip(v).map(|((gi, p), x)| gi * (p - x)).sum();
    if !step.is_finite() {
        return Err(Error::Numeric { term: "gradient step g·(v_p − v)" });
    }
    let expanded = (loss_mse(y, score_v) + step).abs();
    if !expanded.is_finite() {
        return Err(Error::Numeric { term: "expanded loss" });
    }
    let root = expanded.sqrt();
    let (plus, minus) = (score_vp + root, score_vp - root);
    if !(plus.is_finite() && minus.is_finite()) {
        return Err(Error::Numeric { term: "label candidate" });
    }
    Ok(if (minus - y).abs() < (plus - y).abs() {
        minus
    } else {
        plus
    })
}

pub fn ground_truth(v: &[f64], y: f64, g: &[f64], net: &DenseNetwork, v_p: &[f64]) -> Result<f64> {
    for len in [g.len(), v_p.len()] {
        if len != v.len() {
            return Err(Error::Shape {
                expected: v.len(),
                actual: len,
            });
        }
    }
    let score_v = net.forward(v)?;
    let score_vp = net.forward(v_p)?;
    ground_truth_from_scores(y, score_v, g, v, v_p, score_vp)
}

/// Hard label for an approximated ground truth (ties go to 1).
pub fn binarize_ground_truth(y_p: f64) -> u8 {
    u8::from(y_p >= 0.5)
}
