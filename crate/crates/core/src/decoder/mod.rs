//! Beam search over a multi-level LM and acoustic scorer.
//!
//! [`decode_single`] runs one system. [`decode_joint`] adds a second system
//! (typically character BPE) that follows the first: every word the first
//! system closes is decomposed into the second system's units and scored
//! there, and the two systems' scores are blended with weight `gamma` at
//! each word boundary.

mod search;

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

pub use search::{blend, decode_joint, decode_single, SecondSystem};

use crate::lm::{SymbolId, Vocab};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub beamsize: usize,
    /// Weight of LM look-ahead scores against acoustic scores.
    pub beta: f64,
    /// Weight of the second system at word boundaries (joint mode only).
    pub gamma: f64,
    pub max_steps: usize,
    /// Search stops once the best live score of each of the last
    /// `end_window` steps trailed the best completed score by more than
    /// `end_margin`.
    pub end_window: usize,
    pub end_margin: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beamsize: 20,
            beta: 1.0,
            gamma: 0.2,
            max_steps: 200,
            end_window: 3,
            end_margin: 10.0,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beamsize == 0 {
            return Err(Error::InvalidConfig("beam size must be positive".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("beta must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig("gamma must lie in [0, 1]".into()));
        }
        if self.max_steps == 0 || self.end_window == 0 {
            return Err(Error::InvalidConfig(
                "max steps and end-detection window must be positive".into(),
            ));
        }
        if self.end_margin.is_nan() || self.end_margin <= 0.0 {
            return Err(Error::InvalidConfig(
                "end-detection margin must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A completed hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub words: Vec<String>,
    pub score: f64,
    pub sc1: f64,
    pub sc2: f64,
    /// First-system units, `<sos>` ... `<eos>`.
    pub ys1: Vec<String>,
    /// Second-system units; just `<sos>` in single-system decoding.
    pub ys2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Best first, at most `beamsize` entries.
    pub hypotheses: Vec<Hypothesis>,
    /// Set when `max_steps` ran out before anything completed.
    pub truncated: bool,
    pub steps: usize,
}

impl DecodeResult {
    pub fn best(&self) -> Option<&Hypothesis> {
        self.hypotheses.first()
    }
}

/// The `beamsize` highest finite entries of `scores` as `(score, unit)`,
/// best first. Ties go to the lexicographically smaller unit; `<sos>` is
/// never proposed.
pub fn top(scores: &[f64], beamsize: usize, vocab: &Vocab) -> Vec<(f64, SymbolId)> {
    let mut cands: Vec<(f64, SymbolId)> = scores
        .iter()
        .enumerate()
        .filter(|&(i, v)| i as SymbolId != Vocab::SOS && *v > f64::NEG_INFINITY)
        .map(|(i, &v)| (v, i as SymbolId))
        .collect();
    let cmp = |a: &(f64, SymbolId), b: &(f64, SymbolId)| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| vocab.symbol(a.1).cmp(vocab.symbol(b.1)))
    };
    if cands.len() > beamsize {
        cands.select_nth_unstable_by(beamsize - 1, cmp);
        cands.truncate(beamsize);
    }
    cands.sort_by(cmp);
    cands
}

/// Sequence order used for every tie: units compared as strings, then words.
pub(crate) fn cmp_sequences(
    vocab: &Vocab,
    a: (&[SymbolId], &[String]),
    b: (&[SymbolId], &[String]),
) -> Ordering {
    let sa = a.0.iter().map(|&i| vocab.symbol(i));
    let sb = b.0.iter().map(|&i| vocab.symbol(i));
    sa.cmp(sb).then_with(|| a.1.cmp(b.1))
}

/// True once the best partial score of each of the last `window` steps
/// trails the best completed score by more than `margin`.
pub fn end_detected(
    best_completed: Option<f64>,
    best_by_step: &[f64],
    window: usize,
    margin: f64,
) -> bool {
    let Some(best) = best_completed else {
        return false;
    };
    if best_by_step.len() < window {
        return false;
    }
    best_by_step[best_by_step.len() - window..]
        .iter()
        .all(|&s| s < best - margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn end_detection_rule() {
        assert!(!end_detected(None, &[-100.0; 5], 3, 10.0));
        assert!(!end_detected(Some(0.0), &[-5.0, -9.0, -10.0], 3, 10.0));
        assert!(end_detected(Some(0.0), &[-11.0, -12.0, -15.0], 3, 10.0));
        assert!(!end_detected(Some(0.0), &[-12.0, -15.0], 3, 10.0));
        assert!(!end_detected(Some(0.0), &[-11.0, -12.0, -1.0], 3, 10.0));
        assert!(end_detected(
            Some(0.0),
            &[-1.0, -11.0, -12.0, -15.0],
            3,
            10.0
        ));
    }

    #[test]
    fn top_orders_and_skips_impossible() {
        let v = Vocab::new(["b", "a", "c"]);
        let (a, b, c) = (v.id("a").unwrap(), v.id("b").unwrap(), v.id("c").unwrap());
        let mut s = alloc::vec![f64::NEG_INFINITY; v.len()];
        s[a as usize] = -1.0;
        s[b as usize] = -1.0;
        s[c as usize] = -0.5;
        assert_eq!(top(&s, 10, &v), [(-0.5, c), (-1.0, a), (-1.0, b)]);
        assert_eq!(top(&s, 2, &v), [(-0.5, c), (-1.0, a)]);
        // <sos> is never a candidate even when finite
        s[Vocab::SOS as usize] = 0.0;
        assert!(top(&s, 10, &v).iter().all(|&(_, y)| y != Vocab::SOS));
    }

    #[test]
    fn top_never_returns_impossible_entries() {
        let v = Vocab::new(["a", "b", "c", "d"]);
        for mask in 0u32..(1 << v.len()) {
            let s: Vec<f64> = (0..v.len())
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        -(i as f64)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            for k in 1..=v.len() + 1 {
                let t = top(&s, k, &v);
                let finite = (1..v.len()).filter(|i| mask & (1 << i) != 0).count();
                assert_eq!(t.len(), finite.min(k));
                assert!(t.iter().all(|(x, _)| x.is_finite()));
                assert!(t.windows(2).all(|w| w[0].0 >= w[1].0));
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(DecoderConfig::default().validate().is_ok());
        assert!(DecoderConfig {
            gamma: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DecoderConfig {
            beamsize: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DecoderConfig {
            beta: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
