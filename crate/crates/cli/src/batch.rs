//! Decoding many utterances, optionally in parallel, and writing results.

use jointbpe_core::acoustic::Utterance;
use jointbpe_core::decoder::{decode_joint, decode_single, DecodeResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::am::Scorer;
use crate::error::{Error, Result};
use crate::files::Transcript;
use crate::settings::Settings;
use crate::system::{System, Verifier};

pub struct Job {
    pub id: String,
    pub am1: Scorer,
    /// Required in joint mode.
    pub am2: Option<Scorer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub id: String,
    pub result: DecodeResult,
}

impl Decoded {
    pub fn transcript(&self) -> Transcript {
        Transcript {
            id: self.id.clone(),
            words: self
                .result
                .best()
                .map(|h| h.words.clone())
                .unwrap_or_default(),
        }
    }
}

/// Decodes every job; output order follows `jobs`. `threads == 1` runs
/// serially, 0 lets the pool pick.
pub fn decode_batch(
    jobs: &[Job],
    system: &System,
    verifier: Option<&Verifier>,
    settings: &Settings,
    threads: usize,
) -> Result<Vec<Decoded>> {
    let run = |job: &Job| -> Result<Decoded> {
        let x = Utterance::new(job.id.clone());
        let cfg = settings.decoder(job.am1.length_bound);
        let result = match verifier {
            None => decode_single(&x, &*job.am1.am, &system.mlm, &cfg)?,
            Some(v) => {
                let am2 = job.am2.as_ref().ok_or_else(|| {
                    Error::Usage(format!("utterance {} has no second-system scorer", job.id))
                })?;
                decode_joint(&x, &*job.am1.am, &system.mlm, v.with_am(&*am2.am), &cfg)?
            }
        };
        Ok(Decoded {
            id: job.id.clone(),
            result,
        })
    };
    if threads == 1 {
        return jobs.iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))?;
    pool.install(|| jobs.par_iter().map(run).collect())
}

#[derive(Serialize)]
struct NbestRecord<'a> {
    id: &'a str,
    rank: usize,
    score: f64,
    sc1: f64,
    sc2: Option<f64>,
    words: &'a [String],
    ys1: &'a [String],
    ys2: Option<&'a [String]>,
}

/// One JSON object per hypothesis and line. Non-finite scores are written
/// as `null`.
pub fn render_nbest(decoded: &[Decoded], joint: bool) -> String {
    let mut out = String::new();
    for d in decoded {
        for (rank, h) in d.result.hypotheses.iter().enumerate() {
            let rec = NbestRecord {
                id: &d.id,
                rank: rank + 1,
                score: h.score,
                sc1: h.sc1,
                sc2: joint.then_some(h.sc2),
                words: &h.words,
                ys1: &h.ys1,
                ys2: joint.then_some(h.ys2.as_slice()),
            };
            out.push_str(&serde_json::to_string(&rec).expect("plain record serializes"));
            out.push('\n');
        }
    }
    out
}

pub fn render_transcripts(decoded: &[Decoded]) -> String {
    let ts: Vec<Transcript> = decoded.iter().map(Decoded::transcript).collect();
    crate::files::format_transcripts(&ts)
}
