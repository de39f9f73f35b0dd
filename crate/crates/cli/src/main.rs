use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jointbpe::am::{
    oracle_scorers, source_utterances, table_scorers, AmSource, OracleNoise, Scorer,
};
use jointbpe::batch::{decode_batch, render_nbest, render_transcripts, Decoded, Job};
use jointbpe::files::{self, Transcript};
use jointbpe::settings::{Overrides, Settings};
use jointbpe::synth::{run_trend, Task, TaskConfig};
use jointbpe::system::{System, SystemPaths, Verifier};
use jointbpe::{Error, Result};
use jointbpe_core::lm::NGramLm;
use jointbpe_core::subword::{encode_corpus, BpeModel, UnitMode};
use jointbpe_core::wer::{align, ErrorCounts};

#[derive(Parser)]
#[command(
    name = "jointbpe",
    version,
    about = "Phone/character BPE training, multi-level LM decoding and joint decoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a BPE model over pronunciations or spellings.
    BpeTrain(BpeTrainArgs),
    /// Train an add-k n-gram LM and write it as ARPA.
    LmTrain(LmTrainArgs),
    /// Decode with one system.
    Decode(DecodeArgs),
    /// Decode with a phone system verified by a character system.
    DecodeJoint(DecodeJointArgs),
    /// Word error rate of a hypothesis transcript file.
    Score(ScoreArgs),
    /// Write a synthetic lexicon, training text and test transcripts.
    Synth(SynthArgs),
    /// Phone-only, char-only and joint WER on a synthetic task.
    Trend(TrendArgs),
}

#[derive(Args)]
struct BpeTrainArgs {
    /// Training text, one sentence per line.
    #[arg(long)]
    input: PathBuf,
    /// Base units plus merges.
    #[arg(long)]
    vocab_size: usize,
    #[arg(long, default_value_t = '_')]
    marker: char,
    #[arg(long, default_value = "phone")]
    mode: UnitMode,
    /// Defaults to `+` in phone mode and nothing in char mode.
    #[arg(long)]
    joiner: Option<String>,
    /// Required in phone mode.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LmTrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    add_k: f64,
    /// Encode the text with this BPE model first; every unit of the model
    /// joins the vocabulary.
    #[arg(long)]
    bpe: Option<PathBuf>,
    #[arg(long, default_value = "phone")]
    mode: UnitMode,
    /// Pronunciations for phone-mode encoding; without --bpe, its words
    /// join the vocabulary.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    bpe: PathBuf,
    #[arg(long)]
    word_lm: PathBuf,
    #[arg(long)]
    subword_lm: PathBuf,
    #[arg(long, default_value = "phone")]
    mode: UnitMode,
}

#[derive(Args)]
struct WeightArgs {
    /// TOML file of decoding weights; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `default` or `alt`; replaces a preset named in --config.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    oov_penalty: Option<f64>,
    #[arg(long)]
    beamsize: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args)]
struct NoiseArgs {
    /// Gaussian noise on oracle scores; 0 keeps them clean.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = OracleNoise::default().margin)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutputArgs {
    /// 1-best transcripts; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// N-best list, one JSON record per hypothesis.
    #[arg(long)]
    nbest: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct DecodeArgs {
    /// `oracle:<transcripts>` or `table:<dir>` of `<id>.am` files.
    #[arg(long)]
    am: AmSource,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DecodeJointArgs {
    #[command(flatten)]
    first: DecodeArgs,
    /// Scores of the character system, same syntax as --am.
    #[arg(long)]
    am2: AmSource,
    #[arg(long)]
    bpe2: PathBuf,
    #[arg(long)]
    lm2: PathBuf,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = TaskConfig::default().train_sentences)]
    train_sentences: usize,
    #[arg(long, default_value_t = TaskConfig::default().test_utterances)]
    test_utterances: usize,
}

#[derive(Args)]
struct TrendArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    noise: f64,
    #[arg(long, default_value_t = OracleNoise::default().margin)]
    margin: f64,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::BpeTrain(a) => bpe_train(a),
        Command::LmTrain(a) => lm_train(a),
        Command::Decode(a) => decode(a),
        Command::DecodeJoint(a) => decode_joint(a),
        Command::Score(a) => score(a),
        Command::Synth(a) => synth(a),
        Command::Trend(a) => trend(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn nonempty_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let corpus = files::load_corpus(path)?;
    if corpus.is_empty() {
        return Err(Error::Config {
            path: path.to_path_buf(),
            msg: "no training text".into(),
        });
    }
    Ok(corpus)
}

fn bpe_train(a: BpeTrainArgs) -> Result<()> {
    let corpus = nonempty_corpus(&a.input)?;
    let lexicon = match (a.mode, &a.lexicon) {
        (UnitMode::Phone, None) => {
            return Err(Error::Usage("--lexicon is required in phone mode".into()))
        }
        (UnitMode::Phone, Some(p)) => Some(files::load_lexicon(p)?),
        (UnitMode::Char, Some(_)) => {
            warn("--lexicon is ignored in char mode");
            None
        }
        (UnitMode::Char, None) => None,
    };
    let mut words = Vec::new();
    let mut missing = 0usize;
    for w in corpus.iter().flatten() {
        match a.mode.word_tokens(&w.to_lowercase(), lexicon.as_ref()) {
            Some(t) if !t.is_empty() => words.push(t),
            _ => missing += 1,
        }
    }
    if missing > 0 {
        warn(format!(
            "{missing} word tokens without a pronunciation were skipped"
        ));
    }
    let joiner = a.joiner.as_deref().unwrap_or(a.mode.default_joiner());
    let model = BpeModel::train(&words, a.vocab_size, a.marker, joiner)
        .map_err(|e| Error::format(&a.input, e))?;
    if model.vocab_size() < a.vocab_size {
        warn(format!(
            "no pair occurs twice after {} merges; stopped early",
            model.merges().len()
        ));
    }
    files::write_text(&a.out, &model.to_text())
}

fn lm_train(a: LmTrainArgs) -> Result<()> {
    let corpus = nonempty_corpus(&a.input)?;
    let lexicon = a.lexicon.as_deref().map(files::load_lexicon).transpose()?;
    let (corpus, extra): (Vec<Vec<String>>, Vec<String>) = match &a.bpe {
        Some(p) => {
            let bpe = files::load_bpe(p)?;
            if a.mode == UnitMode::Phone && lexicon.is_none() {
                return Err(Error::Usage(
                    "--lexicon is required to encode phone units".into(),
                ));
            }
            let encoded = corpus
                .iter()
                .map(|s| encode_corpus(s, lexicon.as_ref(), &bpe, a.mode))
                .collect();
            (encoded, bpe.vocab().map(str::to_string).collect())
        }
        None => (
            corpus,
            lexicon
                .iter()
                .flat_map(|l| l.words())
                .map(str::to_string)
                .collect(),
        ),
    };
    let lm = NGramLm::train_with_vocab(&corpus, &extra, a.order, a.add_k)?;
    files::write_text(&a.out, &lm.write_arpa())
}

impl WeightArgs {
    fn layers(&self, gamma: Option<f64>) -> Result<Settings> {
        let mut file = match &self.config {
            Some(p) => Overrides::from_toml_file(p)?,
            None => Overrides::default(),
        };
        if self.preset.is_some() {
            file.preset.clone_from(&self.preset);
        }
        let flags = Overrides {
            alpha: self.alpha,
            beta: self.beta,
            gamma,
            oov_penalty: self.oov_penalty,
            beamsize: self.beamsize,
            max_steps: self.max_steps,
            ..Default::default()
        };
        Settings::resolve([&file, &flags])
    }
}

impl NoiseArgs {
    fn noise(&self) -> OracleNoise {
        OracleNoise {
            sigma: self.noise,
            margin: self.margin,
            seed: self.seed,
            ..OracleNoise::default()
        }
    }
}

/// Scorers for `utts` from `source`, in their order.
fn scorers(
    source: &AmSource,
    utts: &[Transcript],
    vocab: &jointbpe_core::lm::Vocab,
    bpe: &BpeModel,
    units_of: impl Fn(&[String]) -> Vec<String>,
    noise: &OracleNoise,
    stream: u64,
) -> Result<Vec<Scorer>> {
    match source {
        AmSource::Table(dir) => {
            let ids: Vec<String> = utts.iter().map(|t| t.id.clone()).collect();
            table_scorers(dir, &ids, vocab)
        }
        AmSource::Oracle(path) => {
            let by_id: BTreeMap<String, Vec<String>> = files::load_transcripts(path)?
                .into_iter()
                .map(|t| (t.id, t.words))
                .collect();
            let refs = utts
                .iter()
                .map(|t| {
                    by_id
                        .get(&t.id)
                        .map(|w| units_of(w))
                        .ok_or_else(|| Error::Config {
                            path: path.clone(),
                            msg: format!("no reference for utterance {}", t.id),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            oracle_scorers(vocab, bpe, &refs, noise, stream)
        }
    }
}

fn load_system(a: &DecodeArgs, settings: &Settings) -> Result<System> {
    let s = &a.system;
    let paths = SystemPaths {
        lexicon: s.lexicon.clone(),
        bpe: s.bpe.clone(),
        subword_lm: s.subword_lm.clone(),
        word_lm: s.word_lm.clone(),
    };
    System::load(&paths, s.mode, settings.multilevel())
}

fn first_jobs(a: &DecodeArgs, system: &System) -> Result<(Vec<Transcript>, Vec<Scorer>)> {
    let utts = source_utterances(&a.am)?;
    let am1 = scorers(
        &a.am,
        &utts,
        system.mlm.subword_vocab(),
        &system.bpe,
        |w| system.units_of(w),
        &a.noise.noise(),
        0,
    )?;
    Ok((utts, am1))
}

fn decode(a: DecodeArgs) -> Result<()> {
    let settings = a.weights.layers(None)?;
    let system = load_system(&a, &settings)?;
    let (utts, am1) = first_jobs(&a, &system)?;
    let jobs: Vec<Job> = utts
        .iter()
        .zip(am1)
        .map(|(t, am1)| Job {
            id: t.id.clone(),
            am1,
            am2: None,
        })
        .collect();
    let decoded = decode_batch(&jobs, &system, None, &settings, a.output.jobs)?;
    write_outputs(&a.output, &decoded, false)
}

fn decode_joint(a: DecodeJointArgs) -> Result<()> {
    let settings = a.first.weights.layers(a.gamma)?;
    let system = load_system(&a.first, &settings)?;
    let verifier = Verifier::load(&a.bpe2, &a.lm2)?;
    let (utts, am1) = first_jobs(&a.first, &system)?;
    let am2 = scorers(
        &a.am2,
        &utts,
        verifier.lm_vocab(),
        &verifier.bpe,
        |w| verifier.units_of(w),
        &a.first.noise.noise(),
        1,
    )?;
    let jobs: Vec<Job> = utts
        .iter()
        .zip(am1)
        .zip(am2)
        .map(|((t, am1), am2)| Job {
            id: t.id.clone(),
            am1,
            am2: Some(am2),
        })
        .collect();
    let decoded = decode_batch(
        &jobs,
        &system,
        Some(&verifier),
        &settings,
        a.first.output.jobs,
    )?;
    write_outputs(&a.first.output, &decoded, true)
}

fn write_outputs(out: &OutputArgs, decoded: &[Decoded], joint: bool) -> Result<()> {
    for d in decoded.iter().filter(|d| d.result.truncated) {
        warn(format!(
            "utterance {}: no hypothesis ended within {} steps",
            d.id, d.result.steps
        ));
    }
    let text = render_transcripts(decoded);
    match &out.out {
        Some(p) => files::write_text(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &out.nbest {
        files::write_text(p, &render_nbest(decoded, joint))?;
    }
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let refs = files::load_transcripts(&a.reference)?;
    let hyps: BTreeMap<String, Vec<String>> = files::load_transcripts(&a.hyp)?
        .into_iter()
        .map(|t| (t.id, t.words))
        .collect();
    if refs.is_empty() {
        return Err(Error::Config {
            path: a.reference,
            msg: "no utterances".into(),
        });
    }
    let mut total = ErrorCounts::default();
    for r in &refs {
        if r.words.is_empty() {
            return Err(Error::Config {
                path: a.reference.clone(),
                msg: format!("utterance {} has an empty reference", r.id),
            });
        }
        let h = hyps.get(&r.id).ok_or_else(|| Error::Config {
            path: a.hyp.clone(),
            msg: format!("no hypothesis for utterance {}", r.id),
        })?;
        total += align(&r.words, h);
    }
    println!(
        "WER {:.2} ({} errors / {} words: {} sub, {} del, {} ins; {} utterances)",
        total.wer(),
        total.edits(),
        total.reference_words,
        total.substitutions,
        total.deletions,
        total.insertions,
        refs.len()
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = TaskConfig {
        seed: a.seed,
        train_sentences: a.train_sentences,
        test_utterances: a.test_utterances,
        ..TaskConfig::default()
    };
    let task = Task::generate(&cfg);
    files::write_text(&a.out_dir.join("lexicon.txt"), &task.lexicon_text())?;
    files::write_text(&a.out_dir.join("train.txt"), &task.train_text())?;
    files::write_text(
        &a.out_dir.join("test.txt"),
        &files::format_transcripts(&task.test),
    )
}

fn trend(a: TrendArgs) -> Result<()> {
    let settings = a.weights.layers(a.gamma)?;
    let task = Task::generate(&TaskConfig {
        seed: a.seed,
        ..TaskConfig::default()
    });
    let noise = OracleNoise {
        sigma: a.noise,
        margin: a.margin,
        seed: a.seed,
        ..OracleNoise::default()
    };
    let r = run_trend(&task, &noise, &settings, a.jobs)?.report;
    println!(
        "phone {:.2}\nchar  {:.2}\njoint {:.2}",
        r.phone, r.char, r.joint
    );
    Ok(())
}
