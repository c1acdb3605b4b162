//! Deterministic synthetic signature datasets for desk-scale benchmark runs.
//!
//! Every subject gets a base trajectory built from seeded sinusoids plus a
//! correlated pressure profile. Genuine samples perturb the base with small
//! jitter and a smooth monotone time warp; skilled forgeries redraw against
//! the victim's base with larger temporal and amplitude distortion; random
//! forgeries reuse other subjects' genuine signatures. Output is bit-stable
//! for a fixed seed.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sigdata::{
    write_comparison_file, write_label_file, write_signature_file, Authenticity, ComparisonTask,
    DataError, LabelRecord, PenState, Scenario, Signature, SignatureMeta, SignatureSample, Truth,
    WritingInput, PRESSURE_FILL,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("need at least 2 subjects, got {found}")]
    TooFewSubjects { found: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Frozen generator constants. Changing these changes every seeded fixture.
mod tuning {
    /// Samples in a base trajectory (10 ms steps).
    pub const BASE_SAMPLES: std::ops::RangeInclusive<usize> = 300..=800;
    pub const SINUSOIDS: std::ops::RangeInclusive<usize> = 3..=5;
    pub const SAMPLE_STEP_MS: i64 = 10;
    /// Warp magnitude per term; genuine realizations stay close to the base.
    pub const GENUINE_WARP: f64 = 0.03;
    pub const SKILLED_WARP: f64 = 0.055;
    pub const GENUINE_NOISE: f64 = 1.5;
    pub const SKILLED_NOISE: f64 = 2.2;
    /// Relative amplitude morph of a skilled forger's redraw.
    pub const SKILLED_AMP_MORPH: f64 = 0.05;
    /// Session 2 multiplies the genuine jitter scale.
    pub const SESSION_JITTER_MULT: f64 = 1.3;
    pub const GENUINE_PER_SUBJECT: usize = 4;
    pub const SKILLED_PER_SUBJECT: usize = 4;
    pub const RANDOM_PER_SUBJECT: usize = 3;
}

/// Paths and counts of one generated dataset.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub out_dir: PathBuf,
    pub signature_files: Vec<PathBuf>,
    /// Genuine + skilled + random comparisons, shuffled.
    pub comparisons_all: PathBuf,
    pub labels_all: PathBuf,
    /// Genuine + random-forgery comparisons only.
    pub comparisons_random: PathBuf,
    pub labels_random: PathBuf,
    /// Genuine + skilled-forgery comparisons only.
    pub comparisons_skilled: PathBuf,
    pub labels_skilled: PathBuf,
    pub n_subjects: usize,
    pub n_comparisons_all: usize,
}

struct SinusoidChannel {
    center: f64,
    amplitudes: Vec<f64>,
    freqs_hz: Vec<f64>,
    phases: Vec<f64>,
}

impl SinusoidChannel {
    fn draw(rng: &mut ChaCha8Rng, components: usize) -> SinusoidChannel {
        let center = rng.random_range(200.0..800.0);
        let mut amplitudes = Vec::with_capacity(components);
        let mut freqs_hz = Vec::with_capacity(components);
        let mut phases = Vec::with_capacity(components);
        for k in 1..=components {
            amplitudes.push(rng.random_range(20.0..80.0) / k as f64);
            freqs_hz.push(rng.random_range(0.2..1.2));
            phases.push(rng.random_range(0.0..2.0 * PI));
        }
        SinusoidChannel {
            center,
            amplitudes,
            freqs_hz,
            phases,
        }
    }

    fn eval(&self, tau_s: f64) -> f64 {
        self.center
            + self
                .amplitudes
                .iter()
                .zip(&self.freqs_hz)
                .zip(&self.phases)
                .map(|((a, f), p)| a * (2.0 * PI * f * tau_s + p).sin())
                .sum::<f64>()
    }

    fn morphed(&self, rng: &mut ChaCha8Rng, relative: f64) -> SinusoidChannel {
        SinusoidChannel {
            center: self.center,
            amplitudes: self
                .amplitudes
                .iter()
                .map(|a| a * (1.0 + rng.random_range(-relative..relative)))
                .collect(),
            freqs_hz: self.freqs_hz.clone(),
            phases: self
                .phases
                .iter()
                .map(|p| p + rng.random_range(-0.08..0.08))
                .collect(),
        }
    }
}

struct SubjectBase {
    x: SinusoidChannel,
    y: SinusoidChannel,
    pressure_freq_hz: f64,
    pressure_phase: f64,
    base_samples: usize,
    input: WritingInput,
    scenario: Scenario,
}

impl SubjectBase {
    fn draw(rng: &mut ChaCha8Rng, index: usize) -> SubjectBase {
        let components = rng.random_range(tuning::SINUSOIDS);
        let x = SinusoidChannel::draw(rng, components);
        let y = SinusoidChannel::draw(rng, components);
        // pressure rides the dominant x frequency so the profile tracks the
        // strokes
        let pressure_freq_hz = x.freqs_hz[0];
        let pressure_phase = rng.random_range(0.0..2.0 * PI);
        let (input, scenario) = if index % 2 == 0 {
            (WritingInput::Stylus, Scenario::Office)
        } else {
            (WritingInput::Finger, Scenario::Mobile)
        };
        SubjectBase {
            x,
            y,
            pressure_freq_hz,
            pressure_phase,
            base_samples: rng.random_range(tuning::BASE_SAMPLES),
            input,
            scenario,
        }
    }

    fn duration_s(&self) -> f64 {
        (self.base_samples as i64 - 1) as f64 * tuning::SAMPLE_STEP_MS as f64 / 1000.0
    }

    fn pressure(&self, tau_s: f64) -> f64 {
        let envelope = (PI * tau_s / self.duration_s()).sin().max(0.05);
        let wobble = (2.0 * PI * self.pressure_freq_hz * tau_s + self.pressure_phase).sin();
        (250.0 * envelope + 80.0 * wobble + 120.0).max(10.0)
    }
}

struct Realization {
    warp1: f64,
    warp2: f64,
    noise: f64,
    samples: usize,
}

impl Realization {
    fn draw(rng: &mut ChaCha8Rng, base: &SubjectBase, warp_max: f64, noise: f64) -> Realization {
        let stretch = rng.random_range(0.92..1.08);
        let samples = ((base.base_samples as f64 * stretch) as usize).clamp(250, 900);
        Realization {
            warp1: rng.random_range(-warp_max..warp_max),
            warp2: rng.random_range(-warp_max..warp_max),
            noise,
            samples,
        }
    }

    /// Smooth monotone reparameterization of [0,1]; endpoints fixed.
    fn warp(&self, u: f64) -> f64 {
        u + self.warp1 * (PI * u).sin() + self.warp2 * (2.0 * PI * u).sin()
    }
}

fn render(
    rng: &mut ChaCha8Rng,
    base: &SubjectBase,
    x_chan: &SinusoidChannel,
    y_chan: &SinusoidChannel,
    real: &Realization,
    meta: SignatureMeta,
    pen_up_gaps: bool,
) -> Signature {
    let n = real.samples;
    let duration = base.duration_s();
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let u = i as f64 / (n - 1) as f64;
        let tau = real.warp(u) * duration;
        let x = x_chan.eval(tau) + rng.random_range(-real.noise..real.noise);
        let y = y_chan.eval(tau) + rng.random_range(-real.noise..real.noise);
        let pressure = if base.input == WritingInput::Finger {
            PRESSURE_FILL
        } else {
            (base.pressure(tau) + rng.random_range(-real.noise..real.noise) * 4.0).max(1.0)
        };
        samples.push(SignatureSample {
            x,
            y,
            pressure,
            t: i as i64 * tuning::SAMPLE_STEP_MS,
            pen_state: PenState::Down,
        });
    }
    if pen_up_gaps && base.input == WritingInput::Stylus {
        let gaps = rng.random_range(1..=2);
        for _ in 0..gaps {
            let start = rng.random_range(n / 10..(n * 8) / 10);
            let len = rng.random_range(3..=6);
            for s in samples.iter_mut().skip(start).take(len) {
                s.pressure = 0.0;
                s.pen_state = PenState::Up;
            }
        }
    }
    Signature::new(samples, meta).expect("generator output satisfies signature invariants")
}

struct PendingComparison {
    reference: PathBuf,
    questioned: PathBuf,
    truth: Truth,
    forgery: Option<Authenticity>,
}

fn emit(
    rows: &[&PendingComparison],
    rng: &mut ChaCha8Rng,
    id_prefix: char,
    comparisons_path: &Path,
    labels_path: &Path,
) -> Result<(), SynthError> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let mut tasks = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (seq, &row_idx) in order.iter().enumerate() {
        let row = rows[row_idx];
        let id = format!("{id_prefix}{seq:05}");
        tasks.push(ComparisonTask {
            comparison_id: id.clone(),
            reference_path: row.reference.clone(),
            questioned_path: row.questioned.clone(),
        });
        labels.push(LabelRecord {
            comparison_id: id,
            truth: row.truth,
        });
    }
    write_comparison_file(&tasks, comparisons_path)?;
    write_label_file(&labels, labels_path)?;
    Ok(())
}

/// Generates the full dataset under `out_dir`: signature files, three
/// comparison/label file pairs (all, random-forgery-only,
/// skilled-forgery-only), and a manifest summary. Byte-identical across runs
/// for the same seed and subject count.
pub fn generate_dataset(
    seed: u64,
    n_subjects: usize,
    out_dir: &Path,
) -> Result<DatasetManifest, SynthError> {
    if n_subjects < 2 {
        return Err(SynthError::TooFewSubjects { found: n_subjects });
    }
    let sig_dir = out_dir.join("signatures");
    fs::create_dir_all(&sig_dir).map_err(|source| SynthError::Io {
        path: sig_dir.clone(),
        source,
    })?;

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let subject_seeds: Vec<u64> = (0..n_subjects).map(|_| master.next_u64()).collect();
    let shuffle_seed = master.next_u64();
    let picks_seed = master.next_u64();

    let mut signature_files = Vec::new();
    // relative paths of each subject's genuine files, for random forgeries
    let mut genuine_rel: Vec<Vec<PathBuf>> = Vec::with_capacity(n_subjects);

    for (idx, &subject_seed) in subject_seeds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(subject_seed);
        let base = SubjectBase::draw(&mut rng, idx);
        let subject_id = format!("s{idx:03}");
        let mut rel_paths = Vec::new();

        for k in 0..tuning::GENUINE_PER_SUBJECT {
            let session = 1 + (k / 2) as u8;
            let mult = if session == 1 {
                1.0
            } else {
                tuning::SESSION_JITTER_MULT
            };
            let real = Realization::draw(
                &mut rng,
                &base,
                tuning::GENUINE_WARP * mult,
                tuning::GENUINE_NOISE * mult,
            );
            let meta = SignatureMeta {
                subject_id: subject_id.clone(),
                input: base.input,
                scenario: base.scenario,
                authenticity: Authenticity::Genuine,
                session: Some(session),
            };
            let sig = render(&mut rng, &base, &base.x, &base.y, &real, meta, true);
            let rel = PathBuf::from(format!("signatures/{subject_id}_g{k}.sig"));
            write_signature_file(&sig, &out_dir.join(&rel))?;
            signature_files.push(rel.clone());
            rel_paths.push(rel);
        }

        for k in 0..tuning::SKILLED_PER_SUBJECT {
            let session = 1 + (k / 2) as u8;
            let forged_x = base.x.morphed(&mut rng, tuning::SKILLED_AMP_MORPH);
            let forged_y = base.y.morphed(&mut rng, tuning::SKILLED_AMP_MORPH);
            let real =
                Realization::draw(&mut rng, &base, tuning::SKILLED_WARP, tuning::SKILLED_NOISE);
            let meta = SignatureMeta {
                subject_id: subject_id.clone(),
                input: base.input,
                scenario: base.scenario,
                authenticity: Authenticity::SkilledForgery,
                session: Some(session),
            };
            let sig = render(&mut rng, &base, &forged_x, &forged_y, &real, meta, true);
            let rel = PathBuf::from(format!("signatures/{subject_id}_f{k}.sig"));
            write_signature_file(&sig, &out_dir.join(&rel))?;
            signature_files.push(rel);
        }

        genuine_rel.push(rel_paths);
    }

    let mut picks_rng = ChaCha8Rng::seed_from_u64(picks_seed);
    let mut rows: Vec<PendingComparison> = Vec::new();
    for idx in 0..n_subjects {
        let reference = genuine_rel[idx][0].clone();
        for k in 1..tuning::GENUINE_PER_SUBJECT {
            rows.push(PendingComparison {
                reference: reference.clone(),
                questioned: genuine_rel[idx][k].clone(),
                truth: Truth::Genuine,
                forgery: None,
            });
        }
        for k in 0..tuning::SKILLED_PER_SUBJECT {
            rows.push(PendingComparison {
                reference: reference.clone(),
                questioned: PathBuf::from(format!("signatures/s{idx:03}_f{k}.sig")),
                truth: Truth::Impostor,
                forgery: Some(Authenticity::SkilledForgery),
            });
        }
        for _ in 0..tuning::RANDOM_PER_SUBJECT {
            let mut other = picks_rng.random_range(0..n_subjects - 1);
            if other >= idx {
                other += 1;
            }
            let g = picks_rng.random_range(0..tuning::GENUINE_PER_SUBJECT);
            rows.push(PendingComparison {
                reference: reference.clone(),
                questioned: genuine_rel[other][g].clone(),
                truth: Truth::Impostor,
                forgery: Some(Authenticity::RandomForgery),
            });
        }
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let all: Vec<&PendingComparison> = rows.iter().collect();
    let random_only: Vec<&PendingComparison> = rows
        .iter()
        .filter(|r| r.forgery != Some(Authenticity::SkilledForgery))
        .collect();
    let skilled_only: Vec<&PendingComparison> = rows
        .iter()
        .filter(|r| r.forgery != Some(Authenticity::RandomForgery))
        .collect();

    let manifest = DatasetManifest {
        out_dir: out_dir.to_path_buf(),
        signature_files,
        comparisons_all: out_dir.join("comparisons_all.txt"),
        labels_all: out_dir.join("labels_all.txt"),
        comparisons_random: out_dir.join("comparisons_random.txt"),
        labels_random: out_dir.join("labels_random.txt"),
        comparisons_skilled: out_dir.join("comparisons_skilled.txt"),
        labels_skilled: out_dir.join("labels_skilled.txt"),
        n_subjects,
        n_comparisons_all: all.len(),
    };

    emit(
        &all,
        &mut shuffle_rng,
        'a',
        &manifest.comparisons_all,
        &manifest.labels_all,
    )?;
    emit(
        &random_only,
        &mut shuffle_rng,
        'r',
        &manifest.comparisons_random,
        &manifest.labels_random,
    )?;
    emit(
        &skilled_only,
        &mut shuffle_rng,
        'k',
        &manifest.comparisons_skilled,
        &manifest.labels_skilled,
    )?;

    let summary = format!(
        "seed {seed}\nsubjects {n_subjects}\nsignatures {}\ncomparisons_all {}\n\
         comparisons_random {}\ncomparisons_skilled {}\n",
        manifest.signature_files.len(),
        all.len(),
        random_only.len(),
        skilled_only.len()
    );
    let manifest_path = out_dir.join("manifest.txt");
    fs::write(&manifest_path, summary).map_err(|source| SynthError::Io {
        path: manifest_path,
        source,
    })?;

    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::normalize_symmetric;
    use crate::sigdata::{parse_comparison_file, parse_label_file, parse_signature_file};
    use crate::verifiers::threshold_distance;

    #[test]
    fn rejects_fewer_than_two_subjects() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            generate_dataset(1, 1, dir.path()),
            Err(SynthError::TooFewSubjects { found: 1 })
        ));
    }

    #[test]
    fn identical_seeds_give_byte_identical_output() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let ma = generate_dataset(42, 2, dir_a.path()).unwrap();
        let mb = generate_dataset(42, 2, dir_b.path()).unwrap();
        assert_eq!(ma.signature_files, mb.signature_files);
        for rel in &ma.signature_files {
            let a = fs::read(dir_a.path().join(rel)).unwrap();
            let b = fs::read(dir_b.path().join(rel)).unwrap();
            assert_eq!(a, b, "{rel:?}");
        }
        for (pa, pb) in [
            (&ma.comparisons_all, &mb.comparisons_all),
            (&ma.labels_all, &mb.labels_all),
            (&ma.comparisons_random, &mb.comparisons_random),
            (&ma.comparisons_skilled, &mb.comparisons_skilled),
        ] {
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
    }

    #[test]
    fn every_generated_file_parses_and_labels_match() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_dataset(7, 3, dir.path()).unwrap();
        for rel in &manifest.signature_files {
            parse_signature_file(&dir.path().join(rel)).unwrap();
        }
        let tasks = parse_comparison_file(&manifest.comparisons_all).unwrap();
        let labels = parse_label_file(&manifest.labels_all).unwrap();
        assert_eq!(tasks.len(), labels.len());
        assert_eq!(tasks.len(), manifest.n_comparisons_all);
        for (t, l) in tasks.iter().zip(&labels) {
            assert_eq!(t.comparison_id, l.comparison_id);
            assert!(dir.path().join(&t.reference_path).exists());
            assert!(dir.path().join(&t.questioned_path).exists());
        }
    }

    #[test]
    fn genuine_pairs_are_closer_than_random_forgeries() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_dataset(42, 6, dir.path()).unwrap();
        let tasks = parse_comparison_file(&manifest.comparisons_random).unwrap();
        let labels = parse_label_file(&manifest.labels_random).unwrap();
        let mut genuine = Vec::new();
        let mut random = Vec::new();
        for (t, l) in tasks.iter().zip(&labels) {
            let r = parse_signature_file(&dir.path().join(&t.reference_path)).unwrap();
            let q = parse_signature_file(&dir.path().join(&t.questioned_path)).unwrap();
            let d = threshold_distance(&normalize_symmetric(&r), &normalize_symmetric(&q)).unwrap();
            match l.truth {
                Truth::Genuine => genuine.push(d),
                Truth::Impostor => random.push(d),
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&genuine) < mean(&random),
            "genuine {} vs random {}",
            mean(&genuine),
            mean(&random)
        );
    }
}
