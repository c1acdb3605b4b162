//! Domain types for signatures, comparisons, scores, and labels, plus the
//! three text file formats of the benchmark protocol.
//!
//! All types are immutable after construction; invariants are checked by the
//! constructors, so a [`Signature`] in hand is always well-formed. Parsers
//! are pure functions of file content and report errors with line numbers.
//!
//! File formats (UTF-8, LF line endings):
//!
//! * Signature file: `COUNT <n>`, then a `META` line, then `n` rows
//!   `x y t p s` (`s`: 0 = pen-down, 1 = pen-up).
//! * Comparison file: CSV rows `comparison_id,reference_path,questioned_path`;
//!   `#` comment lines ignored.
//! * Score file: CSV rows `comparison_id,score` with scores in [0,1];
//!   `#` comment lines ignored.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Pressure value stored when the capture device reports none (finger input).
pub const PRESSURE_FILL: f64 = 1.0;

/// Pen contact state of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenState {
    Down,
    Up,
}

/// Writing instrument used on the capture device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WritingInput {
    Stylus,
    Finger,
}

impl fmt::Display for WritingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WritingInput::Stylus => write!(f, "stylus"),
            WritingInput::Finger => write!(f, "finger"),
        }
    }
}

/// Acquisition scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Office,
    Mobile,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Office => write!(f, "office"),
            Scenario::Mobile => write!(f, "mobile"),
        }
    }
}

/// Authenticity of a captured signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Authenticity {
    Genuine,
    SkilledForgery,
    RandomForgery,
    Unknown,
}

impl fmt::Display for Authenticity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Authenticity::Genuine => write!(f, "genuine"),
            Authenticity::SkilledForgery => write!(f, "skilled"),
            Authenticity::RandomForgery => write!(f, "random"),
            Authenticity::Unknown => write!(f, "unknown"),
        }
    }
}

/// Ground-truth class of one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    Genuine,
    Impostor,
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truth::Genuine => write!(f, "genuine"),
            Truth::Impostor => write!(f, "impostor"),
        }
    }
}

/// One captured pen sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignatureSample {
    /// Horizontal coordinate, device units.
    pub x: f64,
    /// Vertical coordinate, device units.
    pub y: f64,
    /// Pressure, device units; `PRESSURE_FILL` when the device reports none.
    pub pressure: f64,
    /// Timestamp in integer milliseconds.
    pub t: i64,
    pub pen_state: PenState,
}

/// Acquisition metadata carried with every signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureMeta {
    pub subject_id: String,
    pub input: WritingInput,
    pub scenario: Scenario,
    pub authenticity: Authenticity,
    /// Acquisition session, when known. Serialized only when present.
    pub session: Option<u8>,
}

/// A time-ordered on-line signature.
///
/// Invariants established at construction: at least 2 samples, non-decreasing
/// timestamps, finite values, pressure >= 0, and all-`PRESSURE_FILL` pressure
/// for finger input.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    samples: Vec<SignatureSample>,
    meta: SignatureMeta,
}

/// One row of a comparison file: a (reference, questioned) pair to score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonTask {
    pub comparison_id: String,
    pub reference_path: PathBuf,
    pub questioned_path: PathBuf,
}

impl ComparisonTask {
    /// Resolves both file paths against `base` when they are relative.
    /// Comparison files list paths relative to their own location.
    pub fn resolved_against(&self, base: &Path) -> ComparisonTask {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        ComparisonTask {
            comparison_id: self.comparison_id.clone(),
            reference_path: resolve(&self.reference_path),
            questioned_path: resolve(&self.questioned_path),
        }
    }
}

/// One row of a score file. Higher score = more likely genuine.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub comparison_id: String,
    pub score: f64,
}

/// One row of a label file held by the evaluator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRecord {
    pub comparison_id: String,
    pub truth: Truth,
}

/// Errors from constructing or (de)serializing protocol data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    WrongFieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-numeric token `{token}`")]
    NonNumeric { line: usize, token: String },
    #[error("header declares {declared} samples but file has {found}")]
    SampleCountMismatch { declared: usize, found: usize },
    #[error("signature has {found} samples; at least 2 required")]
    TooFewSamples { found: usize },
    #[error("timestamp decreases at sample {index}")]
    NonMonotonicTimestamps { index: usize },
    #[error("negative pressure at sample {index}")]
    NegativePressure { index: usize },
    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },
    #[error("finger-input signature must carry fill pressure {expected} at sample {index}")]
    FingerPressureNotFill { expected: f64, index: usize },
    #[error("subject id must be a non-empty token without whitespace")]
    BadSubjectId,
    #[error("duplicate comparison id `{id}`")]
    DuplicateComparisonId { id: String },
    #[error("score {score} for `{id}` outside [0,1]")]
    ScoreOutOfRange { id: String, score: f64 },
}

impl Signature {
    /// Builds a signature, validating every type invariant.
    pub fn new(samples: Vec<SignatureSample>, meta: SignatureMeta) -> Result<Signature, DataError> {
        if samples.len() < 2 {
            return Err(DataError::TooFewSamples {
                found: samples.len(),
            });
        }
        if meta.subject_id.is_empty() || meta.subject_id.chars().any(char::is_whitespace) {
            return Err(DataError::BadSubjectId);
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.x.is_finite() && s.y.is_finite() && s.pressure.is_finite()) {
                return Err(DataError::NonFinite { index: i });
            }
            if s.pressure < 0.0 {
                return Err(DataError::NegativePressure { index: i });
            }
            if i > 0 && s.t < samples[i - 1].t {
                return Err(DataError::NonMonotonicTimestamps { index: i });
            }
            if meta.input == WritingInput::Finger && s.pressure != PRESSURE_FILL {
                return Err(DataError::FingerPressureNotFill {
                    expected: PRESSURE_FILL,
                    index: i,
                });
            }
        }
        Ok(Signature { samples, meta })
    }

    /// Internal constructor for derived working copies (normalized channels
    /// may be negative or mean-shifted, which raw-data invariants forbid).
    /// Callers must keep sample count and timestamp order intact.
    pub(crate) fn from_parts_unchecked(
        samples: Vec<SignatureSample>,
        meta: SignatureMeta,
    ) -> Signature {
        debug_assert!(samples.len() >= 2);
        Signature { samples, meta }
    }

    pub fn samples(&self) -> &[SignatureSample] {
        &self.samples
    }

    pub fn meta(&self) -> &SignatureMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Signing duration in milliseconds (last minus first timestamp).
    pub fn duration_ms(&self) -> i64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    pub fn pressures(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.pressure).collect()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

fn read_to_string(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_string(path: &Path, content: &str) -> Result<(), DataError> {
    fs::write(path, content).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_num<T: std::str::FromStr>(token: &str, line: usize) -> Result<T, DataError> {
    token.parse().map_err(|_| DataError::NonNumeric {
        line,
        token: token.to_string(),
    })
}

fn parse_meta_line(line: &str, line_no: usize) -> Result<SignatureMeta, DataError> {
    let bad = |message: &str| DataError::MalformedHeader {
        line: line_no,
        message: message.to_string(),
    };
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("META") {
        return Err(bad("expected `META`"));
    }
    let mut subject = None;
    let mut input = None;
    let mut scenario = None;
    let mut auth = None;
    let mut session = None;
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| bad(&format!("expected key=value, found `{tok}`")))?;
        match key {
            "subject" => subject = Some(value.to_string()),
            "input" => {
                input = Some(match value {
                    "stylus" => WritingInput::Stylus,
                    "finger" => WritingInput::Finger,
                    other => return Err(bad(&format!("unknown input `{other}`"))),
                })
            }
            "scenario" => {
                scenario = Some(match value {
                    "office" => Scenario::Office,
                    "mobile" => Scenario::Mobile,
                    other => return Err(bad(&format!("unknown scenario `{other}`"))),
                })
            }
            "auth" => {
                auth = Some(match value {
                    "genuine" => Authenticity::Genuine,
                    "skilled" => Authenticity::SkilledForgery,
                    "random" => Authenticity::RandomForgery,
                    "unknown" => Authenticity::Unknown,
                    other => return Err(bad(&format!("unknown auth `{other}`"))),
                })
            }
            "session" => session = Some(parse_num::<u8>(value, line_no)?),
            other => return Err(bad(&format!("unknown meta key `{other}`"))),
        }
    }
    Ok(SignatureMeta {
        subject_id: subject.ok_or_else(|| bad("missing subject"))?,
        input: input.ok_or_else(|| bad("missing input"))?,
        scenario: scenario.ok_or_else(|| bad("missing scenario"))?,
        authenticity: auth.ok_or_else(|| bad("missing auth"))?,
        session,
    })
}

/// Parses a signature file in the canonical text format.
pub fn parse_signature_file(path: &Path) -> Result<Signature, DataError> {
    parse_signature_str(&read_to_string(path)?)
}

/// Parses signature file content. Line numbers in errors are 1-based.
pub fn parse_signature_str(content: &str) -> Result<Signature, DataError> {
    let mut lines = content.lines().enumerate();

    let (_, count_line) = lines.next().ok_or(DataError::MalformedHeader {
        line: 1,
        message: "empty file".to_string(),
    })?;
    let declared: usize = match count_line.split_whitespace().collect::<Vec<_>>()[..] {
        ["COUNT", n] => parse_num(n, 1)?,
        _ => {
            return Err(DataError::MalformedHeader {
                line: 1,
                message: "expected `COUNT <n>`".to_string(),
            })
        }
    };

    let (_, meta_line) = lines.next().ok_or(DataError::MalformedHeader {
        line: 2,
        message: "missing META line".to_string(),
    })?;
    let meta = parse_meta_line(meta_line, 2)?;

    let mut samples = Vec::with_capacity(declared);
    for (idx, row) in lines {
        let line_no = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(DataError::WrongFieldCount {
                line: line_no,
                expected: 5,
                found: fields.len(),
            });
        }
        let x: f64 = parse_num(fields[0], line_no)?;
        let y: f64 = parse_num(fields[1], line_no)?;
        let t: i64 = parse_num(fields[2], line_no)?;
        let pressure: f64 = parse_num(fields[3], line_no)?;
        let pen_state = match fields[4] {
            "0" => PenState::Down,
            "1" => PenState::Up,
            other => {
                return Err(DataError::NonNumeric {
                    line: line_no,
                    token: other.to_string(),
                })
            }
        };
        samples.push(SignatureSample {
            x,
            y,
            pressure,
            t,
            pen_state,
        });
    }

    if samples.len() != declared {
        return Err(DataError::SampleCountMismatch {
            declared,
            found: samples.len(),
        });
    }
    Signature::new(samples, meta)
}

/// Writes a signature in the canonical text format. Full decimal precision:
/// the written values parse back bit-identical.
pub fn write_signature_file(sig: &Signature, path: &Path) -> Result<(), DataError> {
    write_string(path, &format_signature(sig))
}

/// Renders a signature as canonical file content.
pub fn format_signature(sig: &Signature) -> String {
    let mut out = String::new();
    out.push_str(&format!("COUNT {}\n", sig.len()));
    let m = sig.meta();
    out.push_str(&format!(
        "META subject={} input={} scenario={} auth={}",
        m.subject_id, m.input, m.scenario, m.authenticity
    ));
    if let Some(s) = m.session {
        out.push_str(&format!(" session={s}"));
    }
    out.push('\n');
    for s in sig.samples() {
        let pen = match s.pen_state {
            PenState::Down => 0,
            PenState::Up => 1,
        };
        out.push_str(&format!("{} {} {} {} {}\n", s.x, s.y, s.t, s.pressure, pen));
    }
    out
}

fn data_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses a comparison file: `comparison_id,reference_path,questioned_path`.
pub fn parse_comparison_file(path: &Path) -> Result<Vec<ComparisonTask>, DataError> {
    parse_comparison_str(&read_to_string(path)?)
}

pub fn parse_comparison_str(content: &str) -> Result<Vec<ComparisonTask>, DataError> {
    let mut seen = HashSet::new();
    let mut tasks = Vec::new();
    for (line, row) in data_lines(content) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(DataError::WrongFieldCount {
                line,
                expected: 3,
                found: fields.len(),
            });
        }
        let id = fields[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateComparisonId { id });
        }
        tasks.push(ComparisonTask {
            comparison_id: id,
            reference_path: PathBuf::from(fields[1].trim()),
            questioned_path: PathBuf::from(fields[2].trim()),
        });
    }
    Ok(tasks)
}

/// Writes a comparison file in row order.
pub fn write_comparison_file(tasks: &[ComparisonTask], path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for t in tasks {
        out.push_str(&format!(
            "{},{},{}\n",
            t.comparison_id,
            t.reference_path.display(),
            t.questioned_path.display()
        ));
    }
    write_string(path, &out)
}

/// Parses a score file: `comparison_id,score` with score in [0,1].
pub fn parse_score_file(path: &Path) -> Result<Vec<ScoreRecord>, DataError> {
    parse_score_str(&read_to_string(path)?)
}

pub fn parse_score_str(content: &str) -> Result<Vec<ScoreRecord>, DataError> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, row) in data_lines(content) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 2 {
            return Err(DataError::WrongFieldCount {
                line,
                expected: 2,
                found: fields.len(),
            });
        }
        let id = fields[0].trim().to_string();
        let score: f64 = parse_num(fields[1].trim(), line)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(DataError::ScoreOutOfRange { id, score });
        }
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateComparisonId { id });
        }
        records.push(ScoreRecord {
            comparison_id: id,
            score,
        });
    }
    Ok(records)
}

/// Writes a score file; scores outside [0,1] are rejected.
pub fn write_score_file(records: &[ScoreRecord], path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for r in records {
        if !(0.0..=1.0).contains(&r.score) {
            return Err(DataError::ScoreOutOfRange {
                id: r.comparison_id.clone(),
                score: r.score,
            });
        }
        out.push_str(&format!("{},{}\n", r.comparison_id, r.score));
    }
    write_string(path, &out)
}

/// Parses a label file: `comparison_id,genuine|impostor`.
pub fn parse_label_file(path: &Path) -> Result<Vec<LabelRecord>, DataError> {
    parse_label_str(&read_to_string(path)?)
}

pub fn parse_label_str(content: &str) -> Result<Vec<LabelRecord>, DataError> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, row) in data_lines(content) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 2 {
            return Err(DataError::WrongFieldCount {
                line,
                expected: 2,
                found: fields.len(),
            });
        }
        let id = fields[0].trim().to_string();
        let truth = match fields[1].trim() {
            "genuine" => Truth::Genuine,
            "impostor" => Truth::Impostor,
            other => {
                return Err(DataError::NonNumeric {
                    line,
                    token: other.to_string(),
                })
            }
        };
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateComparisonId { id });
        }
        records.push(LabelRecord {
            comparison_id: id,
            truth,
        });
    }
    Ok(records)
}

/// Writes a label file.
pub fn write_label_file(records: &[LabelRecord], path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{},{}\n", r.comparison_id, r.truth));
    }
    write_string(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn meta(input: WritingInput) -> SignatureMeta {
        SignatureMeta {
            subject_id: "s001".to_string(),
            input,
            scenario: match input {
                WritingInput::Stylus => Scenario::Office,
                WritingInput::Finger => Scenario::Mobile,
            },
            authenticity: Authenticity::Genuine,
            session: None,
        }
    }

    pub(crate) fn sample(x: f64, y: f64, t: i64, p: f64) -> SignatureSample {
        SignatureSample {
            x,
            y,
            pressure: p,
            t,
            pen_state: PenState::Down,
        }
    }

    fn stylus_sig(rows: &[(f64, f64, i64, f64)]) -> Signature {
        let samples = rows.iter().map(|&(x, y, t, p)| sample(x, y, t, p)).collect();
        Signature::new(samples, meta(WritingInput::Stylus)).unwrap()
    }

    #[test]
    fn parses_well_formed_file() {
        let content = "COUNT 3\n\
                       META subject=s001 input=stylus scenario=office auth=genuine\n\
                       1.5 2.5 0 10 0\n\
                       2.5 3.5 10 20 0\n\
                       3.5 4.5 20 0 1\n";
        let sig = parse_signature_str(content).unwrap();
        assert_eq!(sig.len(), 3);
        assert_eq!(sig.timestamps(), vec![0, 10, 20]);
        assert_eq!(sig.meta().subject_id, "s001");
        assert_eq!(sig.meta().input, WritingInput::Stylus);
        assert_eq!(sig.samples()[2].pen_state, PenState::Up);
    }

    #[test]
    fn count_mismatch_is_reported() {
        let content = "COUNT 5\n\
                       META subject=s001 input=stylus scenario=office auth=genuine\n\
                       1 1 0 1 0\n1 1 1 1 0\n1 1 2 1 0\n1 1 3 1 0\n";
        match parse_signature_str(content) {
            Err(DataError::SampleCountMismatch { declared: 5, found: 4 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn decreasing_timestamps_are_rejected() {
        let content = "COUNT 2\n\
                       META subject=s001 input=stylus scenario=office auth=genuine\n\
                       1 1 10 1 0\n1 1 5 1 0\n";
        match parse_signature_str(content) {
            Err(DataError::NonMonotonicTimestamps { index: 1 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_numeric_token_names_line() {
        let content = "COUNT 2\n\
                       META subject=s001 input=stylus scenario=office auth=genuine\n\
                       1 1 0 1 0\n1 oops 1 1 0\n";
        match parse_signature_str(content) {
            Err(DataError::NonNumeric { line: 4, token }) => assert_eq!(token, "oops"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn fewer_than_two_samples_rejected() {
        let content = "COUNT 1\n\
                       META subject=s001 input=stylus scenario=office auth=genuine\n\
                       1 1 0 1 0\n";
        assert!(matches!(
            parse_signature_str(content),
            Err(DataError::TooFewSamples { found: 1 })
        ));
    }

    #[test]
    fn signature_round_trips_exactly() {
        let sig = stylus_sig(&[
            (1.25, -3.5000001, 0, 0.125),
            (2.0 / 3.0, 4.75, 7, 13.0),
            (93.333333333333329, 5.5, 19, 0.0),
        ]);
        let text = format_signature(&sig);
        let back = parse_signature_str(&text).unwrap();
        assert_eq!(sig, back);
    }

    #[test]
    fn two_sample_signature_writes_count_two() {
        let sig = stylus_sig(&[(0.0, 0.0, 0, 1.0), (1.0, 1.0, 5, 1.0)]);
        assert!(format_signature(&sig).starts_with("COUNT 2\n"));
    }

    #[test]
    fn invalid_signature_cannot_be_constructed_for_writing() {
        let samples = vec![sample(0.0, 0.0, 10, 1.0), sample(1.0, 1.0, 5, 1.0)];
        assert!(matches!(
            Signature::new(samples, meta(WritingInput::Stylus)),
            Err(DataError::NonMonotonicTimestamps { index: 1 })
        ));
    }

    #[test]
    fn finger_pressure_must_be_fill() {
        let samples = vec![sample(0.0, 0.0, 0, 0.5), sample(1.0, 1.0, 5, 0.5)];
        assert!(matches!(
            Signature::new(samples, meta(WritingInput::Finger)),
            Err(DataError::FingerPressureNotFill { index: 0, .. })
        ));
    }

    #[test]
    fn session_survives_round_trip() {
        let mut m = meta(WritingInput::Stylus);
        m.session = Some(2);
        let sig = Signature::new(
            vec![sample(0.0, 0.0, 0, 1.0), sample(1.0, 1.0, 5, 1.0)],
            m,
        )
        .unwrap();
        let back = parse_signature_str(&format_signature(&sig)).unwrap();
        assert_eq!(back.meta().session, Some(2));
    }

    #[test]
    fn comparison_file_preserves_order_and_rejects_duplicates() {
        let content = "# header comment\nc1,a.sig,b.sig\nc2,a.sig,c.sig\n";
        let tasks = parse_comparison_str(content).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].comparison_id, "c1");
        assert_eq!(tasks[1].questioned_path, PathBuf::from("c.sig"));

        let dup = "c1,a.sig,b.sig\nc1,a.sig,c.sig\n";
        match parse_comparison_str(dup) {
            Err(DataError::DuplicateComparisonId { id }) => assert_eq!(id, "c1"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn empty_comparison_file_is_valid() {
        assert!(parse_comparison_str("").unwrap().is_empty());
    }

    #[test]
    fn comparison_wrong_field_count() {
        assert!(matches!(
            parse_comparison_str("c1,only-one-path\n"),
            Err(DataError::WrongFieldCount { line: 1, expected: 3, found: 2 })
        ));
    }

    #[test]
    fn score_file_round_trip_and_range() {
        let records = vec![ScoreRecord {
            comparison_id: "c1".to_string(),
            score: 0.5,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.txt");
        write_score_file(&records, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "c1,0.5\n");
        assert_eq!(parse_score_file(&path).unwrap(), records);

        let bad = vec![ScoreRecord {
            comparison_id: "c1".to_string(),
            score: 1.2,
        }];
        assert!(matches!(
            write_score_file(&bad, &path),
            Err(DataError::ScoreOutOfRange { .. })
        ));
        assert!(matches!(
            parse_score_str("c1,1.2\n"),
            Err(DataError::ScoreOutOfRange { .. })
        ));
    }

    #[test]
    fn empty_score_list_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.txt");
        write_score_file(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
        assert!(parse_score_file(&path).unwrap().is_empty());
    }

    #[test]
    fn duplicate_score_id_rejected_on_parse() {
        assert!(matches!(
            parse_score_str("c1,0.5\nc1,0.6\n"),
            Err(DataError::DuplicateComparisonId { .. })
        ));
    }

    mod roundtrip {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn any_valid_signature_round_trips(
                rows in proptest::collection::vec(
                    (-1e6..1e6f64, -1e6..1e6f64, 0.0..1e4f64, 0..1000i64, proptest::bool::ANY),
                    2..60,
                ),
                session in proptest::option::of(0..10u8),
            ) {
                let mut t = 0i64;
                let samples: Vec<SignatureSample> = rows
                    .iter()
                    .map(|&(x, y, p, dt, up)| {
                        t += dt;
                        SignatureSample {
                            x,
                            y,
                            pressure: p,
                            t,
                            pen_state: if up { PenState::Up } else { PenState::Down },
                        }
                    })
                    .collect();
                let mut m = meta(WritingInput::Stylus);
                m.session = session;
                let sig = Signature::new(samples, m).unwrap();
                let back = parse_signature_str(&format_signature(&sig)).unwrap();
                prop_assert_eq!(sig, back);
            }

            #[test]
            fn any_valid_score_list_round_trips(
                scores in proptest::collection::vec(0.0..=1.0f64, 0..40),
            ) {
                let records: Vec<ScoreRecord> = scores
                    .iter()
                    .enumerate()
                    .map(|(i, &score)| ScoreRecord {
                        comparison_id: format!("c{i}"),
                        score,
                    })
                    .collect();
                let mut text = String::new();
                for r in &records {
                    text.push_str(&format!("{},{}\n", r.comparison_id, r.score));
                }
                prop_assert_eq!(parse_score_str(&text).unwrap(), records);
            }
        }
    }

    #[test]
    fn label_file_round_trip() {
        let records = vec![
            LabelRecord {
                comparison_id: "c1".to_string(),
                truth: Truth::Genuine,
            },
            LabelRecord {
                comparison_id: "c2".to_string(),
                truth: Truth::Impostor,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.txt");
        write_label_file(&records, &path).unwrap();
        assert_eq!(parse_label_file(&path).unwrap(), records);
    }
}
