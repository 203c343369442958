//! Classifier oracles: the in-process contract, a nearest-centroid toy
//! classifier and a line-delimited subprocess protocol.
//!
//! Subprocess protocol, one JSON object per line:
//!
//! ```text
//! request  → {"id": 17, "path": "/tmp/.../sample-17.ldm"}
//! response ← {"label": 3, "probability": 0.91}
//! ```
//!
//! The payload file is a `1 × output_dim` `LDM1` matrix holding the
//! generated sample.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::editor::LatentCode;
use crate::error::{Error, Result};
use crate::io::{read_matrix, write_matrix_with, WriteOptions};

pub type ClassId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassId,
    pub probability: f64,
}

impl Prediction {
    pub(crate) fn checked(self) -> Result<Self> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::OracleFailure(format!(
                "probability {} outside [0, 1]",
                self.probability
            )));
        }
        Ok(self)
    }
}

/// What the classifier gets to see for one sample.
#[derive(Clone, Copy, Debug)]
pub struct SampleRef<'a> {
    /// Unique within a run.
    pub id: u64,
    pub seed_index: u64,
    /// Index into the plan's alphas, `None` for the unedited seed.
    pub edit: Option<usize>,
    pub latent: Option<&'a LatentCode>,
    pub output: &'a Array1<f64>,
}

/// Scores a generated sample. Must be deterministic for a fixed sample.
pub trait ClassifierOracle {
    fn classify(&mut self, sample: &SampleRef<'_>) -> Result<Prediction>;
}

impl<F> ClassifierOracle for F
where
    F: FnMut(&SampleRef<'_>) -> Result<Prediction>,
{
    fn classify(&mut self, sample: &SampleRef<'_>) -> Result<Prediction> {
        self(sample)
    }
}

/// Nearest centroid with Gaussian class likelihoods of common width `sigma`.
///
/// The label is the closest centroid (lowest index on ties); the probability
/// is that class's softmax weight `exp(−d²/2σ²)`, normalized over classes.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestCentroidClassifier {
    centroids: Array2<f64>,
    labels: Vec<ClassId>,
    sigma: f64,
}

impl NearestCentroidClassifier {
    pub fn new(centroids: Array2<f64>, labels: Vec<ClassId>, sigma: f64) -> Result<Self> {
        if centroids.nrows() == 0 || centroids.nrows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} centroids for {} labels",
                centroids.nrows(),
                labels.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) || centroids.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "centroids must be finite and sigma positive".into(),
            ));
        }
        Ok(NearestCentroidClassifier {
            centroids,
            labels,
            sigma,
        })
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn predict(&self, y: &Array1<f64>) -> Result<Prediction> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "sample has dim {}, centroids have {}",
                y.len(),
                self.dim()
            )));
        }
        let d2: Vec<f64> = self
            .centroids
            .rows()
            .into_iter()
            .map(|c| c.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let mut best = 0;
        for (i, &d) in d2.iter().enumerate() {
            if d < d2[best] {
                best = i;
            }
        }
        let denom: f64 = d2
            .iter()
            .map(|&d| (-(d - d2[best]) / (2.0 * self.sigma * self.sigma)).exp())
            .sum();
        Ok(Prediction {
            label: self.labels[best],
            probability: 1.0 / denom,
        })
    }
}

impl ClassifierOracle for NearestCentroidClassifier {
    fn classify(&mut self, sample: &SampleRef<'_>) -> Result<Prediction> {
        self.predict(sample.output)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub id: u64,
    pub path: String,
}

pub type OracleResponse = Prediction;

/// Talks to an external classifier process over stdin/stdout.
pub struct SubprocessOracle {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
    payload_dir: tempfile::TempDir,
}

impl SubprocessOracle {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::OracleFailure(format!("cannot start {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(SubprocessOracle {
            child,
            stdin: Some(BufWriter::new(stdin)),
            stdout: BufReader::new(stdout),
            payload_dir: tempfile::tempdir()?,
        })
    }

    fn payload_path(&self, id: u64) -> PathBuf {
        self.payload_dir.path().join(format!("sample-{id}.ldm"))
    }
}

impl ClassifierOracle for SubprocessOracle {
    fn classify(&mut self, sample: &SampleRef<'_>) -> Result<Prediction> {
        let path = self.payload_path(sample.id);
        let row = sample.output.clone().insert_axis(ndarray::Axis(0));
        write_matrix_with(&path, &row, WriteOptions { allow_nonfinite: true })?;
        let request = OracleRequest {
            id: sample.id,
            path: path.display().to_string(),
        };
        let fail = |what: String| Error::OracleFailure(what);
        let stdin = self.stdin.as_mut().expect("stdin open until drop");
        serde_json::to_writer(&mut *stdin, &request)?;
        stdin
            .write_all(b"\n")
            .and_then(|_| stdin.flush())
            .map_err(|e| fail(format!("write to oracle: {e}")))?;

        let mut line = String::new();
        let n = self
            .stdout
            .read_line(&mut line)
            .map_err(|e| fail(format!("read from oracle: {e}")))?;
        let _ = std::fs::remove_file(&path);
        if n == 0 {
            return Err(fail("oracle closed its output".into()));
        }
        let response: OracleResponse = serde_json::from_str(line.trim())
            .map_err(|e| fail(format!("bad response {:?}: {e}", line.trim())))?;
        response.checked()
    }
}

impl Drop for SubprocessOracle {
    fn drop(&mut self) {
        // Closing stdin tells the oracle to exit.
        self.stdin.take();
        let _ = self.child.wait();
    }
}

/// Serves the subprocess protocol with an in-process classifier: reads
/// requests from `input` until EOF, answers each on `output`.
pub fn serve_oracle<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    classifier: &mut dyn ClassifierOracle,
) -> Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: OracleRequest = serde_json::from_str(&line)?;
        let payload = read_matrix(&request.path)?;
        if payload.nrows() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "oracle payload must have one row, got {}",
                payload.nrows()
            )));
        }
        let y = payload.row(0).to_owned();
        let prediction = classifier.classify(&SampleRef {
            id: request.id,
            seed_index: 0,
            edit: None,
            latent: None,
            output: &y,
        })?;
        serde_json::to_writer(&mut output, &prediction)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample(y: &Array1<f64>) -> SampleRef<'_> {
        SampleRef {
            id: 0,
            seed_index: 0,
            edit: None,
            latent: None,
            output: y,
        }
    }

    #[test]
    fn centroid_probabilities() {
        let c = NearestCentroidClassifier::new(array![[-1.0, 0.0], [1.0, 0.0]], vec![4, 9], 1.0).unwrap();
        let p = c.predict(&array![0.9, 0.0]).unwrap();
        assert_eq!(p.label, 9);
        // d² = 3.61 and 0.01 → p = 1 / (1 + exp(-1.8))
        assert!((p.probability - 1.0 / (1.0 + (-1.8f64).exp())).abs() < 1e-15);
        // Equidistant: lowest index wins, probability 1/2.
        let p = c.predict(&array![0.0, 3.0]).unwrap();
        assert_eq!(p, Prediction { label: 4, probability: 0.5 });
        assert!(c.predict(&array![1.0]).is_err());
    }

    #[test]
    fn closures_are_oracles() {
        let mut calls = 0;
        let mut oracle = |s: &SampleRef<'_>| {
            calls += 1;
            Ok(Prediction { label: s.id as ClassId, probability: 1.0 })
        };
        let y = array![0.0];
        assert_eq!(oracle.classify(&sample(&y)).unwrap().label, 0);
        assert_eq!(calls, 1);
    }

    #[test]
    fn out_of_range_probability_is_an_oracle_failure() {
        let p = Prediction { label: 0, probability: 1.5 };
        assert!(matches!(p.checked(), Err(Error::OracleFailure(_))));
        let p = Prediction { label: 0, probability: f64::NAN };
        assert!(p.checked().is_err());
    }

    #[test]
    fn serve_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ldm");
        crate::io::write_matrix(&path, &array![[0.8, 0.1]]).unwrap();
        let input = format!("{{\"id\":5,\"path\":{:?}}}\n\n", path.display().to_string());
        let mut out = Vec::new();
        let mut c = NearestCentroidClassifier::new(array![[-1.0, 0.0], [1.0, 0.0]], vec![0, 1], 0.5).unwrap();
        serve_oracle(input.as_bytes(), &mut out, &mut c).unwrap();
        let resp: OracleResponse = serde_json::from_slice(out.trim_ascii()).unwrap();
        assert_eq!(resp, c.predict(&array![0.8, 0.1]).unwrap());
    }

    #[test]
    fn subprocess_shell_oracle() {
        let script = r#"while read -r line; do echo '{"label":2,"probability":0.75}'; done"#;
        let mut oracle = SubprocessOracle::spawn("sh", &["-c".into(), script.into()]).unwrap();
        let y = array![1.0, 2.0];
        for _ in 0..3 {
            let p = oracle.classify(&sample(&y)).unwrap();
            assert_eq!(p, Prediction { label: 2, probability: 0.75 });
        }
    }

    #[test]
    fn subprocess_failures() {
        let y = array![1.0];
        let mut bad = SubprocessOracle::spawn("sh", &["-c".into(), "read -r l; echo nonsense".into()]).unwrap();
        assert!(matches!(bad.classify(&sample(&y)), Err(Error::OracleFailure(_))));
        let mut silent = SubprocessOracle::spawn("sh", &["-c".into(), "exit 0".into()]).unwrap();
        assert!(silent.classify(&sample(&y)).is_err());
        assert!(SubprocessOracle::spawn("/nonexistent/oracle", &[]).is_err());
    }
}
