//! Labelled feature corpora built from synthetic single-object scenes, and
//! confusion-matrix evaluation.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pipeline::{largest_cluster_features, DetectionParams};
use super::scene::{class_catalog, generate_scene, instance_spec};
use super::svm::{svm_train, SvmModel, SvmParams};
use crate::error::{Error, Result};

pub const CORPUS_SCHEMA: &str = "corpus.v1";
pub const ORIENTATIONS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub label: String,
    pub features: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub schema: String,
    pub samples: Vec<Sample>,
}

impl Corpus {
    pub fn pairs(&self) -> Vec<(Vec<f64>, String)> {
        self.samples.iter().map(|s| (s.features.clone(), s.label.clone())).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let c: Self = crate::io::read_json(path)?;
        if c.schema != CORPUS_SCHEMA {
            return Err(Error::Format(format!("expected schema {CORPUS_SCHEMA}, found {}", c.schema)));
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

/// `orientations` instances of every catalog class. `tag` selects an
/// independent set of placements, so training and test corpora differ.
/// Classifier trained on the standard training corpus (tag `train`).
pub fn reference_svm(params: &DetectionParams, seed: u64) -> Result<SvmModel> {
    let corpus = build_corpus(ORIENTATIONS, "train", seed, params)?;
    svm_train(&corpus.pairs(), &SvmParams::default(), seed)
}

pub fn build_corpus(orientations: usize, tag: &str, seed: u64, params: &DetectionParams) -> Result<Corpus> {
    let mut samples = Vec::new();
    for class in class_catalog() {
        for k in 0..orientations {
            let spec = instance_spec(&class, k, tag, seed);
            let scene = generate_scene(&spec, seed.wrapping_add(k as u64))?;
            let f = largest_cluster_features(&scene.cloud, params)?;
            samples.push(Sample {
                label: class.label.clone(),
                features: f.to_vec(),
            });
        }
    }
    Ok(Corpus {
        schema: CORPUS_SCHEMA.into(),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Confusion {
    pub classes: Vec<String>,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<usize>>,
    pub accuracy: f64,
    /// Samples the vote rule would report as not found.
    pub rejected: usize,
}

impl Confusion {
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                row.iter().map(|&c| if n > 0 { c as f64 / n as f64 } else { 0.0 }).collect()
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.classes {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (label, row) in self.classes.iter().zip(self.row_normalized()) {
            s.push_str(label);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    /// Heatmap of the row-normalized matrix.
    pub fn to_svg(&self) -> String {
        let n = self.classes.len();
        let cell = 22.0;
        let margin = 130.0;
        let size = margin + cell * n as f64 + 10.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" font-family="sans-serif" font-size="10">"#,
            size + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{margin}" y="{}" font-size="12">accuracy {:.3}</text>"#,
            size + 12.0,
            self.accuracy
        );
        for (i, row) in self.row_normalized().iter().enumerate() {
            let y = margin + cell * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                margin - 4.0,
                y + cell * 0.7,
                self.classes[i]
            );
            for (j, &v) in row.iter().enumerate() {
                let x = margin + cell * j as f64;
                let shade = (255.0 * (1.0 - v)).round() as u8;
                let _ = writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#ccc"/>"##
                );
            }
        }
        for (j, c) in self.classes.iter().enumerate() {
            let x = margin + cell * j as f64 + cell * 0.7;
            let _ = writeln!(
                s,
                r#"<text transform="translate({x},{}) rotate(-60)">{c}</text>"#,
                margin - 4.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Tallies vote winners (ties to the lowest class index) against the labels.
pub fn evaluate_confusion(model: &SvmModel, testset: &[(Vec<f64>, String)]) -> Result<Confusion> {
    if testset.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    let k = model.classes.len();
    let mut counts = vec![vec![0usize; k]; k];
    let mut rejected = 0;
    for (x, label) in testset {
        let t = model
            .classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::invalid(format!("test label `{label}` is not a model class")))?;
        let p = model.predict_index(x)?;
        if super::svm::svm_classify(model, x)?.label().is_none() {
            rejected += 1;
        }
        counts[t][p] += 1;
    }
    let correct: usize = (0..k).map(|i| counts[i][i]).sum();
    Ok(Confusion {
        classes: model.classes.clone(),
        counts,
        accuracy: correct as f64 / testset.len() as f64,
        rejected,
    })
}
