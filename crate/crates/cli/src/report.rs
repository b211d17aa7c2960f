//! Machine-readable reports. Every report carries the tolerances, seed and
//! RNG used, so a run can be reproduced from its output alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unitarity_core::acceptance::CriterionOutcome;
use unitarity_core::dynamics::EntropyWitness;
use unitarity_core::quantitative::EntanglementWitness;
use unitarity_core::{
    ComplexMatrix, ComplexVector, QualitativeVerdict, QuantitativeVerdict, SingleSystemVerdict, Witness, C64, RNG_ALGORITHM,
};

pub type Pair = [f64; 2];

pub fn vector_pairs(v: &ComplexVector) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn matrix_pairs(m: &ComplexMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

pub fn pairs_vector(p: &[Pair]) -> ComplexVector {
    ComplexVector::from_iterator(p.len(), p.iter().map(|[re, im]| C64::new(*re, *im)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub rng: String,
    pub tolerances: BTreeMap<String, f64>,
    pub exit_code: i32,
    pub result: ReportBody,
}

impl Report {
    pub fn new(seed: u64, tolerances: &[(&str, f64)], exit_code: i32, result: ReportBody) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            rng: RNG_ALGORITHM.to_string(),
            tolerances: tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            exit_code,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum ReportBody {
    Classify(ClassifyReport),
    VerifyEntropy(EntropyReport),
    Schmidt(SchmidtReport),
    Measure(MeasureReport),
    Selfcheck(SelfcheckReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub kind: String,
    pub state: Vec<Pair>,
    pub image: Vec<Pair>,
    pub input_schmidt: Vec<f64>,
    pub image_schmidt: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion: Option<Box<WitnessReport>>,
}

impl From<&Witness> for WitnessReport {
    fn from(w: &Witness) -> Self {
        Self {
            kind: format!("{:?}", w.kind),
            state: vector_pairs(&w.state),
            image: vector_pairs(&w.image),
            input_schmidt: w.input_coefficients.clone(),
            image_schmidt: w.image_coefficients.clone(),
            companion: w.companion.as_deref().map(|c| Box::new(c.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureWitnessReport {
    pub c: f64,
    pub state: Vec<Pair>,
    pub image: Vec<Pair>,
    pub before: f64,
    pub after: f64,
}

impl From<&EntanglementWitness> for MeasureWitnessReport {
    fn from(w: &EntanglementWitness) -> Self {
        Self { c: w.c, state: vector_pairs(&w.state), image: vector_pairs(&w.image), before: w.before, after: w.after }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureVerdictReport {
    pub measure: String,
    pub preserved: bool,
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<MeasureWitnessReport>,
}

impl From<&QuantitativeVerdict> for MeasureVerdictReport {
    fn from(v: &QuantitativeVerdict) -> Self {
        Self {
            measure: format!("{:?}", v.measure),
            preserved: v.preserved,
            lambdas: v.spectra.lambdas.clone(),
            mus: v.spectra.mus.clone(),
            scale: v.certificate.as_ref().map(|c| c.scale),
            witness: v.witness.as_ref().map(Into::into),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub verdict: String,
    pub shape: [usize; 2],
    pub output_shape: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e1: Option<MeasureVerdictReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<MeasureVerdictReport>,
}

impl ClassifyReport {
    pub fn new(
        shape: [usize; 2],
        v: &QualitativeVerdict,
        e1: Option<&QuantitativeVerdict>,
        e2: Option<&QuantitativeVerdict>,
    ) -> Self {
        Self {
            verdict: format!("{:?}", v.kind),
            shape,
            output_shape: [v.output_shape.n, v.output_shape.m],
            a: v.a.as_ref().map(matrix_pairs),
            b: v.b.as_ref().map(matrix_pairs),
            reconstruction_error: v.reconstruction_error,
            witness: v.witness.as_ref().map(Into::into),
            e1: e1.map(Into::into),
            e2: e2.map(Into::into),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyWitnessReport {
    pub violation: String,
    pub first: Vec<Pair>,
    pub second: Vec<Pair>,
    pub p: f64,
    pub entropy_in: f64,
    pub entropy_out: Option<f64>,
}

impl From<&EntropyWitness> for EntropyWitnessReport {
    fn from(w: &EntropyWitness) -> Self {
        Self {
            violation: format!("{:?}", w.violation),
            first: vector_pairs(w.first.vector()),
            second: vector_pairs(w.second.vector()),
            p: w.p,
            entropy_in: w.entropy_in,
            entropy_out: w.entropy_out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub verdict: String,
    pub dim: usize,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    pub ambiguous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<EntropyWitnessReport>,
}

impl EntropyReport {
    pub fn new(dim: usize, samples: usize, v: &SingleSystemVerdict) -> Self {
        Self {
            verdict: format!("{:?}", v.kind),
            dim,
            samples,
            unitary: v.unitary.as_ref().map(matrix_pairs),
            gain: v.gain,
            ambiguous: v.ambiguous,
            verification_error: v.verification_error,
            witness: v.witness.as_ref().map(Into::into),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtReport {
    pub shape: [usize; 2],
    pub rank: usize,
    pub coefficients: Vec<f64>,
    pub left: Vec<Vec<Pair>>,
    pub right: Vec<Vec<Pair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub shape: [usize; 2],
    pub measure: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl From<&CriterionOutcome> for CheckReport {
    fn from(c: &CriterionOutcome) -> Self {
        Self {
            id: c.id.to_string(),
            name: c.name.to_string(),
            passed: c.passed,
            detail: c.detail.clone(),
            seconds: c.elapsed.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckReport {
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}
