//! Strict configuration parsing. Every config struct denies unknown keys so a
//! misspelled key fails with its name in the message.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use wickfock::deformation::{anyon_phase, q_flip, DeformationOp};
use wickfock::tensor::{operator_norm, MatrixDump};
use wickfock::{CMatrix, CVector, C64};

use crate::error::{invalid, CliError};

/// A loaded config file: its text (hashed into the run metadata) and the
/// directory that relative dump paths resolve against.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub text: String,
    pub base: PathBuf,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            path: path.to_path_buf(),
            text,
            base,
        })
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_str(&self.text).map_err(|e| invalid(format!("{}: {e}", self.path.display())))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reads a matrix given as a dump object, a path to a dump file, or
/// `{"diag": [...]}`.
pub fn matrix(value: &Value, base: &Path, key: &str) -> Result<CMatrix, CliError> {
    let dump: MatrixDump = match value {
        Value::String(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{key}: {}: {e}", path.display())))?
        }
        Value::Object(map) if map.contains_key("diag") => {
            if let Some(other) = map.keys().find(|k| *k != "diag") {
                return Err(invalid(format!("{key}: unknown field `{other}` next to `diag`")));
            }
            let diag: Vec<f64> =
                serde_json::from_value(map["diag"].clone()).map_err(|e| invalid(format!("{key}.diag: {e}")))?;
            let n = diag.len();
            let mut re = vec![0.0; n * n];
            for (i, x) in diag.into_iter().enumerate() {
                re[i * n + i] = x;
            }
            MatrixDump {
                rows: n,
                cols: n,
                re,
                im: vec![0.0; n * n],
            }
        }
        Value::Object(_) => serde_json::from_value(value.clone()).map_err(|e| invalid(format!("{key}: {e}")))?,
        _ => {
            return Err(invalid(format!(
                "{key}: expected a matrix dump object, a path to one, or {{\"diag\": [...]}}"
            )))
        }
    };
    let m = dump.to_matrix().map_err(|e| invalid(format!("{key}: {e}")))?;
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid(format!("{key}: non-finite entries")));
    }
    Ok(m)
}

/// A vector is a list whose entries are real numbers or `[re, im]` pairs.
pub fn vector(value: &Value, key: &str) -> Result<CVector, CliError> {
    let bad = || invalid(format!("{key}: expected a list of numbers or [re, im] pairs"));
    let items = value.as_array().ok_or_else(bad)?;
    let entries = items
        .iter()
        .map(|x| match x {
            Value::Number(n) => n.as_f64().map(|re| C64::new(re, 0.0)).ok_or_else(bad),
            Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
                (Some(re), Some(im)) => Ok(C64::new(re, im)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if entries.is_empty() {
        return Err(bad());
    }
    Ok(CVector::from_vec(entries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformationKind {
    Q,
    Phase,
    Custom,
    Random,
}

/// Random families for seeded sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomClass {
    /// `T = B B*` scaled to `norm`.
    Positive,
    /// Self-adjoint `T` scaled to `norm`.
    Contraction,
    /// `norm` times a random phase flip.
    Braided,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationConfig {
    pub kind: DeformationKind,
    pub q: Option<f64>,
    pub d: Option<usize>,
    pub theta: Option<Vec<Vec<f64>>>,
    pub matrix: Option<Value>,
    pub class: Option<RandomClass>,
    pub norm: Option<f64>,
}

fn unused(kind: &str, key: &str, present: bool) -> Result<(), CliError> {
    if present {
        return Err(invalid(format!("`{key}` is not used by deformation kind `{kind}`")));
    }
    Ok(())
}

fn required<T: Clone>(kind: &str, key: &str, v: &Option<T>) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| invalid(format!("deformation kind `{kind}` needs `{key}`")))
}

impl DeformationConfig {
    pub fn build(&self, base: &Path, seed: u64) -> Result<DeformationOp, CliError> {
        match self.kind {
            DeformationKind::Q => {
                let k = "q";
                unused(k, "theta", self.theta.is_some())?;
                unused(k, "matrix", self.matrix.is_some())?;
                unused(k, "class", self.class.is_some())?;
                unused(k, "norm", self.norm.is_some())?;
                Ok(q_flip(required(k, "q", &self.q)?, required(k, "d", &self.d)?)?)
            }
            DeformationKind::Phase => {
                let k = "phase";
                unused(k, "q", self.q.is_some())?;
                unused(k, "matrix", self.matrix.is_some())?;
                unused(k, "class", self.class.is_some())?;
                unused(k, "norm", self.norm.is_some())?;
                let theta = required(k, "theta", &self.theta)?;
                if let Some(d) = self.d.filter(|&d| d != theta.len()) {
                    return Err(invalid(format!("d = {d} but theta is {}x{}", theta.len(), theta.len())));
                }
                Ok(anyon_phase(&theta)?)
            }
            DeformationKind::Custom => {
                let k = "custom";
                unused(k, "q", self.q.is_some())?;
                unused(k, "theta", self.theta.is_some())?;
                unused(k, "class", self.class.is_some())?;
                unused(k, "norm", self.norm.is_some())?;
                let m = matrix(&required(k, "matrix", &self.matrix)?, base, "matrix")?;
                let d = match self.d {
                    Some(d) => d,
                    None => {
                        let d = (m.nrows() as f64).sqrt().round() as usize;
                        if d * d != m.nrows() {
                            return Err(invalid(format!("matrix has {} rows, not a square d^2", m.nrows())));
                        }
                        d
                    }
                };
                Ok(DeformationOp::new(d, m)?)
            }
            DeformationKind::Random => {
                let k = "random";
                unused(k, "q", self.q.is_some())?;
                unused(k, "theta", self.theta.is_some())?;
                unused(k, "matrix", self.matrix.is_some())?;
                let d = required(k, "d", &self.d)?;
                if d == 0 {
                    return Err(invalid("d must be at least 1"));
                }
                let class = required(k, "class", &self.class)?;
                let norm = self.norm.unwrap_or(match class {
                    RandomClass::Positive => 1.0,
                    RandomClass::Contraction => 0.4,
                    RandomClass::Braided => 0.9,
                });
                if !norm.is_finite() || norm < 0.0 {
                    return Err(invalid(format!("norm must be finite and non-negative, got {norm}")));
                }
                random_deformation(d, class, norm, seed)
            }
        }
    }
}

fn random_deformation(d: usize, class: RandomClass, norm: f64, seed: u64) -> Result<DeformationOp, CliError> {
    let mut r = rng(seed);
    let n = d * d;
    let mut gaussianish = || C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    let m = match class {
        RandomClass::Positive => {
            let b = CMatrix::from_fn(n, n, |_, _| gaussianish());
            &b * b.adjoint()
        }
        RandomClass::Contraction => {
            let b = CMatrix::from_fn(n, n, |_, _| gaussianish());
            (&b + b.adjoint()) * C64::new(0.5, 0.0)
        }
        RandomClass::Braided => {
            if norm > 1.0 {
                return Err(invalid(format!("braided class needs norm <= 1, got {norm}")));
            }
            let mut theta = vec![vec![0.0; d]; d];
            for i in 0..d {
                for j in i + 1..d {
                    let x = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    theta[i][j] = x;
                    theta[j][i] = -x;
                }
            }
            return Ok(DeformationOp::new(
                d,
                anyon_phase(&theta)?.matrix() * C64::new(norm, 0.0),
            )?);
        }
    };
    let current = operator_norm(&m);
    let scaled = if current > 0.0 {
        m * C64::new(norm / current, 0.0)
    } else {
        m
    };
    Ok(DeformationOp::new(d, scaled)?)
}
