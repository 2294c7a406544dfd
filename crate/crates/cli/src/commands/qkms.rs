use rand::Rng;
use serde::Deserialize;
use serde_json::Value;
use wickfock::qkms::{gram_psd_evidence, kms_residual, moment, vacuum_decay_rate, Factor, Monomial, QKMSParams};
use wickfock::{CVector, C64};

use crate::config::{self, ConfigFile};
use crate::error::{invalid, CliError};
use crate::table::{Cell, OutputFormat, ResultTable};
use crate::{Outcome, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Task {
    Moments,
    Kms,
    Gram,
    Vacuum,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Moments => "moments",
            Task::Kms => "kms",
            Task::Gram => "gram",
            Task::Vacuum => "vacuum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
enum Op {
    #[serde(rename = "a")]
    Annihilate,
    #[serde(rename = "a+")]
    Create,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorConfig {
    op: Op,
    /// Basis index or explicit vector.
    v: Value,
}

/// Seeded random monomials with entries uniform in the unit square.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sweep {
    count: usize,
    length: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QkmsConfig {
    q: f64,
    beta: f64,
    h: Value,
    task: Task,
    monomials: Option<Vec<Vec<FactorConfig>>>,
    sweep: Option<Sweep>,
    degree: Option<usize>,
    vectors: Option<Vec<Value>>,
    betas: Option<Vec<f64>>,
}

/// Monomial plus its printable form.
struct Labelled {
    monomial: Monomial,
    label: String,
}

fn render_vector(v: &CVector) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{}", z.re)
            } else {
                format!("{}{:+}i", z.re, z.im)
            }
        })
        .collect();
    format!("[{}]", parts.join(" "))
}

fn factor(fc: &FactorConfig, d: usize, key: &str) -> Result<(Factor, String), CliError> {
    let (f, name) = match &fc.v {
        Value::Number(n) => {
            let k = n
                .as_u64()
                .map(|k| k as usize)
                .filter(|&k| k < d)
                .ok_or_else(|| invalid(format!("{key}.v: basis index must be an integer below d = {d}")))?;
            let mut e = CVector::zeros(d);
            e[k] = C64::new(1.0, 0.0);
            (e, format!("e{k}"))
        }
        other => {
            let v = config::vector(other, &format!("{key}.v"))?;
            if v.len() != d {
                return Err(invalid(format!("{key}.v has length {} but d = {d}", v.len())));
            }
            let name = render_vector(&v);
            (v, name)
        }
    };
    Ok(match fc.op {
        Op::Annihilate => (Factor::annihilate(f), format!("a({name})")),
        Op::Create => (Factor::create(f), format!("a+({name})")),
    })
}

fn monomials(qc: &QkmsConfig, d: usize, seed: u64) -> Result<Vec<Labelled>, CliError> {
    match (&qc.monomials, &qc.sweep) {
        (Some(list), None) => list
            .iter()
            .enumerate()
            .map(|(i, factors)| {
                let parsed = factors
                    .iter()
                    .enumerate()
                    .map(|(j, fc)| factor(fc, d, &format!("monomials[{i}][{j}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let label = parsed.iter().map(|(_, l)| l.as_str()).collect::<Vec<_>>().join(" ");
                Ok(Labelled {
                    monomial: Monomial::new(parsed.into_iter().map(|(f, _)| f).collect()),
                    label: if label.is_empty() { "1".into() } else { label },
                })
            })
            .collect(),
        (None, Some(sweep)) => {
            let mut r = config::rng(seed);
            Ok((0..sweep.count)
                .map(|i| {
                    let factors: Vec<Factor> = (0..sweep.length)
                        .map(|_| {
                            let v = CVector::from_fn(d, |_, _| {
                                C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
                            });
                            if r.random_bool(0.5) {
                                Factor::create(v)
                            } else {
                                Factor::annihilate(v)
                            }
                        })
                        .collect();
                    let label = factors
                        .iter()
                        .map(|f| {
                            let op = if f.sigma == wickfock::qkms::Sigma::Plus {
                                "a+"
                            } else {
                                "a"
                            };
                            format!("{op}({})", render_vector(&f.f))
                        })
                        .collect::<Vec<_>>()
                        .join(" ");
                    Labelled {
                        monomial: Monomial::new(factors),
                        label: format!("sweep[{i}] {label}"),
                    }
                })
                .collect())
        }
        (Some(_), Some(_)) => Err(invalid("give `monomials` or `sweep`, not both")),
        (None, None) => Err(invalid(format!(
            "task `{}` needs `monomials` or `sweep`",
            qc.task.name()
        ))),
    }
}

fn reject(task: Task, key: &str, present: bool) -> Result<(), CliError> {
    if present {
        return Err(invalid(format!("`{key}` is not used by task `{}`", task.name())));
    }
    Ok(())
}

pub(crate) fn qkms(file: &ConfigFile, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let qc: QkmsConfig = file.parse()?;
    let h = config::matrix(&qc.h, &file.base, "h")?;
    let d = h.nrows();
    let p = QKMSParams::new(qc.q, qc.beta, h.clone())?;
    let task = qc.task;
    reject(task, "degree", qc.degree.is_some() && task != Task::Gram)?;
    reject(task, "vectors", qc.vectors.is_some() && task != Task::Gram)?;
    reject(task, "betas", qc.betas.is_some() && task != Task::Vacuum)?;

    let mut table = ResultTable::new(&["task", "inputs", "value_re", "value_im", "residual"]);
    let row = |inputs: String, value: C64, residual: Cell| {
        vec![
            task.name().into(),
            inputs.into(),
            value.re.into(),
            value.im.into(),
            residual,
        ]
    };
    match task {
        Task::Moments => {
            for m in monomials(&qc, d, cfg.seed)? {
                table.push(row(m.label, moment(&p, &m.monomial)?, Cell::Null));
            }
        }
        Task::Kms => {
            let ms = monomials(&qc, d, cfg.seed)?;
            for a in &ms {
                for b in &ms {
                    let value = moment(&p, &b.monomial.then(&a.monomial))?;
                    let residual = kms_residual(&p, &a.monomial, &b.monomial)?;
                    table.push(row(format!("{} | {}", a.label, b.label), value, residual.into()));
                }
            }
        }
        Task::Gram => {
            reject(task, "monomials", qc.monomials.is_some())?;
            reject(task, "sweep", qc.sweep.is_some())?;
            let degree = qc.degree.unwrap_or(2);
            let vectors = match &qc.vectors {
                Some(vs) => vs
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let v = config::vector(v, &format!("vectors[{i}]"))?;
                        if v.len() != d {
                            return Err(invalid(format!("vectors[{i}] has length {} but d = {d}", v.len())));
                        }
                        Ok(v)
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
                None => (0..d)
                    .map(|k| {
                        let mut e = CVector::zeros(d);
                        e[k] = C64::new(1.0, 0.0);
                        e
                    })
                    .collect(),
            };
            let ev = gram_psd_evidence(&p, degree, &vectors)?;
            table.push(row(
                format!("degree={degree} vectors={} words={}", vectors.len(), ev.size),
                C64::new(ev.min_eig, 0.0),
                ev.hermiticity_defect.into(),
            ));
        }
        Task::Vacuum => {
            let betas = qc.betas.clone().unwrap_or_else(|| vec![10.0, 20.0, 40.0]);
            let lambda = p.min_eig();
            for m in monomials(&qc, d, cfg.seed)? {
                let rate = vacuum_decay_rate(&p, &m.monomial, &betas)?;
                table.push(row(
                    m.label,
                    C64::new(rate, 0.0),
                    ((rate - lambda).abs() / lambda).into(),
                ));
            }
        }
    }
    Ok(Outcome {
        table,
        default_format: OutputFormat::Json,
        dump: Some(h),
    })
}
