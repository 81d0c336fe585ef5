//! Optimisation objectives over finite candidate families.
//!
//! Each objective scores a transformation from its noise `n_xyf` and loss
//! `l_xyf`. The parametric blend `α·n + (1-α)·l` is a positive rescaling of
//! the reformulated bottleneck Lagrangian `n + (β-1)·l` with `β = 1/α`, so the
//! two select the same candidates. The raw Lagrangian `I(X;T) - β·I(T;Y)`
//! differs from the reformulated one by `(1-β)·H(Y) - n_xxf`, which is a
//! shared constant only when every candidate is deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_matrix::InfoQuantities;

/// Objective values within this distance of the minimum are tied.
pub const ARGMIN_TOLERANCE: f64 = 1e-12;

/// `n_xxf` above this makes a candidate stochastic.
pub const DETERMINISM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub quantities: InfoQuantities,
}

impl Candidate {
    pub fn new(name: impl Into<String>, quantities: InfoQuantities) -> Self {
        Candidate {
            name: name.into(),
            quantities,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    LossOnly,
    NoiseOnly,
    Diagonal,
    Parametric { alpha: f64 },
    IbReformulated { beta: f64 },
    IbRaw { beta: f64 },
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ObjectiveSpec::Parametric { alpha } if !(0.0..=1.0).contains(&alpha) => Err(Error::InvalidParameter(
                format!("alpha must lie in [0, 1], got {alpha}"),
            )),
            ObjectiveSpec::IbReformulated { beta } | ObjectiveSpec::IbRaw { beta }
                if !(beta >= 0.0 && beta.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "beta must be finite and non-negative, got {beta}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Bottleneck objectives with β < 1 reward losing relevant information.
    pub fn reverses_loss(&self) -> bool {
        matches!(
            *self,
            ObjectiveSpec::IbReformulated { beta } | ObjectiveSpec::IbRaw { beta } if beta < 1.0
        )
    }

    pub fn label(&self) -> String {
        match *self {
            ObjectiveSpec::LossOnly => "loss_only".into(),
            ObjectiveSpec::NoiseOnly => "noise_only".into(),
            ObjectiveSpec::Diagonal => "diagonal".into(),
            ObjectiveSpec::Parametric { alpha } => format!("parametric(alpha={alpha})"),
            ObjectiveSpec::IbReformulated { beta } => format!("ib_reformulated(beta={beta})"),
            ObjectiveSpec::IbRaw { beta } => format!("ib_raw(beta={beta})"),
        }
    }
}

/// Objective value in bits; lower is better.
pub fn objective_value(spec: &ObjectiveSpec, q: &InfoQuantities) -> Result<f64> {
    spec.validate()?;
    Ok(match *spec {
        ObjectiveSpec::LossOnly => q.l_xyf,
        ObjectiveSpec::NoiseOnly => q.n_xyf,
        ObjectiveSpec::Diagonal => q.n_xyf + q.l_xyf,
        ObjectiveSpec::Parametric { alpha } => alpha * q.n_xyf + (1.0 - alpha) * q.l_xyf,
        ObjectiveSpec::IbReformulated { beta } => q.n_xyf + (beta - 1.0) * q.l_xyf,
        ObjectiveSpec::IbRaw { beta } => q.i_xxf - beta * q.i_xyf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub name: String,
    pub value_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub objective: ObjectiveSpec,
    /// One entry per candidate, in input order.
    pub values: Vec<ObjectiveValue>,
    /// Every candidate within [`ARGMIN_TOLERANCE`] of the minimum, in input order.
    pub argmin_set: Vec<String>,
    /// The lowest-index member of `argmin_set`.
    pub selected: String,
    pub warnings: Vec<String>,
}

impl SelectionResult {
    pub fn same_argmin(&self, other: &SelectionResult) -> bool {
        let mut a = self.argmin_set.clone();
        let mut b = other.argmin_set.clone();
        a.sort();
        b.sort();
        a == b
    }
}

pub fn select(candidates: &[Candidate], spec: &ObjectiveSpec) -> Result<SelectionResult> {
    spec.validate()?;
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let values = candidates
        .iter()
        .map(|c| {
            Ok(ObjectiveValue {
                name: c.name.clone(),
                value_bits: objective_value(spec, &c.quantities)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min = values.iter().map(|v| v.value_bits).fold(f64::INFINITY, f64::min);
    let argmin_set: Vec<String> = values
        .iter()
        .filter(|v| v.value_bits - min <= ARGMIN_TOLERANCE)
        .map(|v| v.name.clone())
        .collect();
    let selected = argmin_set[0].clone();

    let mut warnings = Vec::new();
    if spec.reverses_loss() {
        let msg = format!(
            "{}: beta < 1 rewards losing relevant information; degenerate selections expected",
            spec.label()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(SelectionResult {
        objective: *spec,
        values,
        argmin_set,
        selected,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceOutcome {
    pub alpha: f64,
    pub beta: f64,
    pub equivalent: bool,
    pub parametric: SelectionResult,
    pub reformulated: SelectionResult,
}

/// Compares the argmin sets of `parametric(α)` and `ib_reformulated(1/α)`.
pub fn equivalence_check(candidates: &[Candidate], alpha: f64) -> Result<EquivalenceOutcome> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1] for the equivalence check, got {alpha}"
        )));
    }
    let beta = 1.0 / alpha;
    let parametric = select(candidates, &ObjectiveSpec::Parametric { alpha })?;
    let reformulated = select(candidates, &ObjectiveSpec::IbReformulated { beta })?;
    Ok(EquivalenceOutcome {
        alpha,
        beta,
        equivalent: parametric.same_argmin(&reformulated),
        parametric,
        reformulated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawComparison {
    pub beta: f64,
    pub equivalent: bool,
    pub raw: SelectionResult,
    pub reformulated: SelectionResult,
}

/// Compares the argmin sets of the raw and reformulated Lagrangians on a
/// deterministic family sharing one target.
pub fn raw_vs_reformulated_check(candidates: &[Candidate], beta: f64) -> Result<RawComparison> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    if let Some(c) = candidates.iter().find(|c| c.quantities.n_xxf > DETERMINISM_TOLERANCE) {
        return Err(Error::NotDeterministic {
            name: c.name.clone(),
            n_xxf: c.quantities.n_xxf,
        });
    }
    let (min, max) = candidates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.quantities.h_y), hi.max(c.quantities.h_y))
        });
    if max - min > DETERMINISM_TOLERANCE {
        return Err(Error::MixedTargets { min, max });
    }
    let raw = select(candidates, &ObjectiveSpec::IbRaw { beta })?;
    let reformulated = select(candidates, &ObjectiveSpec::IbReformulated { beta })?;
    Ok(RawComparison {
        beta,
        equivalent: raw.same_argmin(&reformulated),
        raw,
        reformulated,
    })
}
