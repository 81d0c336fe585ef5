//! The information matrix of a transformation `f` between a source `X` and a
//! target `Y`.
//!
//! `H(X)` is split along two directions: relevance to `Y` (rows) and whether
//! `f` lets it through (columns).
//!
//! | | filtered out | filtered in |
//! |---|---|---|
//! | irrelevant | `a = H(X|Y) - H(f(X)|Y)` | `b = H(f(X)|Y)` |
//! | relevant | `c = H(Y|f(X)) - H(Y|X)` | `d = I(X;Y) - c` |
//!
//! The primary diagonal `(a, d)` locates `f` in the noise-loss diagram.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{conditional_entropy, entropy, mutual_information, Axis, JointTable};

/// Tolerance, in bits, for identities that hold exactly between plug-in estimates.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_TAU: f64 = 0.05;

/// Denominators at or below this are treated as zero when normalizing diagram coordinates.
const DEGENERATE_AXIS: f64 = 1e-12;

/// Every entropy-derived quantity for one transformation, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoQuantities {
    /// H(X)
    pub h_x: f64,
    /// H(Y)
    pub h_y: f64,
    /// H(f(X))
    pub h_f: f64,
    /// H(X|Y), irrelevant information in the source.
    pub n_xy: f64,
    /// H(Y|X), a-priori lack of relevant information.
    pub l_xy: f64,
    /// H(f(X)|X), stochasticity of the transformation.
    pub n_xxf: f64,
    /// H(X|f(X))
    pub l_xxf: f64,
    /// H(f(X)|Y), irrelevant information left unremoved.
    pub n_xyf: f64,
    /// H(Y|f(X))
    pub l_xyf: f64,
    /// I(X;Y)
    pub i_xy: f64,
    /// I(X;f(X))
    pub i_xxf: f64,
    /// I(f(X);Y)
    pub i_xyf: f64,
    /// Relevant information destroyed by the transformation, H(Y|f(X)) - H(Y|X).
    pub dloss: f64,
}

impl InfoQuantities {
    /// Residuals of the backward/forward decompositions and the fundamental equation.
    pub fn identity_residuals(&self) -> Vec<(&'static str, f64)> {
        let q = self;
        vec![
            ("i_xy = h_x - n_xy", q.i_xy - (q.h_x - q.n_xy)),
            ("i_xy = h_y - l_xy", q.i_xy - (q.h_y - q.l_xy)),
            ("i_xxf = h_f - n_xxf", q.i_xxf - (q.h_f - q.n_xxf)),
            ("i_xxf = h_x - l_xxf", q.i_xxf - (q.h_x - q.l_xxf)),
            ("i_xyf = h_f - n_xyf", q.i_xyf - (q.h_f - q.n_xyf)),
            ("i_xyf = h_y - l_xyf", q.i_xyf - (q.h_y - q.l_xyf)),
            ("i_xyf + n_xyf = h_f", q.i_xyf + q.n_xyf - q.h_f),
            ("i_xxf + n_xxf = h_f", q.i_xxf + q.n_xxf - q.h_f),
            ("dloss = l_xyf - l_xy", q.dloss - (q.l_xyf - q.l_xy)),
        ]
    }

    pub fn first_violated_identity(&self, tol: f64) -> Option<(&'static str, f64)> {
        self.identity_residuals()
            .into_iter()
            .find(|(_, r)| r.is_nan() || r.abs() > tol)
    }

    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.n_xxf <= tol
    }
}

/// Computes all quantities from a joint table over `X`, `T = f(X)` and `Y`.
pub fn quantities_from_joint(t: &JointTable) -> Result<InfoQuantities> {
    for axis in [Axis::X, Axis::T, Axis::Y] {
        if !t.has_axis(axis) {
            return Err(Error::MissingAxis(axis));
        }
    }
    let (x, f, y) = (&[Axis::X][..], &[Axis::T][..], &[Axis::Y][..]);
    let h_f = entropy(t, f)?;
    let n_xyf = conditional_entropy(t, f, y)?;
    let l_xyf = conditional_entropy(t, y, f)?;
    let l_xy = conditional_entropy(t, y, x)?;
    let q = InfoQuantities {
        h_x: entropy(t, x)?,
        h_y: entropy(t, y)?,
        h_f,
        n_xy: conditional_entropy(t, x, y)?,
        l_xy,
        n_xxf: conditional_entropy(t, f, x)?,
        l_xxf: conditional_entropy(t, x, f)?,
        n_xyf,
        l_xyf,
        i_xy: mutual_information(t, x, y)?,
        i_xxf: mutual_information(t, x, f)?,
        i_xyf: mutual_information(t, f, y)?,
        dloss: l_xyf - l_xy,
    };
    Ok(q)
}

/// The 2x2 decomposition of H(X).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationMatrix {
    /// Irrelevant information removed.
    pub a: f64,
    /// Irrelevant information left unremoved.
    pub b: f64,
    /// Relevant information lost.
    pub c: f64,
    /// Relevant information retained.
    pub d: f64,
    pub source: InfoQuantities,
}

pub fn information_matrix(q: &InfoQuantities) -> InformationMatrix {
    InformationMatrix {
        a: q.n_xy - q.n_xyf,
        b: q.n_xyf,
        c: q.dloss,
        d: q.i_xy - q.dloss,
        source: *q,
    }
}

impl InformationMatrix {
    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn filtered_in(&self) -> f64 {
        self.b + self.d
    }

    pub fn filtered_out(&self) -> f64 {
        self.a + self.c
    }

    /// Entries below `-IDENTITY_TOLERANCE`, by name.
    pub fn negative_entries(&self) -> Vec<&'static str> {
        ["a", "b", "c", "d"]
            .into_iter()
            .zip(self.entries())
            .filter(|(_, v)| *v < -IDENTITY_TOLERANCE)
            .map(|(n, _)| n)
            .collect()
    }

    /// Human-readable anomalies that do not invalidate the matrix.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let filtered_out = self.filtered_out();
        if filtered_out < -IDENTITY_TOLERANCE {
            out.push(format!(
                "entropy expansion: H(f(X)) exceeds H(X) by {:.6e} bits",
                -filtered_out
            ));
        }
        for name in self.negative_entries() {
            out.push(format!("negative entry {name}"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Deterministic,
    Stochastic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Deterministic => f.write_str("deterministic"),
            Mode::Stochastic => f.write_str("stochastic"),
        }
    }
}

/// One named relation `lhs <op> rhs`.
///
/// `slack_bits` is positive when the relation is violated: `lhs - rhs` for
/// `<=` and `|lhs - rhs|` for `=`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub relation: String,
    pub lhs_bits: f64,
    pub rhs_bits: f64,
    pub tolerance_bits: f64,
    pub slack_bits: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub mode: Mode,
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Checks {
    out: Vec<ConstraintCheck>,
}

impl Checks {
    fn equal(&mut self, name: &str, relation: &str, lhs: f64, rhs: f64, tol: f64) {
        let slack = (lhs - rhs).abs();
        self.push(name, relation, lhs, rhs, tol, slack);
    }

    fn at_most(&mut self, name: &str, relation: &str, lhs: f64, rhs: f64, tol: f64) {
        self.push(name, relation, lhs, rhs, tol, lhs - rhs);
    }

    fn push(&mut self, name: &str, relation: &str, lhs: f64, rhs: f64, tol: f64, slack: f64) {
        self.out.push(ConstraintCheck {
            name: name.to_string(),
            relation: relation.to_string(),
            lhs_bits: lhs,
            rhs_bits: rhs,
            tolerance_bits: tol,
            slack_bits: slack,
            passed: slack <= tol,
        });
    }
}

/// Evaluates the row/column sums, the fundamental equation, and the admissible
/// ranges of noise, loss and every matrix entry for the given mode.
///
/// Sum identities use [`IDENTITY_TOLERANCE`] (or `tol` if larger); range
/// checks use `tol`. Failures are entries in the report, never errors.
pub fn verify_constraints(m: &InformationMatrix, mode: Mode, tol: f64) -> ConstraintReport {
    let q = &m.source;
    let id_tol = tol.max(IDENTITY_TOLERANCE);
    let mut c = Checks { out: Vec::new() };

    c.equal("row_overall", "n_xy + i_xy = h_x", q.n_xy + q.i_xy, q.h_x, id_tol);
    c.equal("row_irrelevant", "a + b = n_xy", m.a + m.b, q.n_xy, id_tol);
    c.equal("row_relevant", "c + d = i_xy", m.c + m.d, q.i_xy, id_tol);
    c.equal(
        "column_overall",
        "(a + c) + (b + d) = h_x",
        m.filtered_out() + m.filtered_in(),
        q.h_x,
        id_tol,
    );
    c.equal(
        "column_filtered_out",
        "a + c = h_x - h_f",
        m.filtered_out(),
        q.h_x - q.h_f,
        id_tol,
    );
    c.equal("column_filtered_in", "b + d = h_f", m.filtered_in(), q.h_f, id_tol);
    c.equal(
        "fundamental_forward",
        "i_xyf + n_xyf = h_f",
        q.i_xyf + q.n_xyf,
        q.h_f,
        id_tol,
    );
    c.equal(
        "fundamental_backward",
        "i_xxf + n_xxf = h_f",
        q.i_xxf + q.n_xxf,
        q.h_f,
        id_tol,
    );

    // Stochastic bounds reduce to the deterministic ones when n_xxf = 0.
    let stoch = match mode {
        Mode::Deterministic => 0.0,
        Mode::Stochastic => q.n_xxf,
    };
    if mode == Mode::Deterministic {
        c.at_most("determinism", "n_xxf <= 0", q.n_xxf, 0.0, tol);
    }
    let (noise_lo, loss_lo) = match mode {
        Mode::Deterministic => ("0 <= n_xyf", "l_xy <= l_xyf"),
        Mode::Stochastic => ("n_xxf <= n_xyf", "l_xy + n_xxf <= l_xyf"),
    };
    c.at_most("noise_lower_bound", noise_lo, stoch, q.n_xyf, tol);
    c.at_most("noise_upper_bound", "n_xyf <= n_xy", q.n_xyf, q.n_xy, tol);
    c.at_most("loss_lower_bound", loss_lo, q.l_xy + stoch, q.l_xyf, tol);
    c.at_most("loss_upper_bound", "l_xyf <= h_y", q.l_xyf, q.h_y, tol);
    c.at_most("dpi", "i_xyf <= i_xxf", q.i_xyf, q.i_xxf, tol);

    let ranges = [
        ("a", m.a, 0.0, q.n_xy - stoch),
        ("b", m.b, stoch, q.n_xy),
        ("c", m.c, stoch, q.i_xy),
        ("d", m.d, 0.0, q.i_xy - stoch),
    ];
    for (name, value, lo, hi) in ranges {
        c.at_most(&format!("{name}_min"), &format!("{name} >= min"), lo, value, tol);
        c.at_most(&format!("{name}_max"), &format!("{name} <= max"), value, hi, tol);
    }

    ConstraintReport { mode, checks: c.out }
}

/// Coordinates in the noise-loss diagram: removed irrelevant information on
/// the horizontal axis, retained relevant information on the vertical one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLossPoint {
    pub x_bits: f64,
    pub y_bits: f64,
}

pub fn noise_loss_point(m: &InformationMatrix) -> NoiseLossPoint {
    NoiseLossPoint {
        x_bits: m.a,
        y_bits: m.d,
    }
}

/// Recovers I(X;f(X)) from diagram coordinates. Isometrics are 45 degree
/// lines: `i_xxf = y - x + n_xy - n_xxf`, with `n_xxf = 0` for deterministic
/// transformations.
pub fn ixx_from_point(p: NoiseLossPoint, n_xy: f64, n_xxf: f64) -> Result<f64> {
    let v = p.y_bits - p.x_bits + n_xy - n_xxf;
    if v < -IDENTITY_TOLERANCE {
        return Err(Error::InconsistentPoint(v));
    }
    Ok(v.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Lossless,
    MaxDiscriminative,
    Dummy,
    Random,
    Intermediate,
}

impl PatternKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Lossless => "lossless",
            PatternKind::MaxDiscriminative => "max_discriminative",
            PatternKind::Dummy => "dummy",
            PatternKind::Random => "random",
            PatternKind::Intermediate => "intermediate",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "lossless" => Ok(PatternKind::Lossless),
            "max_discriminative" => Ok(PatternKind::MaxDiscriminative),
            "dummy" => Ok(PatternKind::Dummy),
            "random" => Ok(PatternKind::Random),
            "intermediate" => Ok(PatternKind::Intermediate),
            other => Err(format!("unknown pattern {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternLabel {
    pub kind: PatternKind,
    /// Only meaningful with `MaxDiscriminative`: the source carries all the
    /// information needed to predict the target.
    pub oracle: bool,
}

// Corners in normalized (a / n_xy, d / i_xy) coordinates, in tie-break order.
const CORNERS: [(PatternKind, f64, f64); 4] = [
    (PatternKind::MaxDiscriminative, 1.0, 1.0),
    (PatternKind::Lossless, 0.0, 1.0),
    (PatternKind::Dummy, 1.0, 0.0),
    (PatternKind::Random, 0.0, 0.0),
];

/// Labels the nearest corner pattern within normalized Chebyshev distance
/// `tau`, or `Intermediate`. An axis whose normalizer is zero contributes no
/// distance.
pub fn classify_pattern(m: &InformationMatrix, tau: f64) -> PatternLabel {
    let q = &m.source;
    let nx = (q.n_xy > DEGENERATE_AXIS).then(|| m.a / q.n_xy);
    let ny = (q.i_xy > DEGENERATE_AXIS).then(|| m.d / q.i_xy);

    let mut best = (PatternKind::Intermediate, f64::INFINITY);
    for (kind, cx, cy) in CORNERS {
        let dx = nx.map_or(0.0, |v| (v - cx).abs());
        let dy = ny.map_or(0.0, |v| (v - cy).abs());
        let dist = dx.max(dy);
        if dist < best.1 {
            best = (kind, dist);
        }
    }
    let kind = if best.1 <= tau {
        best.0
    } else {
        PatternKind::Intermediate
    };
    let oracle = kind == PatternKind::MaxDiscriminative && q.l_xy <= tau * q.h_y;
    PatternLabel { kind, oracle }
}

/// Everything the toolkit reports about a single transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub quantities: InfoQuantities,
    pub matrix: InformationMatrix,
    pub constraints: ConstraintReport,
    pub pattern: PatternLabel,
    pub point: NoiseLossPoint,
    pub ixx_from_point: f64,
    pub warnings: Vec<String>,
}

pub fn analyze_joint(t: &JointTable, mode: Mode, tol: f64, tau: f64) -> Result<Analysis> {
    let q = quantities_from_joint(t)?;
    Ok(analyze_quantities(&q, mode, tol, tau))
}

pub fn analyze_quantities(q: &InfoQuantities, mode: Mode, tol: f64, tau: f64) -> Analysis {
    let matrix = information_matrix(q);
    let point = noise_loss_point(&matrix);
    let ixx = point.y_bits - point.x_bits + q.n_xy - q.n_xxf;
    Analysis {
        quantities: *q,
        matrix,
        constraints: verify_constraints(&matrix, mode, tol),
        pattern: classify_pattern(&matrix, tau),
        point,
        ixx_from_point: ixx,
        warnings: matrix.warnings(),
    }
}
