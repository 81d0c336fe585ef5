//! Synthetic transformations over finite alphabets with exact joints.
//!
//! A [`Scenario`] pairs a source/target joint with a channel. Its exact
//! `(X, T, Y)` joint is an analytic push-forward, so every quantity derived
//! from it is ground truth for tests and for comparison against sampled data.
//!
//! Stochastic channels add independent noise to a deterministic base map
//! modulo the output alphabet size: `T = (g(X) + N) mod K`.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_matrix::{quantities_from_joint, InfoQuantities, PatternKind, IDENTITY_TOLERANCE};
use crate::prob::{conditional_entropy, Axis, JointTable, Symbol};

const NOISE_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicChannel {
    mapping: Vec<u32>,
    output_size: u32,
}

impl DeterministicChannel {
    /// `mapping[x]` is the image of input symbol `x`. The output alphabet is
    /// `0..output_size`, at least one past the largest image.
    pub fn new(mapping: Vec<u32>, output_size: u32) -> Result<Self> {
        if mapping.is_empty() {
            return Err(Error::InvalidChannel("mapping is empty".into()));
        }
        if let Some(&bad) = mapping.iter().find(|&&t| t >= output_size) {
            return Err(Error::InvalidChannel(format!(
                "image {bad} outside output alphabet of size {output_size}"
            )));
        }
        Ok(DeterministicChannel { mapping, output_size })
    }

    /// Output alphabet sized to the largest image.
    pub fn from_mapping(mapping: Vec<u32>) -> Result<Self> {
        let size = mapping.iter().max().map_or(1, |m| m + 1);
        Self::new(mapping, size)
    }

    pub fn identity(input_size: u32) -> Self {
        DeterministicChannel {
            mapping: (0..input_size).collect(),
            output_size: input_size.max(1),
        }
    }

    pub fn constant(input_size: u32) -> Self {
        DeterministicChannel {
            mapping: vec![0; input_size.max(1) as usize],
            output_size: 1,
        }
    }

    pub fn mapping(&self) -> &[u32] {
        &self.mapping
    }

    pub fn input_size(&self) -> u32 {
        self.mapping.len() as u32
    }

    pub fn output_size(&self) -> u32 {
        self.output_size
    }

    pub fn apply(&self, x: u32) -> Option<u32> {
        self.mapping.get(x as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticChannel {
    base: DeterministicChannel,
    noise: Vec<f64>,
}

impl StochasticChannel {
    /// `noise[k]` is the probability of offset `k`; its length fixes the
    /// output alphabet, which must contain every image of `base`.
    pub fn new(base: DeterministicChannel, noise: Vec<f64>) -> Result<Self> {
        if noise.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidChannel("noise masses must be non-negative".into()));
        }
        let sum: f64 = noise.iter().sum();
        if (sum - 1.0).abs() > NOISE_SUM_TOLERANCE {
            return Err(Error::InvalidChannel(format!("noise masses sum to {sum}, expected 1")));
        }
        let size = noise.len() as u32;
        if size < base.output_size {
            return Err(Error::InvalidChannel(format!(
                "noise alphabet {size} smaller than base output alphabet {}",
                base.output_size
            )));
        }
        let base = DeterministicChannel::new(base.mapping, size)?;
        Ok(StochasticChannel { base, noise })
    }

    pub fn base(&self) -> &DeterministicChannel {
        &self.base
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn output_size(&self) -> u32 {
        self.noise.len() as u32
    }

    /// H(N) in bits.
    pub fn noise_entropy(&self) -> f64 {
        self.noise
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.recip().log2())
            .sum()
    }
}

/// Offset 0 with probability `1 - p`, offset 1 with probability `p`.
pub fn bit_flip_noise(output_size: u32, p: f64) -> Result<Vec<f64>> {
    if output_size < 2 || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidChannel(format!(
            "bit flip needs an output alphabet of at least 2 and p in [0, 1], got {output_size}, {p}"
        )));
    }
    let mut noise = vec![0.0; output_size as usize];
    noise[0] = 1.0 - p;
    noise[1] = p;
    Ok(noise)
}

/// Offset 0 with probability `1 - p`, every other offset with `p / (K - 1)`.
pub fn symmetric_noise(output_size: u32, p: f64) -> Result<Vec<f64>> {
    if output_size < 2 || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidChannel(format!(
            "symmetric noise needs an output alphabet of at least 2 and p in [0, 1], got {output_size}, {p}"
        )));
    }
    let k = output_size as usize;
    let mut noise = vec![p / (k - 1) as f64; k];
    noise[0] = 1.0 - p;
    Ok(noise)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    Deterministic(DeterministicChannel),
    Stochastic(StochasticChannel),
}

impl Channel {
    pub fn base(&self) -> &DeterministicChannel {
        match self {
            Channel::Deterministic(c) => c,
            Channel::Stochastic(c) => c.base(),
        }
    }

    pub fn output_size(&self) -> u32 {
        match self {
            Channel::Deterministic(c) => c.output_size(),
            Channel::Stochastic(c) => c.output_size(),
        }
    }

    /// `(t, probability)` pairs for input `x`, zero-probability outputs omitted.
    pub fn outputs(&self, x: u32) -> Result<Vec<(u32, f64)>> {
        let g = self
            .base()
            .apply(x)
            .ok_or_else(|| Error::InvalidChannel(format!("input symbol {x} has no image")))?;
        Ok(match self {
            Channel::Deterministic(_) => vec![(g, 1.0)],
            Channel::Stochastic(c) => {
                let k = c.output_size();
                c.noise
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(offset, &p)| ((g + offset as u32) % k, p))
                    .collect()
            }
        })
    }
}

impl From<DeterministicChannel> for Channel {
    fn from(c: DeterministicChannel) -> Self {
        Channel::Deterministic(c)
    }
}

impl From<StochasticChannel> for Channel {
    fn from(c: StochasticChannel) -> Self {
        Channel::Stochastic(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Joint over `[X, Y]`.
    pub joint_xy: JointTable,
    pub channel: Channel,
    pub expected: Option<InfoQuantities>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, joint_xy: JointTable, channel: impl Into<Channel>) -> Result<Self> {
        if joint_xy.axes() != [Axis::X, Axis::Y] {
            return Err(Error::InvalidChannel(format!(
                "scenario joint must have axes [X, Y], got {:?}",
                joint_xy.axes()
            )));
        }
        let channel = channel.into();
        let inputs = channel.base().input_size();
        if let Some((cell, _)) = joint_xy.cells().find(|(c, _)| c[0] >= inputs) {
            return Err(Error::InvalidChannel(format!(
                "source symbol {} has no image (channel covers {inputs} inputs)",
                cell[0]
            )));
        }
        Ok(Scenario {
            name: name.into(),
            joint_xy,
            channel,
            expected: None,
        })
    }

    pub fn with_expected(mut self, expected: InfoQuantities) -> Self {
        self.expected = Some(expected);
        self
    }

    pub fn quantities(&self) -> Result<InfoQuantities> {
        quantities_from_joint(&exact_joint(self)?)
    }
}

/// Push-forward of the source/target joint through the channel, normalized
/// to total mass 1, over axes `[X, T, Y]`.
pub fn exact_joint(s: &Scenario) -> Result<JointTable> {
    let total = s.joint_xy.total_mass();
    let mut cells: Vec<(Vec<u32>, f64)> = Vec::new();
    for (xy, mass) in s.joint_xy.cells() {
        for (t, p) in s.channel.outputs(xy[0])? {
            cells.push((vec![xy[0], t, xy[1]], mass / total * p));
        }
    }
    JointTable::from_masses(vec![Axis::X, Axis::T, Axis::Y], cells)
}

/// Sampled `(X, T, Y)` columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Samples {
    pub x: Vec<Symbol>,
    pub t: Vec<Symbol>,
    pub y: Vec<Symbol>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn joint(&self) -> Result<JointTable> {
        crate::prob::joint_from_samples(&[(Axis::X, &self.x), (Axis::T, &self.t), (Axis::Y, &self.y)])
    }
}

/// Draws `n` i.i.d. triples from the exact joint. The same seed always
/// produces the same columns.
pub fn sample_channel(s: &Scenario, n: usize, seed: u64) -> Result<Samples> {
    if n == 0 {
        return Err(Error::InvalidDataset("sample count must be at least 1".into()));
    }
    let joint = exact_joint(s)?;
    let cells: Vec<(&[u32], f64)> = joint.cells().collect();
    let dist = WeightedIndex::new(cells.iter().map(|(_, m)| *m)).map_err(|e| Error::InvalidChannel(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Samples {
        x: Vec::with_capacity(n),
        t: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let cell = cells[dist.sample(&mut rng)].0;
        out.x.push(Symbol(cell[0]));
        out.t.push(Symbol(cell[1]));
        out.y.push(Symbol(cell[2]));
    }
    Ok(out)
}

/// X uniform on {0, 1, 2, 3}, Y its high bit, plus the four canonical
/// channels `identity`, `high-bit`, `constant` and `low-bit` with their
/// hand-derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyFamily {
    pub joint_xy: JointTable,
    pub scenarios: Vec<Scenario>,
}

impl ToyFamily {
    pub fn scenario(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.scenarios.iter().map(|s| s.name.as_str()).collect()
    }
}

pub fn toy_joint() -> JointTable {
    JointTable::from_masses(vec![Axis::X, Axis::Y], (0..4u32).map(|x| (vec![x, x >> 1], 0.25)))
        .expect("toy joint is valid")
}

pub fn make_toy_scenario() -> ToyFamily {
    let joint = toy_joint();
    // Ground truth: H(X) = 2, H(Y) = 1, I(X;Y) = 1, H(X|Y) = 1, H(Y|X) = 0.
    // Per channel (h_f, n_xyf, l_xyf):
    //   identity (2, 1, 0), high-bit (1, 0, 0), constant (0, 0, 1), low-bit (1, 1, 1).
    let expected = |h_f: f64, n_xyf: f64, l_xyf: f64| InfoQuantities {
        h_x: 2.0,
        h_y: 1.0,
        h_f,
        n_xy: 1.0,
        l_xy: 0.0,
        n_xxf: 0.0,
        l_xxf: 2.0 - h_f,
        n_xyf,
        l_xyf,
        i_xy: 1.0,
        i_xxf: h_f,
        i_xyf: 1.0 - l_xyf,
        dloss: l_xyf,
    };
    let build = |name: &str, mapping: Vec<u32>, q: InfoQuantities| {
        let channel = DeterministicChannel::from_mapping(mapping).expect("toy mapping is valid");
        Scenario::new(name, joint.clone(), channel)
            .expect("toy scenario is valid")
            .with_expected(q)
    };
    ToyFamily {
        scenarios: vec![
            build("identity", vec![0, 1, 2, 3], expected(2.0, 1.0, 0.0)),
            build("high-bit", vec![0, 0, 1, 1], expected(1.0, 0.0, 0.0)),
            build("constant", vec![0, 0, 0, 0], expected(0.0, 0.0, 1.0)),
            build("low-bit", vec![0, 1, 0, 1], expected(1.0, 1.0, 1.0)),
        ],
        joint_xy: joint,
    }
}

/// For every source symbol with positive mass, its target symbols and masses.
fn classes_by_source(joint_xy: &JointTable) -> BTreeMap<u32, Vec<(u32, f64)>> {
    let mut out: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
    for (cell, mass) in joint_xy.cells() {
        out.entry(cell[0]).or_default().push((cell[1], mass));
    }
    out
}

/// Builds the deterministic channel that puts `joint_xy` at the corner of
/// the noise-loss diagram named by `pattern`.
///
/// - `Lossless`: identity.
/// - `MaxDiscriminative`: each source symbol to its target symbol; requires
///   `H(Y|X) = 0`.
/// - `Dummy`: constant.
/// - `Random`: each source symbol to its rank within its target class, with
///   ranks assigned by decreasing conditional mass. Rejected unless the
///   resulting output is independent of the target.
pub fn make_pattern_channel(pattern: PatternKind, joint_xy: &JointTable) -> Result<DeterministicChannel> {
    let unachievable = |reason: String| Error::PatternUnachievable {
        pattern: pattern.to_string(),
        reason,
    };
    if joint_xy.axes() != [Axis::X, Axis::Y] {
        return Err(unachievable(format!("joint axes {:?} are not [X, Y]", joint_xy.axes())));
    }
    let sources = classes_by_source(joint_xy);
    let input_size = sources.keys().max().map_or(1, |m| m + 1);
    let l_xy = conditional_entropy(joint_xy, &[Axis::Y], &[Axis::X])?;

    let functional_target = |what: &str| -> Result<Vec<u32>> {
        if l_xy > IDENTITY_TOLERANCE {
            return Err(unachievable(format!(
                "H(Y|X) = {l_xy} bits > 0, so {what} does not exist"
            )));
        }
        let mut target = vec![0; input_size as usize];
        for (&x, ys) in &sources {
            target[x as usize] = ys[0].0;
        }
        Ok(target)
    };

    match pattern {
        PatternKind::Lossless => Ok(DeterministicChannel::identity(input_size)),
        PatternKind::Dummy => Ok(DeterministicChannel::constant(input_size)),
        PatternKind::MaxDiscriminative => {
            DeterministicChannel::from_mapping(functional_target("a deterministic sufficient statistic")?)
        }
        PatternKind::Random => {
            let target = functional_target("a target partition")?;
            let mut classes: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
            for (&x, ys) in &sources {
                let mass: f64 = ys.iter().map(|(_, m)| m).sum();
                classes.entry(target[x as usize]).or_default().push((x, mass));
            }
            let mut mapping = vec![0; input_size as usize];
            for members in classes.values_mut() {
                members.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                for (rank, (x, _)) in members.iter().enumerate() {
                    mapping[*x as usize] = rank as u32;
                }
            }
            let channel = DeterministicChannel::from_mapping(mapping)?;
            let scenario = Scenario::new("random", joint_xy.clone(), channel.clone())?;
            let q = scenario.quantities()?;
            if q.i_xyf > IDENTITY_TOLERANCE {
                return Err(unachievable(format!(
                    "within-class ranks still carry I(T;Y) = {} bits; class distributions differ",
                    q.i_xyf
                )));
            }
            Ok(channel)
        }
        PatternKind::Intermediate => Err(unachievable("not a corner pattern".into())),
    }
}

/// Lower bounds on noise and loss for an additive-noise channel.
///
/// Margins are `value - bound`: negative means the bound is violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBoundReport {
    pub n_xyf: f64,
    pub n_xxf: f64,
    pub l_xyf: f64,
    pub l_xy: f64,
    pub noise_entropy: f64,
    /// `n_xyf - n_xxf`
    pub noise_margin: f64,
    pub noise_bound_holds: bool,
    /// `l_xyf - (l_xy + n_xxf)`
    pub loss_margin: f64,
    pub loss_bound_holds: bool,
}

/// Deterministic channels are treated as point-mass noise, so both bounds
/// hold trivially.
pub fn noise_bound_check(s: &Scenario) -> Result<NoiseBoundReport> {
    let noise_entropy = match &s.channel {
        Channel::Deterministic(_) => 0.0,
        Channel::Stochastic(c) => c.noise_entropy(),
    };
    let q = s.quantities()?;
    let noise_margin = q.n_xyf - q.n_xxf;
    let loss_margin = q.l_xyf - (q.l_xy + q.n_xxf);
    Ok(NoiseBoundReport {
        n_xyf: q.n_xyf,
        n_xxf: q.n_xxf,
        l_xyf: q.l_xyf,
        l_xy: q.l_xy,
        noise_entropy,
        noise_margin,
        noise_bound_holds: noise_margin >= -IDENTITY_TOLERANCE,
        loss_margin,
        loss_bound_holds: loss_margin >= -IDENTITY_TOLERANCE,
    })
}

/// The uniform additive family: `classes * class_size` equiprobable source
/// symbols, target `Y = x / class_size`, base map `g = Y`, and arbitrary
/// additive noise on the `classes`-symbol output.
///
/// The output is uniform and the noise degrades every class equally, so the
/// loss bound `l_xyf >= l_xy + n_xxf` holds (with equality).
pub fn uniform_additive_scenario(classes: u32, class_size: u32, noise: Vec<f64>) -> Result<Scenario> {
    if classes < 1 || class_size < 1 {
        return Err(Error::InvalidChannel("class count and size must be positive".into()));
    }
    if noise.len() != classes as usize {
        return Err(Error::InvalidChannel(format!(
            "noise must cover the {classes}-symbol output, got {} masses",
            noise.len()
        )));
    }
    let n = classes * class_size;
    let joint = JointTable::from_masses(vec![Axis::X, Axis::Y], (0..n).map(|x| (vec![x, x / class_size], 1.0)))?;
    let base = DeterministicChannel::new((0..n).map(|x| x / class_size).collect(), classes)?;
    Scenario::new(
        format!("uniform-additive-{classes}x{class_size}"),
        joint,
        StochasticChannel::new(base, noise)?,
    )
}

/// Random joint over `[X, Y]` with alphabets in `2..=max_alphabet`. Some
/// cells are zeroed so conditional structure varies.
pub fn random_joint_xy<R: Rng>(rng: &mut R, max_alphabet: u32) -> JointTable {
    let max_alphabet = max_alphabet.max(2);
    let nx = rng.gen_range(2..=max_alphabet);
    let ny = rng.gen_range(2..=max_alphabet);
    let mut cells = Vec::new();
    for x in 0..nx {
        // keep every source symbol
        let forced = rng.gen_range(0..ny);
        for y in 0..ny {
            let mass = if y == forced || rng.gen_bool(0.6) {
                rng.gen_range(0.05..1.0)
            } else {
                0.0
            };
            cells.push((vec![x, y], mass));
        }
    }
    JointTable::from_masses(vec![Axis::X, Axis::Y], cells).expect("random joint has positive mass")
}

/// Random map from `input_size` symbols onto at most `max_output` symbols.
pub fn random_deterministic_channel<R: Rng>(rng: &mut R, input_size: u32, max_output: u32) -> DeterministicChannel {
    let k = rng.gen_range(1..=max_output.max(1));
    let mapping = (0..input_size).map(|_| rng.gen_range(0..k)).collect();
    DeterministicChannel::new(mapping, k).expect("random mapping within alphabet")
}

/// Random deterministic base plus random additive noise on an output of
/// `2..=max_output` symbols.
pub fn random_stochastic_channel<R: Rng>(rng: &mut R, input_size: u32, max_output: u32) -> StochasticChannel {
    let k = rng.gen_range(2..=max_output.max(2));
    let mapping = (0..input_size).map(|_| rng.gen_range(0..k)).collect();
    let base = DeterministicChannel::new(mapping, k).expect("random mapping within alphabet");
    let raw: Vec<f64> = (0..k)
        .map(|i| {
            if i == 0 {
                rng.gen_range(0.5..2.0)
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    let mut noise: Vec<f64> = raw.iter().map(|m| m / sum).collect();
    // absorb rounding so the masses sum to 1 within tolerance
    let drift: f64 = 1.0 - noise.iter().sum::<f64>();
    noise[0] += drift;
    StochasticChannel::new(base, noise).expect("normalized noise")
}

/// Input alphabet size implied by a joint's X axis.
pub fn source_alphabet(joint_xy: &JointTable) -> u32 {
    joint_xy.cells().map(|(c, _)| c[0]).max().map_or(1, |m| m + 1)
}
