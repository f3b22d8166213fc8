//! POVMs, projective measurements, rank vectors and projective simulation models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{c64, eigh_sorted, min_eigenvalue, Operator, C64};
use crate::tolerance::Tolerances;

/// An ordered list of effects on a `dim`-dimensional Hilbert space.
///
/// Construction only checks shape and Hermiticity; positivity and
/// completeness are reported by [`Povm::validate`], so malformed inputs can
/// still be inspected.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<Operator>,
    label: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NotHermitian { outcome: usize, deviation: f64 },
    NotPsd { outcome: usize, min_eigenvalue: f64 },
    /// `deviation` is the largest entry of `|Σ E_a - I|`; `sum_norm` the spectral norm of `Σ E_a`.
    Incomplete { deviation: f64, sum_norm: f64 },
    Empty,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Povm {
    pub fn new(effects: Vec<Operator>) -> Result<Self> {
        Self::with_label(effects, None)
    }

    pub fn with_label(effects: Vec<Operator>, label: Option<String>) -> Result<Self> {
        let dim = match effects.first() {
            Some(e) => e.dim(),
            None => return Err(Error::InvalidPovm("a POVM needs at least one effect".into())),
        };
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
            }
        }
        Ok(Self { dim, effects, label })
    }

    /// Builds the POVM and fails unless it passes [`Povm::validate`].
    pub fn new_checked(effects: Vec<Operator>, tol: &Tolerances) -> Result<Self> {
        let p = Self::new(effects)?;
        p.ensure_valid(tol)?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn effect(&self, a: usize) -> &Operator {
        &self.effects[a]
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = Some(label.into());
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.set_label(label);
        self
    }

    pub fn effect_sum(&self) -> Operator {
        let mut acc = Operator::zeros(self.dim);
        for e in &self.effects {
            acc += e;
        }
        acc
    }

    pub fn traces(&self) -> Vec<f64> {
        self.effects.iter().map(|e| e.trace().re).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(&Tolerances::default())
    }

    pub fn validate_with(&self, tol: &Tolerances) -> ValidationReport {
        let mut violations = Vec::new();
        if self.effects.is_empty() {
            violations.push(Violation::Empty);
            return ValidationReport { violations };
        }
        for (a, e) in self.effects.iter().enumerate() {
            let defect = e.hermiticity_defect();
            if defect > tol.completeness {
                violations.push(Violation::NotHermitian { outcome: a, deviation: defect });
                continue;
            }
            let lmin = min_eigenvalue(&e.hermitian_part()).unwrap_or(f64::NAN);
            if !(lmin >= -tol.psd) {
                violations.push(Violation::NotPsd { outcome: a, min_eigenvalue: lmin });
            }
        }
        let sum = self.effect_sum();
        let deviation = sum.max_abs_diff(&Operator::identity(self.dim));
        if deviation > tol.completeness {
            let sum_norm = sum
                .hermitian_part()
                .eigenvalues()
                .map(|ev| ev.iter().fold(0.0f64, |m, l| m.max(l.abs())))
                .unwrap_or(f64::NAN);
            violations.push(Violation::Incomplete { deviation, sum_norm });
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self, tol: &Tolerances) -> Result<()> {
        let report = self.validate_with(tol);
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidPovm(format!("{v:?}"))),
        }
    }

    /// Nearest-looking POVM to numerically perturbed effects: negative
    /// eigenvalues are clipped and the effects are conjugated by `S^{-1/2}`,
    /// `S = Σ_a E_a`.
    pub fn from_approximate(effects: &[Operator]) -> Result<Povm> {
        let clipped: Vec<Operator> = effects.iter().map(|e| e.hermitian_part().map_eigenvalues(|l| l.max(0.0))).collect();
        let sum = clipped
            .iter()
            .sum::<Option<Operator>>()
            .ok_or_else(|| Error::InvalidPovm("a POVM needs at least one effect".into()))?
            .hermitian_part();
        let (vals, _) = eigh_sorted(sum.matrix());
        if vals[0] <= 1e-12 * vals[vals.len() - 1].max(1.0) {
            return Err(Error::InvalidPovm(format!("effects sum to a singular operator (smallest eigenvalue {:.3e})", vals[0])));
        }
        let t = sum.map_eigenvalues(|l| 1.0 / l.sqrt());
        Povm::new(clipped.iter().map(|g| (&(&t * g) * &t).hermitian_part()).collect())
    }

    /// Applies `Φ_v(X) = vX + (1-v) tr(X) I/d` to every effect.
    pub fn depolarize(&self, v: f64) -> Result<Povm> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange(format!("visibility {v} not in [0, 1]")));
        }
        Ok(self.depolarize_unchecked(v))
    }

    /// `Φ_v` without the range check; `v > 1` is used by witness algebra.
    pub fn depolarize_unchecked(&self, v: f64) -> Povm {
        let d = self.dim as f64;
        let id = Operator::identity(self.dim);
        let effects = self
            .effects
            .iter()
            .map(|e| &e.scale(v) + &id.scale((1.0 - v) * e.trace().re / d))
            .collect();
        Povm { dim: self.dim, effects, label: self.label.clone() }
    }

    /// `v E_a + (1-v) N_a`.
    pub fn mix_with(&self, noise: &Povm, v: f64) -> Result<Povm> {
        self.check_compatible(noise)?;
        let effects =
            self.effects.iter().zip(&noise.effects).map(|(e, n)| &e.scale(v) + &n.scale(1.0 - v)).collect();
        Ok(Povm { dim: self.dim, effects, label: None })
    }

    /// Embeds into `d + extra_dims` and appends one rank-one effect `|k><k|`
    /// per added dimension.
    pub fn flag(&self, extra_dims: usize) -> Result<Povm> {
        if extra_dims == 0 {
            return Err(Error::OutOfRange("flag needs at least one extra dimension".into()));
        }
        let d = self.dim;
        let mut effects: Vec<Operator> = self.effects.iter().map(|e| e.pad(extra_dims)).collect();
        for k in 0..extra_dims {
            effects.push(Operator::unit(d + extra_dims, d + k, d + k));
        }
        let label = self.label.as_ref().map(|l| format!("flag({l},{extra_dims})"));
        Ok(Povm { dim: d + extra_dims, effects, label })
    }

    /// Sums the effects of each index set; the sets must partition `0..n`.
    pub fn coarse_grain(&self, partition: &[Vec<usize>]) -> Result<Povm> {
        let n = self.outcomes();
        let mut seen = vec![false; n];
        for set in partition {
            if set.is_empty() {
                return Err(Error::InvalidPartition("empty outcome set".into()));
            }
            for &a in set {
                if a >= n {
                    return Err(Error::InvalidPartition(format!("outcome {a} out of range 0..{n}")));
                }
                if seen[a] {
                    return Err(Error::InvalidPartition(format!("outcome {a} appears twice")));
                }
                seen[a] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("outcome {missing} not covered")));
        }
        let effects = partition
            .iter()
            .map(|set| {
                let mut acc = Operator::zeros(self.dim);
                for &a in set {
                    acc += &self.effects[a];
                }
                acc
            })
            .collect();
        Ok(Povm { dim: self.dim, effects, label: None })
    }

    /// Conjugates every effect by `u`.
    pub fn transformed(&self, u: &Operator) -> Result<Povm> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: u.dim() });
        }
        let effects = self.effects.iter().map(|e| e.conjugate_by(u)).collect();
        Ok(Povm { dim: self.dim, effects, label: self.label.clone() })
    }

    /// Largest elementwise deviation between corresponding effects.
    pub fn max_deviation(&self, other: &Povm) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.effects.iter().zip(&other.effects).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max))
    }

    /// True when every effect is (numerically) a multiple of the identity.
    pub fn is_trivial(&self, tol: f64) -> bool {
        let d = self.dim as f64;
        let id = Operator::identity(self.dim);
        self.effects.iter().all(|e| e.max_abs_diff(&id.scale(e.trace().re / d)) <= tol)
    }

    /// Outcomes whose effect has trace at least `threshold`.
    pub fn active_outcomes(&self, threshold: f64) -> Vec<usize> {
        self.traces().iter().enumerate().filter(|(_, &t)| t >= threshold).map(|(a, _)| a).collect()
    }

    pub(crate) fn check_compatible(&self, other: &Povm) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.outcomes() != other.outcomes() {
            return Err(Error::DimensionMismatch { expected: self.outcomes(), found: other.outcomes() });
        }
        Ok(())
    }

    /// Largest violation of `P_a² = P_a` and `P_a P_b = 0`.
    pub fn projectivity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, pa) in self.effects.iter().enumerate() {
            worst = worst.max((pa * pa).max_abs_diff(pa));
            for pb in &self.effects[a + 1..] {
                worst = worst.max((pa * pb).max_abs());
            }
        }
        worst
    }
}

/// A POVM whose effects are mutually orthogonal projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveMeasurement(Povm);

impl ProjectiveMeasurement {
    pub fn new(povm: Povm) -> Result<Self> {
        Self::new_with(povm, &Tolerances::default())
    }

    pub fn new_with(povm: Povm, tol: &Tolerances) -> Result<Self> {
        let residual = povm.projectivity_residual();
        if residual > tol.projector {
            return Err(Error::InvalidModel(format!("not projective (residual {residual:.3e})")));
        }
        let completeness = povm.effect_sum().max_abs_diff(&Operator::identity(povm.dim()));
        if completeness > tol.completeness {
            return Err(Error::InvalidModel(format!("projectors do not sum to identity ({completeness:.3e})")));
        }
        Ok(Self(povm))
    }

    /// Orthonormal basis measurement: outcome `outcome_of[i]` gets `|b_i><b_i|`.
    pub fn from_basis(
        vectors: &[crate::operator::StateVector],
        outcome_of: &[usize],
        outcomes: usize,
    ) -> Result<Self> {
        let dim = vectors.first().map(|v| v.dim()).ok_or_else(|| Error::InvalidModel("empty basis".into()))?;
        let mut effects = vec![Operator::zeros(dim); outcomes];
        for (v, &a) in vectors.iter().zip(outcome_of) {
            if a >= outcomes {
                return Err(Error::InvalidModel(format!("outcome {a} out of range")));
            }
            effects[a] += &v.projector();
        }
        Self::new(Povm::new(effects)?)
    }

    pub fn povm(&self) -> &Povm {
        &self.0
    }

    pub fn into_povm(self) -> Povm {
        self.0
    }

    pub fn ranks(&self) -> RankVector {
        RankVector(self.0.traces().iter().map(|t| t.round().max(0.0) as usize).collect())
    }
}

/// Rank signature `(r_1, …, r_n)` of a projective measurement, `Σ r_a = d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RankVector(pub Vec<usize>);

impl RankVector {
    pub fn new(ranks: Vec<usize>, dim: usize) -> Result<Self> {
        let total: usize = ranks.iter().sum();
        if total != dim {
            return Err(Error::OutOfRange(format!("rank vector sums to {total}, expected {dim}")));
        }
        Ok(Self(ranks))
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0.iter().sum()
    }

    /// Outcomes with nonzero rank.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &r)| r > 0).map(|(a, _)| a).collect()
    }
}

impl std::fmt::Display for RankVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Streams all compositions of `d` into `n` nonnegative parts in
/// colexicographic order, starting at `(d, 0, …, 0)` and ending at
/// `(0, …, 0, d)`.
#[derive(Clone, Debug)]
pub struct RankVectors {
    current: Option<Vec<usize>>,
}

impl Iterator for RankVectors {
    type Item = RankVector;

    fn next(&mut self) -> Option<RankVector> {
        let out = self.current.clone()?;
        let r = self.current.as_mut().unwrap();
        let n = r.len();
        match r.iter().position(|&x| x > 0) {
            Some(i) if i + 1 < n => {
                let t = r[i];
                r[i] = 0;
                r[0] = t - 1;
                r[i + 1] += 1;
            }
            _ => self.current = None,
        }
        Some(RankVector(out))
    }
}

pub fn enumerate_rank_vectors(n: usize, d: usize) -> RankVectors {
    if n == 0 {
        return RankVectors { current: None };
    }
    let mut first = vec![0; n];
    first[0] = d;
    RankVectors { current: Some(first) }
}

/// `C(n + d - 1, n - 1)`, the number of rank vectors.
pub fn count_rank_vectors(n: usize, d: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    binomial((n + d - 1) as u128, d as u128)
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Kind of noise mixed into a POVM when measuring its robustness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// White noise, `Φ_v`.
    Depolarizing,
    /// Mixing with an adversarially chosen POVM.
    WorstCase,
}

impl std::fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseModel::Depolarizing => write!(f, "depolarizing"),
            NoiseModel::WorstCase => write!(f, "worst-case"),
        }
    }
}

/// One branch `λ` of a simulation: a projective measurement chosen with probability `weight`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationEntry {
    pub weight: f64,
    pub measurement: ProjectiveMeasurement,
}

/// `p(a | k, λ)` stored as `tables[λ][k][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PostProcessing {
    pub tables: Vec<Vec<Vec<f64>>>,
}

/// Mixture of projective measurements, optionally followed by classical
/// post-processing of the outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationModel {
    entries: Vec<SimulationEntry>,
    postprocessing: Option<PostProcessing>,
}

impl SimulationModel {
    pub fn new(entries: Vec<SimulationEntry>) -> Result<Self> {
        Self::build(entries, None, &Tolerances::default())
    }

    pub fn with_postprocessing(entries: Vec<SimulationEntry>, post: PostProcessing) -> Result<Self> {
        Self::build(entries, Some(post), &Tolerances::default())
    }

    fn build(entries: Vec<SimulationEntry>, post: Option<PostProcessing>, tol: &Tolerances) -> Result<Self> {
        let first = entries.first().ok_or_else(|| Error::InvalidModel("model has no entries".into()))?;
        let dim = first.measurement.povm().dim();
        let mut total = 0.0;
        for e in &entries {
            if !(0.0..=1.0 + tol.weight_sum).contains(&e.weight) {
                return Err(Error::InvalidModel(format!("weight {} outside [0, 1]", e.weight)));
            }
            if e.measurement.povm().dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.measurement.povm().dim() });
            }
            total += e.weight;
        }
        if (total - 1.0).abs() > tol.weight_sum {
            return Err(Error::InvalidModel(format!("weights sum to {total}")));
        }
        match &post {
            None => {
                let n = first.measurement.povm().outcomes();
                if entries.iter().any(|e| e.measurement.povm().outcomes() != n) {
                    return Err(Error::InvalidModel("outcome counts differ across entries".into()));
                }
            }
            Some(pp) => {
                if pp.tables.len() != entries.len() {
                    return Err(Error::InvalidModel("one post-processing table per entry required".into()));
                }
                let n_out = pp.tables.first().and_then(|t| t.first()).map(|r| r.len()).unwrap_or(0);
                for (e, table) in entries.iter().zip(&pp.tables) {
                    if table.len() != e.measurement.povm().outcomes() {
                        return Err(Error::InvalidModel("table rows must match measurement outcomes".into()));
                    }
                    for row in table {
                        if row.len() != n_out {
                            return Err(Error::InvalidModel("outcome counts differ across tables".into()));
                        }
                        let s: f64 = row.iter().sum();
                        if row.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > tol.stochastic_row {
                            return Err(Error::InvalidModel(format!("non-stochastic post-processing row (sum {s})")));
                        }
                    }
                }
            }
        }
        Ok(Self { entries, postprocessing: post })
    }

    pub fn entries(&self) -> &[SimulationEntry] {
        &self.entries
    }

    pub fn postprocessing(&self) -> Option<&PostProcessing> {
        self.postprocessing.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].measurement.povm().dim()
    }

    pub fn outcomes(&self) -> usize {
        match &self.postprocessing {
            Some(pp) => pp.tables[0][0].len(),
            None => self.entries[0].measurement.povm().outcomes(),
        }
    }

    /// `E_a = Σ_λ q_λ Σ_k p(a|k,λ) P_{k|λ}`.
    pub fn apply(&self) -> Povm {
        let dim = self.dim();
        let n = self.outcomes();
        let mut effects = vec![Operator::zeros(dim); n];
        for (l, entry) in self.entries.iter().enumerate() {
            let povm = entry.measurement.povm();
            match &self.postprocessing {
                None => {
                    for (a, p) in povm.effects().iter().enumerate() {
                        effects[a] += &p.scale(entry.weight);
                    }
                }
                Some(pp) => {
                    for (k, p) in povm.effects().iter().enumerate() {
                        for (a, &prob) in pp.tables[l][k].iter().enumerate() {
                            if prob != 0.0 {
                                effects[a] += &p.scale(entry.weight * prob);
                            }
                        }
                    }
                }
            }
        }
        Povm { dim, effects, label: None }
    }

    /// Rewrites the post-processing as a mixture of deterministic relabelings
    /// `G_{a|λ,g} = Σ_k P_{k|λ} δ_{a,g(k)}`, each of which is projective.
    ///
    /// The stochastic table of each entry is peeled greedily: every round takes
    /// the first supported outcome of each row and the smallest remaining
    /// mass among them, which zeroes at least one table entry per round.
    pub fn eliminate_postprocessing(&self) -> Result<SimulationModel> {
        let pp = match &self.postprocessing {
            Some(pp) => pp,
            None => return Ok(self.clone()),
        };
        let n_out = self.outcomes();
        let mut entries = Vec::new();
        for (entry, table) in self.entries.iter().zip(&pp.tables) {
            let mut remaining: Vec<Vec<f64>> = table.clone();
            let mut row_mass: Vec<f64> = remaining.iter().map(|r| r.iter().sum()).collect();
            const EXHAUSTED: f64 = 1e-15;
            while row_mass.iter().all(|&m| m > EXHAUSTED) {
                let choice: Vec<usize> = remaining
                    .iter()
                    .map(|row| row.iter().position(|&p| p > EXHAUSTED).unwrap_or(0))
                    .collect();
                let w = choice.iter().enumerate().map(|(k, &a)| remaining[k][a]).fold(f64::INFINITY, f64::min);
                if !(w > 0.0) {
                    break;
                }
                for (k, &a) in choice.iter().enumerate() {
                    remaining[k][a] = if remaining[k][a] - w <= EXHAUSTED { 0.0 } else { remaining[k][a] - w };
                    row_mass[k] -= w;
                }
                let dim = entry.measurement.povm().dim();
                let mut effects = vec![Operator::zeros(dim); n_out];
                for (k, p) in entry.measurement.povm().effects().iter().enumerate() {
                    effects[choice[k]] += p;
                }
                let measurement = ProjectiveMeasurement::new(Povm::new(effects)?)?;
                entries.push(SimulationEntry { weight: entry.weight * w, measurement });
            }
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("deterministic decomposition lost mass ({total})")));
        }
        Ok(SimulationModel { entries, postprocessing: None })
    }

    /// Drops entries with weight below `threshold` and renormalizes.
    pub fn pruned(&self, threshold: f64) -> SimulationModel {
        let kept: Vec<SimulationEntry> = self.entries.iter().filter(|e| e.weight > threshold).cloned().collect();
        let total: f64 = kept.iter().map(|e| e.weight).sum();
        let entries = kept.into_iter().map(|mut e| {
            e.weight /= total;
            e
        });
        SimulationModel { entries: entries.collect(), postprocessing: None }
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PovmJson {
    dim: usize,
    effects: Vec<Vec<Vec<ComplexJson>>>,
    #[serde(default)]
    label: String,
}

impl Povm {
    /// Serializes to `{ "dim": d, "effects": [[[{"re","im"}, …], …], …], "label": str }`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("POVM serialization cannot fail")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let doc = PovmJson {
            dim: self.dim,
            effects: self
                .effects
                .iter()
                .map(|e| {
                    (0..self.dim)
                        .map(|i| (0..self.dim).map(|j| ComplexJson { re: e.get(i, j).re, im: e.get(i, j).im }).collect())
                        .collect()
                })
                .collect(),
            label: self.label.clone().unwrap_or_default(),
        };
        serde_json::to_value(doc).expect("POVM serialization cannot fail")
    }

    /// Parses the JSON format of [`Povm::to_json`]; rejects effects that are
    /// non-Hermitian beyond `tol.json_hermitian` and Hermitizes the rest.
    pub fn from_json(text: &str, tol: &Tolerances) -> Result<Self> {
        let doc: PovmJson = serde_json::from_str(text)?;
        Self::from_doc(doc, tol)
    }

    pub fn from_json_value(value: serde_json::Value, tol: &Tolerances) -> Result<Self> {
        let doc: PovmJson = serde_json::from_value(value)?;
        Self::from_doc(doc, tol)
    }

    fn from_doc(doc: PovmJson, tol: &Tolerances) -> Result<Self> {
        let d = doc.dim;
        if d == 0 {
            return Err(Error::InvalidPovm("dim must be positive".into()));
        }
        let mut effects = Vec::with_capacity(doc.effects.len());
        for (a, rows) in doc.effects.iter().enumerate() {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidPovm(format!("effect {a} is not {d}x{d}")));
            }
            let entries: Vec<C64> = rows.iter().flatten().map(|z| c64(z.re, z.im)).collect();
            if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidPovm(format!("effect {a} has non-finite entries")));
            }
            let op = Operator::from_rows(d, &entries)?;
            let defect = op.hermiticity_defect();
            if defect > tol.json_hermitian {
                return Err(Error::NotHermitian { deviation: defect });
            }
            effects.push(op.hermitian_part());
        }
        let label = if doc.label.is_empty() { None } else { Some(doc.label) };
        Self::with_label(effects, label)
    }
}
