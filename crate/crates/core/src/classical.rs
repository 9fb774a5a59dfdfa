//! Finite joint distributions ("primitives"), their dependent parts, and the
//! classical honest-but-curious sampler for trivial primitives.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Normalization tolerance for probability vectors and tables.
pub const SUM_TOL: f64 = 1e-12;
/// Total-variation distance under which two conditional rows are equal.
pub const ROW_TOL: f64 = 1e-9;
/// Entropy below which a conditional entropy counts as zero.
pub const ZERO_ENTROPY_TOL: f64 = 1e-9;

/// `-Σ p log2 p` without validation; non-positive entries contribute nothing.
pub fn shannon_entropy_unchecked(dist: &[f64]) -> f64 {
    let h: f64 = dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

pub fn shannon_entropy(dist: &[f64]) -> Result<f64> {
    if dist.is_empty() {
        return Err(Error::Validation("empty distribution".into()));
    }
    if let Some(bad) = dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::Validation(format!("negative or non-finite entry {bad}")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::Validation(format!("entries sum to {sum}, not 1")));
    }
    Ok(shannon_entropy_unchecked(dist))
}

fn table_entropy(table: &[Vec<f64>]) -> f64 {
    shannon_entropy_unchecked(&table.iter().flatten().copied().collect::<Vec<_>>())
}

fn row_sums(table: &[Vec<f64>]) -> Vec<f64> {
    table.iter().map(|r| r.iter().sum()).collect()
}

fn col_sums(table: &[Vec<f64>]) -> Vec<f64> {
    let cols = table.first().map_or(0, Vec::len);
    (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect()
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// A joint distribution `P_{X,Y}` over two finite labelled alphabets.
#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    x_alphabet: Vec<String>,
    y_alphabet: Vec<String>,
    probs: Vec<Vec<f64>>,
}

impl Primitive {
    pub fn new(x_alphabet: Vec<String>, y_alphabet: Vec<String>, probs: Vec<Vec<f64>>) -> Result<Self> {
        for (name, alpha) in [("x", &x_alphabet), ("y", &y_alphabet)] {
            if alpha.is_empty() {
                return Err(Error::Validation(format!("{name} alphabet is empty")));
            }
            let mut sorted = alpha.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != alpha.len() {
                return Err(Error::Validation(format!("{name} alphabet has duplicate labels")));
            }
        }
        if probs.len() != x_alphabet.len() || probs.iter().any(|r| r.len() != y_alphabet.len()) {
            return Err(Error::Validation(format!(
                "probability table must be {}x{}",
                x_alphabet.len(),
                y_alphabet.len()
            )));
        }
        if let Some(bad) = probs.iter().flatten().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Validation(format!("negative or non-finite probability {bad}")));
        }
        let sum: f64 = probs.iter().flatten().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Validation(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self {
            x_alphabet,
            y_alphabet,
            probs,
        })
    }

    /// Alphabets labelled `0..n` and `0..m`.
    pub fn from_table(probs: Vec<Vec<f64>>) -> Result<Self> {
        let nx = probs.len();
        let ny = probs.first().map_or(0, Vec::len);
        Self::new(
            (0..nx).map(|i| i.to_string()).collect(),
            (0..ny).map(|i| i.to_string()).collect(),
            probs,
        )
    }

    pub fn x_alphabet(&self) -> &[String] {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &[String] {
        &self.y_alphabet
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn x_len(&self) -> usize {
        self.x_alphabet.len()
    }

    pub fn y_len(&self) -> usize {
        self.y_alphabet.len()
    }

    pub fn x_index(&self, label: &str) -> Option<usize> {
        self.x_alphabet.iter().position(|l| l == label)
    }

    pub fn p_x(&self) -> Vec<f64> {
        row_sums(&self.probs)
    }

    pub fn p_y(&self) -> Vec<f64> {
        col_sums(&self.probs)
    }

    /// `P_{Y|X=x}`; `None` when `P_X(x) = 0`.
    pub fn conditional_row(&self, x: usize) -> Option<Vec<f64>> {
        let px: f64 = self.probs[x].iter().sum();
        (px > 0.0).then(|| self.probs[x].iter().map(|p| p / px).collect())
    }

    /// The same distribution with the roles of the two parties swapped.
    pub fn transposed(&self) -> Primitive {
        let probs = (0..self.y_len())
            .map(|y| (0..self.x_len()).map(|x| self.probs[x][y]).collect())
            .collect();
        Primitive {
            x_alphabet: self.y_alphabet.clone(),
            y_alphabet: self.x_alphabet.clone(),
            probs,
        }
    }

    /// Joint distribution of `(X↘Y, Y)`, one row per non-null class.
    pub fn coarse_grained(&self, dep: &DependentPartMap) -> Primitive {
        let probs = class_joint(self, dep);
        Primitive {
            x_alphabet: (0..dep.class_count()).map(|k| format!("k{k}")).collect(),
            y_alphabet: self.y_alphabet.clone(),
            probs,
        }
    }

    pub fn to_json(&self) -> PrimitiveJson {
        PrimitiveJson {
            x: self.x_alphabet.clone(),
            y: self.y_alphabet.clone(),
            p: self.probs.clone(),
        }
    }

    /// Parses `{"x": [...], "y": [...], "p": [[...]]}`. Labels may be
    /// strings or numbers; probabilities may be numbers, decimal strings, or
    /// `"a/b"` fractions.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s)?;
        Self::from_json_value(&v)
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("primitive must be a JSON object".into()))?;
        let labels = |key: &str| -> Result<Vec<String>> {
            obj.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("missing array \"{key}\"")))?
                .iter()
                .map(|l| match l {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    other => Err(Error::Parse(format!("bad label {other}"))),
                })
                .collect()
        };
        let x = labels("x")?;
        let y = labels("y")?;
        let rows = obj
            .get("p")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing array \"p\"".into()))?;
        let probs = rows
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::Parse("rows of \"p\" must be arrays".into()))?
                    .iter()
                    .map(parse_probability)
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(x, y, probs)
    }
}

/// Serialized form of a [`Primitive`] as written by this crate.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PrimitiveJson {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub p: Vec<Vec<f64>>,
}

pub fn parse_probability(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
        Value::String(s) => parse_decimal(s),
        other => Err(Error::Parse(format!("bad probability {other}"))),
    }
}

/// Decimal or `num/den` string.
pub fn parse_decimal(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| Error::Parse(format!("bad fraction {s}")))?;
        let d: f64 = den.trim().parse().map_err(|_| Error::Parse(format!("bad fraction {s}")))?;
        if d == 0.0 {
            return Err(Error::Parse(format!("zero denominator in {s}")));
        }
        return Ok(n / d);
    }
    s.parse().map_err(|_| Error::Parse(format!("bad decimal {s}")))
}

/// Partition of the x alphabet by equality of `P_{Y|X=x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependentPartMap {
    /// Class id per x index; `None` is the null class of zero-probability rows.
    pub class_of: Vec<Option<usize>>,
    /// Conditional distribution over y for each class id.
    pub class_conditional: Vec<Vec<f64>>,
}

impl DependentPartMap {
    pub fn class_count(&self) -> usize {
        self.class_conditional.len()
    }

    pub fn members(&self, class: usize) -> Vec<usize> {
        self.class_of
            .iter()
            .enumerate()
            .filter_map(|(x, k)| (*k == Some(class)).then_some(x))
            .collect()
    }
}

pub fn dependent_part(p: &Primitive) -> DependentPartMap {
    let mut class_of = Vec::with_capacity(p.x_len());
    let mut class_conditional: Vec<Vec<f64>> = Vec::new();
    for x in 0..p.x_len() {
        let Some(row) = p.conditional_row(x) else {
            class_of.push(None);
            continue;
        };
        let existing = class_conditional
            .iter()
            .position(|rep| total_variation(rep, &row) <= ROW_TOL);
        match existing {
            Some(k) => class_of.push(Some(k)),
            None => {
                class_of.push(Some(class_conditional.len()));
                class_conditional.push(row);
            }
        }
    }
    DependentPartMap {
        class_of,
        class_conditional,
    }
}

fn class_joint(p: &Primitive, dep: &DependentPartMap) -> Vec<Vec<f64>> {
    let mut joint = vec![vec![0.0; p.y_len()]; dep.class_count()];
    for (x, class) in dep.class_of.iter().enumerate() {
        if let Some(k) = class {
            for (y, &pxy) in p.probs[x].iter().enumerate() {
                joint[*k][y] += pxy;
            }
        }
    }
    joint
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EntropyReport {
    pub H_X: f64,
    pub H_Y: f64,
    pub H_X_given_Y: f64,
    pub H_Y_given_X: f64,
    pub I_XY: f64,
    /// `H(X↘Y | Y)`.
    pub H_dep_XY_given_Y: f64,
    /// `H(Y↘X | X)`.
    pub H_dep_YX_given_X: f64,
}

/// The quantities `H(X↘Y|Y)`, `H(Y|X↘Y)` and `I(X↘Y;Y)` for one direction.
#[derive(Clone, Copy, Debug)]
pub struct DependentEntropies {
    pub dep_given_other: f64,
    pub other_given_dep: f64,
    pub dep_mutual_information: f64,
}

pub fn dependent_entropies(p: &Primitive) -> DependentEntropies {
    let dep = dependent_part(p);
    let joint = class_joint(p, &dep);
    let h_ky = table_entropy(&joint);
    let h_k = shannon_entropy_unchecked(&row_sums(&joint));
    let h_y = shannon_entropy_unchecked(&p.p_y());
    DependentEntropies {
        dep_given_other: (h_ky - h_y).max(0.0),
        other_given_dep: (h_ky - h_k).max(0.0),
        dep_mutual_information: (h_k + h_y - h_ky).max(0.0),
    }
}

pub fn entropy_report(p: &Primitive) -> EntropyReport {
    let h_xy = table_entropy(&p.probs);
    let h_x = shannon_entropy_unchecked(&p.p_x());
    let h_y = shannon_entropy_unchecked(&p.p_y());
    EntropyReport {
        H_X: h_x,
        H_Y: h_y,
        H_X_given_Y: (h_xy - h_y).max(0.0),
        H_Y_given_X: (h_xy - h_x).max(0.0),
        I_XY: (h_x + h_y - h_xy).max(0.0),
        H_dep_XY_given_Y: dependent_entropies(p).dep_given_other,
        H_dep_YX_given_X: dependent_entropies(&p.transposed()).dep_given_other,
    }
}

/// `H(X↘Y|Y) = 0`. Both directions are evaluated and must agree.
pub fn is_trivial_primitive(p: &Primitive) -> Result<bool> {
    let r = entropy_report(p);
    let forward = r.H_dep_XY_given_Y <= ZERO_ENTROPY_TOL;
    let backward = r.H_dep_YX_given_X <= ZERO_ENTROPY_TOL;
    if forward != backward {
        return Err(Error::Inconsistent(format!(
            "H(X↘Y|Y) = {} but H(Y↘X|X) = {}",
            r.H_dep_XY_given_Y, r.H_dep_YX_given_X
        )));
    }
    Ok(forward)
}

/// Two-step classical protocol: Bob draws the class of `X↘Y`, announces it
/// and samples `y` from the class conditional; Alice samples `x` within the
/// announced class.
#[derive(Clone, Debug)]
pub struct ClassicalHbcSampler {
    class_dist: WeightedIndex<f64>,
    y_given_class: Vec<WeightedIndex<f64>>,
    x_given_class: Vec<(Vec<usize>, WeightedIndex<f64>)>,
}

impl ClassicalHbcSampler {
    pub fn new(p: &Primitive) -> Result<Self> {
        let dep = dependent_part(p);
        let joint = class_joint(p, &dep);
        let weights = row_sums(&joint);
        let class_dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::Validation(format!("class distribution: {e}")))?;
        let y_given_class = dep
            .class_conditional
            .iter()
            .map(WeightedIndex::new)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Validation(format!("class conditional: {e}")))?;
        let px = p.p_x();
        let x_given_class = (0..dep.class_count())
            .map(|k| {
                let members = dep.members(k);
                let w: Vec<f64> = members.iter().map(|&x| px[x]).collect();
                WeightedIndex::new(&w)
                    .map(|d| (members, d))
                    .map_err(|e| Error::Validation(format!("class members: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            class_dist,
            y_given_class,
            x_given_class,
        })
    }

    /// One `(x, y)` index pair.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let class = self.class_dist.sample(rng);
        let y = self.y_given_class[class].sample(rng);
        let (members, dist) = &self.x_given_class[class];
        (members[dist.sample(rng)], y)
    }
}

pub fn classical_hbc_sample(p: &Primitive, seed: u64) -> Result<(usize, usize)> {
    let sampler = ClassicalHbcSampler::new(p)?;
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}
