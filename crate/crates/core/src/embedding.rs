//! Regular embeddings `Σ_x sqrt(P_X(x)) |x>_A |psi_x>_B` of primitives,
//! correctness and triviality checks, and the comparison-pair search.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{dependent_part, Primitive, PrimitiveJson};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::quantum::{self, ComplexArrayJson, DensityOp, PureState};
use crate::random;

/// Entropy (bits) at or below which an embedding side counts as trivial.
pub const TRIVIAL_TOL: f64 = 1e-6;
/// Tolerance for the mutual-information equalities of a correct embedding.
pub const CORRECT_TOL: f64 = 1e-6;
/// Overlaps within this distance of 0 or 1 do not qualify as a comparison pair.
pub const PAIR_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct RegularEmbedding {
    primitive: Primitive,
    alice_weights: Vec<f64>,
    bob_states: Vec<PureState>,
    phases: Vec<Vec<f64>>,
}

impl RegularEmbedding {
    /// Builds the embedding with `psi_x = Σ_y sqrt(P(y|x)) e^{i theta(x,y)} |y>`.
    pub fn with_phases(p: &Primitive, phases: Vec<Vec<f64>>) -> Result<Self> {
        if phases.len() != p.x_len() || phases.iter().any(|r| r.len() != p.y_len()) {
            return Err(Error::Validation(format!(
                "phase table must be {}x{}",
                p.x_len(),
                p.y_len()
            )));
        }
        let mut bob_states = Vec::with_capacity(p.x_len());
        for (x, theta) in phases.iter().enumerate() {
            let row = p.conditional_row(x).ok_or_else(|| {
                Error::Validation(format!(
                    "x = {} has zero probability; regular embeddings need full support",
                    p.x_alphabet()[x]
                ))
            })?;
            let amps = CVector::from_iterator(
                p.y_len(),
                row.iter()
                    .zip(theta)
                    .map(|(q, t)| c(q.sqrt() * t.cos(), q.sqrt() * t.sin())),
            );
            bob_states.push(PureState::normalized(vec![p.y_len()], amps)?);
        }
        let e = Self {
            primitive: p.clone(),
            alice_weights: p.p_x(),
            bob_states,
            phases,
        };
        e.check_honest_statistics()?;
        Ok(e)
    }

    /// Assembles an embedding from explicit Bob states, which must reproduce
    /// the primitive's conditional rows in the computational basis.
    pub fn from_states(p: &Primitive, bob_states: Vec<PureState>) -> Result<Self> {
        if bob_states.len() != p.x_len() {
            return Err(Error::Validation("one Bob state per x label required".into()));
        }
        let phases = bob_states
            .iter()
            .map(|s| s.amplitudes().iter().map(|a| a.arg()).collect())
            .collect();
        let e = Self {
            primitive: p.clone(),
            alice_weights: p.p_x(),
            bob_states,
            phases,
        };
        e.check_honest_statistics()?;
        Ok(e)
    }

    fn check_honest_statistics(&self) -> Result<()> {
        let p = &self.primitive;
        if (self.alice_weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("Alice weights do not sum to 1".into()));
        }
        for (x, psi) in self.bob_states.iter().enumerate() {
            if psi.dim() != p.y_len() {
                return Err(Error::DimensionMismatch {
                    expected: p.y_len(),
                    got: psi.dim(),
                });
            }
            let row = p
                .conditional_row(x)
                .ok_or_else(|| Error::Validation("zero-probability x row".into()))?;
            for (y, q) in row.iter().enumerate() {
                let got = psi.amplitudes()[y].norm_sqr();
                if (got - q).abs() > 1e-9 {
                    return Err(Error::Validation(format!(
                        "|<{y}|psi_{x}>|^2 = {got} but P(y|x) = {q}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn primitive(&self) -> &Primitive {
        &self.primitive
    }

    pub fn bob_dim(&self) -> usize {
        self.primitive.y_len()
    }

    pub fn alice_dim(&self) -> usize {
        self.primitive.x_len()
    }

    pub fn alice_weights(&self) -> &[f64] {
        &self.alice_weights
    }

    pub fn bob_states(&self) -> &[PureState] {
        &self.bob_states
    }

    pub fn bob_state(&self, x: usize) -> &PureState {
        &self.bob_states[x]
    }

    pub fn phases(&self) -> &[Vec<f64>] {
        &self.phases
    }

    /// The joint pure state with dims `[|X|, |Y|]`.
    pub fn joint_state(&self) -> PureState {
        let nx = self.alice_dim();
        let ny = self.bob_dim();
        let mut amps = CVector::zeros(nx * ny);
        for (x, psi) in self.bob_states.iter().enumerate() {
            let w = self.alice_weights[x].sqrt();
            for y in 0..ny {
                amps[x * ny + y] = psi.amplitudes()[y] * w;
            }
        }
        PureState::normalized(vec![nx, ny], amps).expect("embedding state is normalized")
    }

    /// Same state over `[A, A', B, B']` with trivial auxiliary registers.
    pub fn four_register_state(&self) -> PureState {
        let s = self.joint_state();
        PureState::new(
            vec![self.alice_dim(), 1, self.bob_dim(), 1],
            s.into_amplitudes(),
        )
        .expect("regrouping preserves the state")
    }

    /// Samples honest computational-basis outcomes `(x, y)`.
    pub fn sample_honest<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let x = WeightedIndex::new(&self.alice_weights)
            .expect("weights are a distribution")
            .sample(rng);
        let probs: Vec<f64> = self.bob_states[x]
            .amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .collect();
        let y = WeightedIndex::new(&probs)
            .expect("state is normalized")
            .sample(rng);
        (x, y)
    }

    pub fn to_json(&self) -> EmbeddingJson {
        EmbeddingJson {
            primitive: self.primitive.to_json(),
            weights: self.alice_weights.clone(),
            states: self.bob_states.iter().map(PureState::to_json).collect(),
            phases: self.phases.clone(),
        }
    }

    pub fn from_json(j: &EmbeddingJson) -> Result<Self> {
        let primitive = Primitive::new(j.primitive.x.clone(), j.primitive.y.clone(), j.primitive.p.clone())?;
        let bob_states = j
            .states
            .iter()
            .map(PureState::from_json)
            .collect::<Result<Vec<_>>>()?;
        let e = Self {
            alice_weights: j.weights.clone(),
            primitive,
            bob_states,
            phases: j.phases.clone(),
        };
        let px = e.primitive.p_x();
        if e.alice_weights.len() != px.len()
            || e.alice_weights.iter().zip(&px).any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::Validation("weights disagree with P_X".into()));
        }
        e.check_honest_statistics()?;
        Ok(e)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EmbeddingJson {
    pub primitive: PrimitiveJson,
    pub weights: Vec<f64>,
    pub states: Vec<ComplexArrayJson>,
    pub phases: Vec<Vec<f64>>,
}

/// Default embedding with all phases zero.
pub fn build_regular_embedding(p: &Primitive) -> Result<RegularEmbedding> {
    RegularEmbedding::with_phases(p, vec![vec![0.0; p.y_len()]; p.x_len()])
}

/// Register dimensions of a four-register protocol state `[A, A', B, B']`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterDims {
    pub a: usize,
    pub a_aux: usize,
    pub b: usize,
    pub b_aux: usize,
}

/// Correctness of a four-register state: honest statistics reproduce the
/// primitive and `S(X;YB') = S(XA';Y) = I(X;Y)`, with `X`, `Y` the honest
/// computational-basis outcomes and `A'`, `B'` left unmeasured.
#[derive(Clone, Copy, Debug)]
pub struct CorrectnessReport {
    pub mi_x_yb: f64,
    pub mi_xa_y: f64,
    pub mi_xy: f64,
    pub statistics_match: bool,
    pub correct: bool,
}

pub fn correctness_report(psi: &PureState, dims: RegisterDims, p: &Primitive) -> Result<CorrectnessReport> {
    if dims.a != p.x_len() {
        return Err(Error::DimensionMismatch {
            expected: p.x_len(),
            got: dims.a,
        });
    }
    if dims.b != p.y_len() {
        return Err(Error::DimensionMismatch {
            expected: p.y_len(),
            got: dims.b,
        });
    }
    let total = dims.a * dims.a_aux * dims.b * dims.b_aux;
    if psi.dim() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: psi.dim(),
        });
    }
    let rho = psi
        .projector()
        .with_dims(vec![dims.a, dims.a_aux, dims.b, dims.b_aux])?
        .dephase(0)?
        .dephase(2)?;
    let xy = quantum::partial_trace(&rho, &[0, 2])?;
    let mut statistics_match = true;
    for x in 0..dims.a {
        for y in 0..dims.b {
            let got = xy.matrix()[(x * dims.b + y, x * dims.b + y)].re;
            if (got - p.probs()[x][y]).abs() > CORRECT_TOL {
                statistics_match = false;
            }
        }
    }
    let mi_x_yb = quantum::mutual_information(&rho, &[0], &[2, 3])?;
    let mi_xa_y = quantum::mutual_information(&rho, &[0, 1], &[2])?;
    let mi_xy = crate::classical::entropy_report(p).I_XY;
    let correct = statistics_match
        && (mi_x_yb - mi_xy).abs() <= CORRECT_TOL
        && (mi_xa_y - mi_xy).abs() <= CORRECT_TOL;
    Ok(CorrectnessReport {
        mi_x_yb,
        mi_xa_y,
        mi_xy,
        statistics_match,
        correct,
    })
}

pub fn check_correct_state(psi: &PureState, dims: RegisterDims, p: &Primitive) -> Result<bool> {
    Ok(correctness_report(psi, dims, p)?.correct)
}

pub fn check_correct(e: &RegularEmbedding, p: &Primitive) -> Result<bool> {
    let dims = RegisterDims {
        a: e.alice_dim(),
        a_aux: 1,
        b: e.bob_dim(),
        b_aux: 1,
    };
    check_correct_state(&e.four_register_state(), dims, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Trivial,
    NonTrivial,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EmbeddingClassification {
    /// `S(X↘Y | B)`.
    pub s_dep_xy_given_b: f64,
    /// `S(Y↘X | A)`.
    pub s_dep_yx_given_a: f64,
    pub verdict: Verdict,
}

/// `S(G|R)` for the cq-state `Σ_i |g_i><g_i| ⊗ |v_i><v_i|` with unnormalized
/// `v_i`; entries with `None` class are skipped.
fn classical_quantum_conditional(classes: &[Option<usize>], class_count: usize, vectors: &[CVector]) -> Result<f64> {
    let d = vectors[0].len();
    let mut joint = CMatrix::zeros(class_count * d, class_count * d);
    for (class, v) in classes.iter().zip(vectors) {
        if let Some(k) = class {
            let block = linalg::outer(v);
            let mut view = joint.view_mut((k * d, k * d), (d, d));
            view += block;
        }
    }
    let rho = DensityOp::from_parts(vec![class_count, d], joint)?;
    quantum::conditional_entropy(&rho, &[0], &[1])
}

pub fn classify_embedding(e: &RegularEmbedding) -> Result<EmbeddingClassification> {
    let p = e.primitive();
    let dep_x = dependent_part(p);
    let bob_vectors: Vec<CVector> = e
        .bob_states
        .iter()
        .zip(&e.alice_weights)
        .map(|(s, w)| s.amplitudes() * c(w.sqrt(), 0.0))
        .collect();
    let s_dep_xy_given_b =
        classical_quantum_conditional(&dep_x.class_of, dep_x.class_count(), &bob_vectors)?;

    // Alice's unnormalized conditional state once Bob has seen y.
    let dep_y = dependent_part(&p.transposed());
    let alice_vectors: Vec<CVector> = (0..e.bob_dim())
        .map(|y| {
            CVector::from_iterator(
                e.alice_dim(),
                (0..e.alice_dim()).map(|x| e.bob_states[x].amplitudes()[y] * e.alice_weights[x].sqrt()),
            )
        })
        .collect();
    let s_dep_yx_given_a =
        classical_quantum_conditional(&dep_y.class_of, dep_y.class_count(), &alice_vectors)?;

    let verdict = if s_dep_xy_given_b.min(s_dep_yx_given_a) <= TRIVIAL_TOL {
        Verdict::Trivial
    } else {
        Verdict::NonTrivial
    };
    Ok(EmbeddingClassification {
        s_dep_xy_given_b,
        s_dep_yx_given_a,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub x0: usize,
    pub x1: usize,
    pub tau: f64,
}

/// Pair of Bob states with `0 < |<psi_x0|psi_x1>| < 1` maximizing
/// `tau (1 - tau)`; the lexicographically first pair wins ties.
pub fn find_comparison_pair(e: &RegularEmbedding) -> Result<ComparisonPair> {
    let n = e.bob_states.len();
    let mut best: Option<(f64, ComparisonPair)> = None;
    for x0 in 0..n {
        for x1 in x0 + 1..n {
            let tau = quantum::overlap(&e.bob_states[x0], &e.bob_states[x1])?;
            if tau <= PAIR_TOL || tau >= 1.0 - PAIR_TOL {
                continue;
            }
            let score = tau * (1.0 - tau);
            if best.is_none_or(|(s, _)| score > s + 1e-12) {
                best = Some((score, ComparisonPair { x0, x1, tau }));
            }
        }
    }
    best.map(|(_, pair)| pair).ok_or(Error::NotFound)
}

/// `Σ_k λ_k |k,k>_{A'B'} |psi_k>_{AB}` with regular parts `psi_k`.
#[derive(Clone, Debug)]
pub struct CanonicalEmbedding {
    weights: Vec<f64>,
    regular_parts: Vec<RegularEmbedding>,
}

impl CanonicalEmbedding {
    pub fn new(weights: Vec<f64>, regular_parts: Vec<RegularEmbedding>) -> Result<Self> {
        if weights.is_empty() || weights.len() != regular_parts.len() {
            return Err(Error::Validation("one weight per regular part required".into()));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::Validation("weights must be non-negative".into()));
        }
        let norm: f64 = weights.iter().map(|w| w * w).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("Σ λ_k^2 = {norm}, not 1")));
        }
        Ok(Self {
            weights,
            regular_parts,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn regular_parts(&self) -> &[RegularEmbedding] {
        &self.regular_parts
    }

    pub fn collapse<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, &RegularEmbedding) {
        let probs: Vec<f64> = self.weights.iter().map(|w| w * w).collect();
        let k = WeightedIndex::new(&probs).expect("weights normalized").sample(rng);
        (k, &self.regular_parts[k])
    }
}

/// Measures the auxiliary register: part `k` with probability `λ_k^2`.
pub fn collapse_to_regular(c: &CanonicalEmbedding, seed: u64) -> (usize, RegularEmbedding) {
    let (k, e) = c.collapse(&mut random::seeded(seed));
    (k, e.clone())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    pub fn coin() -> Primitive {
        Primitive::from_table(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
    }

    pub fn biased_pair() -> Primitive {
        Primitive::from_table(vec![vec![0.375, 0.125], vec![0.375, 0.125]]).unwrap()
    }

    pub fn biased_pair_embedding() -> RegularEmbedding {
        RegularEmbedding::with_phases(&biased_pair(), vec![vec![0.0, 0.0], vec![0.0, PI]]).unwrap()
    }

    /// Randomized 1-2 OT: X = (x0, x1), Y = (c, x_c), uniform over consistent tuples.
    pub fn ot() -> Primitive {
        let mut probs = vec![vec![0.0; 4]; 4];
        for x0 in 0..2 {
            for x1 in 0..2 {
                for choice in 0..2 {
                    let y = if choice == 0 { x0 } else { x1 };
                    probs[x0 * 2 + x1][choice * 2 + y] += 0.125;
                }
            }
        }
        Primitive::new(
            vec!["00".into(), "01".into(), "10".into(), "11".into()],
            vec!["c0y0".into(), "c0y1".into(), "c1y0".into(), "c1y1".into()],
            probs,
        )
        .unwrap()
    }

    #[test]
    fn coin_embedding_is_bell_state() {
        let e = build_regular_embedding(&coin()).unwrap();
        let s = e.joint_state();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[3].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].norm(), 0.0);
    }

    #[test]
    fn biased_pair_phases() {
        let plain = build_regular_embedding(&biased_pair()).unwrap();
        assert_abs_diff_eq!(
            quantum::overlap(plain.bob_state(0), plain.bob_state(1)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let e = biased_pair_embedding();
        let a = e.bob_state(1).amplitudes();
        assert_abs_diff_eq!(a[0].re, 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].re, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn independent_embedding_is_product() {
        let p = Primitive::from_table(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let e = build_regular_embedding(&p).unwrap();
        assert_eq!(e.bob_state(0), e.bob_state(1));
        let s = quantum::von_neumann_entropy(&quantum::partial_trace(&e.joint_state().projector(), &[0]).unwrap());
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_row_is_rejected() {
        let p = Primitive::from_table(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(build_regular_embedding(&p).is_err());
    }

    #[test]
    fn correctness_examples() {
        for p in [coin(), biased_pair(), ot()] {
            let e = build_regular_embedding(&p).unwrap();
            assert!(check_correct(&e, &p).unwrap());
        }
        assert!(check_correct(&biased_pair_embedding(), &biased_pair()).unwrap());

        // Corrupt: every psi_x replaced by |0>.
        let p = ot();
        let e = build_regular_embedding(&p).unwrap();
        let mut amps = CVector::zeros(16);
        for x in 0..4 {
            amps[x * 4] = c(e.alice_weights()[x].sqrt(), 0.0);
        }
        let bad = PureState::new(vec![4, 1, 4, 1], amps).unwrap();
        let dims = RegisterDims { a: 4, a_aux: 1, b: 4, b_aux: 1 };
        let r = correctness_report(&bad, dims, &p).unwrap();
        assert!(!r.correct);
        assert!(r.mi_x_yb.abs() < 1e-9 && (r.mi_xy - 1.0).abs() < 1e-9);

        let wrong = RegisterDims { a: 2, a_aux: 1, b: 4, b_aux: 1 };
        assert!(correctness_report(&bad, wrong, &p).is_err());
    }

    #[test]
    fn auxiliary_registers_that_leak_break_correctness() {
        // Bob keeps a copy of X in B': S(X;YB') exceeds I(X;Y) = 0.
        let p = Primitive::from_table(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let mut amps = CVector::zeros(2 * 2 * 2);
        for x in 0..2 {
            for y in 0..2 {
                // index over [A=2, A'=1, B=2, B'=2]
                amps[x * 4 + y * 2 + x] = c(0.5, 0.0);
            }
        }
        let psi = PureState::new(vec![2, 1, 2, 2], amps).unwrap();
        let dims = RegisterDims { a: 2, a_aux: 1, b: 2, b_aux: 2 };
        let r = correctness_report(&psi, dims, &p).unwrap();
        assert!(r.statistics_match);
        assert!(!r.correct);
        assert_abs_diff_eq!(r.mi_x_yb, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn classification_examples() {
        let c = classify_embedding(&build_regular_embedding(&coin()).unwrap()).unwrap();
        assert_eq!(c.verdict, Verdict::Trivial);
        let c = classify_embedding(&biased_pair_embedding()).unwrap();
        assert_eq!(c.verdict, Verdict::Trivial);
        assert!(c.s_dep_xy_given_b <= TRIVIAL_TOL);
        let c = classify_embedding(&build_regular_embedding(&ot()).unwrap()).unwrap();
        assert_eq!(c.verdict, Verdict::NonTrivial);
        assert!(c.s_dep_xy_given_b > 0.1 && c.s_dep_yx_given_a > 0.1);
    }

    #[test]
    fn comparison_pairs() {
        let pair = find_comparison_pair(&biased_pair_embedding()).unwrap();
        assert_eq!((pair.x0, pair.x1), (0, 1));
        assert_abs_diff_eq!(pair.tau, 0.5, epsilon = 1e-12);
        assert!(matches!(
            find_comparison_pair(&build_regular_embedding(&coin()).unwrap()),
            Err(Error::NotFound)
        ));
        let e = build_regular_embedding(&ot()).unwrap();
        let pair = find_comparison_pair(&e).unwrap();
        assert!(pair.tau > 0.0 && pair.tau < 1.0);
        // Exhaustive scan: no pair has a larger tau(1-tau).
        for a in 0..4 {
            for b in a + 1..4 {
                let t = quantum::overlap(e.bob_state(a), e.bob_state(b)).unwrap();
                if t > PAIR_TOL && t < 1.0 - PAIR_TOL {
                    assert!(t * (1.0 - t) <= pair.tau * (1.0 - pair.tau) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn embedding_json_round_trip() {
        let e = biased_pair_embedding();
        let text = serde_json::to_string(&e.to_json()).unwrap();
        let back = RegularEmbedding::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.to_json(), e.to_json());
    }

    #[test]
    fn canonical_collapse() {
        let single = CanonicalEmbedding::new(vec![1.0], vec![biased_pair_embedding()]).unwrap();
        for seed in 0..20 {
            assert_eq!(collapse_to_regular(&single, seed).0, 0);
        }
        let two = CanonicalEmbedding::new(
            vec![0.75f64.sqrt(), 0.25f64.sqrt()],
            vec![biased_pair_embedding(), build_regular_embedding(&ot()).unwrap()],
        )
        .unwrap();
        let n = 10_000;
        let zeros = (0..n).filter(|&s| collapse_to_regular(&two, s).0 == 0).count() as f64;
        let sigma = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((zeros - 0.75 * n as f64).abs() < 4.0 * sigma);
        assert!(CanonicalEmbedding::new(vec![0.5, 0.5], vec![biased_pair_embedding(), biased_pair_embedding()]).is_err());
    }
}
