//! The state-comparison challenge.
//!
//! Alice holds `m` copies of an embedding, measures her registers, and hands
//! Bob two copies whose Bob-side states are each `psi_x0` or `psi_x1`. Bob
//! answers "same" (`0`), "different" (`1`) or gives up (`?`). A correct answer
//! scores 1, a wrong one `-c`, giving up scores 0.

mod certificate;
mod simulate;
mod strategies;

pub use certificate::{
    gap_certificate, require_verified, ChainCheck, GapCertificate, RepairedCheck, B2_GRID_POINTS,
    CERT_SLACK, C_SCHEDULE_STEPS, TAU_DOMAIN,
};
pub use simulate::{
    find_positions, game_csv, game_csv_header, simulate_protocol, GameRow, Positions, CELL_ORDER,
};
pub use strategies::{
    always_same_strategy, coherent_optimal_comparison, coherent_with_diagnostics, helstrom_product_strategy,
    separable_product_strategy, separable_search, CoherentDiagnostics, SearchOutcome,
    COHERENT_ACCEPT_GAP,
};

use serde::{Deserialize, Serialize};

use crate::embedding::{RegularEmbedding, PAIR_TOL};
use crate::error::{Error, Result};
use crate::ideal::QueryProgram;
use crate::linalg::{self, c, CMatrix, CVector};
use crate::quantum::{self, Povm, PureState};

/// Bob's answer to a challenge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    Same,
    Different,
    Inconclusive,
}

impl Answer {
    pub const ALL: [Answer; 3] = [Answer::Same, Answer::Different, Answer::Inconclusive];

    pub fn label(self) -> &'static str {
        match self {
            Answer::Same => "0",
            Answer::Different => "1",
            Answer::Inconclusive => "?",
        }
    }

    pub fn from_label(label: &str) -> Result<Answer> {
        match label {
            "0" => Ok(Answer::Same),
            "1" => Ok(Answer::Different),
            "?" => Ok(Answer::Inconclusive),
            other => Err(Error::Parse(format!("unknown answer label {other:?}"))),
        }
    }

    fn index(self) -> usize {
        match self {
            Answer::Same => 0,
            Answer::Different => 1,
            Answer::Inconclusive => 2,
        }
    }

    /// Score of this answer when the truth is `same`.
    pub fn score(self, same: bool, c: f64) -> f64 {
        match (self, same) {
            (Answer::Inconclusive, _) => 0.0,
            (Answer::Same, true) | (Answer::Different, false) => 1.0,
            _ => -c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub x0: usize,
    pub x1: usize,
    pub tau: f64,
    pub c: f64,
    pub m: usize,
    pub seed: u64,
    pub trials: u64,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::OutOfRange {
                value: self.tau,
                range: "tau in (0, 1)",
            });
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::OutOfRange {
                value: self.c,
                range: "c > 0",
            });
        }
        if self.m < 4 {
            return Err(Error::Validation(format!("m = {} copies, need at least 4", self.m)));
        }
        if self.x0 == self.x1 {
            return Err(Error::Validation("x0 and x1 must differ".into()));
        }
        Ok(())
    }
}

/// Per-factor statistics of a factored strategy, each factor judged as a
/// discrimination of `psi0` from `psi1` under a uniform prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorStats {
    pub first_q_c: f64,
    pub first_q_err: f64,
    pub second_q_c: f64,
    pub second_q_err: f64,
    /// The pairwise formula's payoff when both factors always answer and the
    /// table is the XOR of their guesses.
    pub pairwise_payoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffReport {
    pub q_c: f64,
    pub q_err: f64,
    pub payoff: f64,
    pub abort_prob: f64,
    pub stderr: f64,
    /// Zero for analytic reports.
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<FactorStats>,
    /// Challenge counts in [`CELL_ORDER`], Monte Carlo only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_counts: Option<[u64; 4]>,
}

impl PayoffReport {
    fn analytic(q_c: f64, q_err: f64, c: f64) -> Result<PayoffReport> {
        Ok(PayoffReport {
            q_c,
            q_err,
            payoff: expected_payoff(q_c, q_err, c)?,
            abort_prob: 0.0,
            stderr: 0.0,
            trials: 0,
            factors: None,
            cell_counts: None,
        })
    }
}

const ORDER_TOL: f64 = 1e-9;

/// `(q_c - q_err) - c q_err`.
pub fn expected_payoff(q_c: f64, q_err: f64, c: f64) -> Result<f64> {
    let ordered = q_err >= -ORDER_TOL && q_err <= q_c + ORDER_TOL && q_c <= 1.0 + ORDER_TOL;
    if !ordered || !q_c.is_finite() || !q_err.is_finite() {
        return Err(Error::Validation(format!(
            "need 0 <= q_err <= q_c <= 1, got q_err = {q_err}, q_c = {q_c}"
        )));
    }
    if !c.is_finite() {
        return Err(Error::OutOfRange {
            value: c,
            range: "finite c",
        });
    }
    Ok((q_c - q_err) * 1.0 + q_err * (-c) + (1.0 - q_c) * 0.0)
}

/// `1 - (c + 1)(q0 + q1 - 2 q0 q1)`: payoff of XOR-ing two local guesses with
/// error rates `q0` and `q1`.
pub fn pairwise_payoff(q0: f64, q1: f64, c: f64) -> Result<f64> {
    for q in [q0, q1] {
        if !(0.0..=0.5).contains(&q) {
            return Err(Error::OutOfRange {
                value: q,
                range: "error rate in [0, 1/2]",
            });
        }
    }
    Ok(1.0 - (c + 1.0) * (q0 + q1 - 2.0 * q0 * q1))
}

/// Bob-side states of a challenge pair together with an orthonormal frame of
/// their span. Product states are `A0 = {psi0 psi0, psi1 psi1}` (same) and
/// `A1 = {psi0 psi1, psi1 psi0}` (different).
#[derive(Clone, Debug)]
pub struct ComparisonStates {
    pub x0: usize,
    pub x1: usize,
    pub tau: f64,
    psi0: PureState,
    psi1: PureState,
    /// `d x 2` isometry with `psi0 = Q (1, 0)` and `psi1 = e^{i phi} Q (tau, r)`.
    frame: CMatrix,
}

impl ComparisonStates {
    pub fn new(psi0: PureState, psi1: PureState) -> Result<ComparisonStates> {
        Self::with_labels(psi0, psi1, 0, 1)
    }

    fn with_labels(psi0: PureState, psi1: PureState, x0: usize, x1: usize) -> Result<Self> {
        if psi0.dim() != psi1.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi0.dim(),
                got: psi1.dim(),
            });
        }
        let tau = quantum::overlap(&psi0, &psi1)?;
        if tau <= PAIR_TOL || tau >= 1.0 - PAIR_TOL {
            return Err(Error::Validation(format!(
                "degenerate overlap {tau}: need 0 < tau < 1"
            )));
        }
        let a = psi0.amplitudes();
        let b = psi1.amplitudes();
        let inner = a.dotc(b);
        let residual = b - a * inner;
        let phase = inner / c(inner.norm(), 0.0);
        let e1 = residual.unscale(residual.norm()) * phase.conj();
        let mut frame = CMatrix::zeros(a.len(), 2);
        frame.set_column(0, a);
        frame.set_column(1, &e1);
        Ok(ComparisonStates {
            x0,
            x1,
            tau,
            psi0,
            psi1,
            frame,
        })
    }

    /// `psi0 = |0>`, `psi1 = tau |0> + sqrt(1 - tau^2) |1>` on a qubit.
    pub fn canonical(tau: f64) -> Result<ComparisonStates> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::OutOfRange {
                value: tau,
                range: "tau in (0, 1)",
            });
        }
        let psi0 = PureState::from_real(&[1.0, 0.0])?;
        let psi1 = PureState::from_real(&[tau, (1.0 - tau * tau).sqrt()])?;
        Self::new(psi0, psi1)
    }

    pub fn psi(&self, which: usize) -> &PureState {
        if which == 0 {
            &self.psi0
        } else {
            &self.psi1
        }
    }

    pub fn local_dim(&self) -> usize {
        self.psi0.dim()
    }

    /// Product state for challenge cell `(alpha, beta)`, each in `{0, 1}`.
    pub fn pair_state(&self, alpha: usize, beta: usize) -> PureState {
        self.psi(alpha)
            .tensor(self.psi(beta))
            .expect("pair of valid states")
    }

    pub fn same_class(&self) -> [PureState; 2] {
        [self.pair_state(0, 0), self.pair_state(1, 1)]
    }

    pub fn different_class(&self) -> [PureState; 2] {
        [self.pair_state(0, 1), self.pair_state(1, 0)]
    }

    /// Coordinates of `psi0`, `psi1` in the frame, up to a global phase on
    /// `psi1`.
    fn local_coordinates(&self) -> (CVector, CVector) {
        let r = (1.0 - self.tau * self.tau).max(0.0).sqrt();
        (
            CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            CVector::from_vec(vec![c(self.tau, 0.0), c(r, 0.0)]),
        )
    }

    /// `(Q ⊗ Q) X (Q ⊗ Q)^dagger` for a two-copy operator written in the frame.
    fn lift_joint(&self, x: &CMatrix) -> CMatrix {
        let qq = linalg::kron(&self.frame, &self.frame);
        &qq * x * qq.adjoint()
    }
}

/// Challenge states for the pair `(x0, x1)` of an embedding.
pub fn comparison_states(e: &RegularEmbedding, x0: usize, x1: usize) -> Result<ComparisonStates> {
    let n = e.bob_states().len();
    for x in [x0, x1] {
        if x >= n {
            return Err(Error::Validation(format!("x-label index {x} out of range")));
        }
    }
    if x0 == x1 {
        return Err(Error::Validation("x0 and x1 must differ".into()));
    }
    ComparisonStates::with_labels(e.bob_state(x0).clone(), e.bob_state(x1).clone(), x0, x1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    Coherent,
    SeparableProduct,
    SeparableGeneral,
    IdealFunctionality,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Coherent => "coherent",
            StrategyKind::SeparableProduct => "separable_product",
            StrategyKind::SeparableGeneral => "separable_general",
            StrategyKind::IdealFunctionality => "ideal_functionality",
        }
    }
}

/// Local measurements on each challenged copy followed by a lookup table
/// `table[i][j]` from the two local outcomes to an answer. Every element of
/// the induced joint measurement is a sum of products of PSD factors.
#[derive(Clone, Debug)]
pub struct FactoredMeasurement {
    pub first: Povm,
    pub second: Povm,
    pub table: Vec<Vec<Answer>>,
}

impl FactoredMeasurement {
    pub fn new(first: Povm, second: Povm, table: Vec<Vec<Answer>>) -> Result<Self> {
        if table.len() != first.len() || table.iter().any(|row| row.len() != second.len()) {
            return Err(Error::Validation(format!(
                "table must be {} x {}",
                first.len(),
                second.len()
            )));
        }
        Ok(FactoredMeasurement {
            first,
            second,
            table,
        })
    }

    fn answer_distribution(&self, a: &PureState, b: &PureState) -> Result<[f64; 3]> {
        let pa = self.first.probabilities_pure(a)?;
        let pb = self.second.probabilities_pure(b)?;
        let mut out = [0.0; 3];
        for (i, row) in self.table.iter().enumerate() {
            for (j, answer) in row.iter().enumerate() {
                out[answer.index()] += pa[i] * pb[j];
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub enum StrategyBody {
    /// Three-outcome measurement `[E_0, E_1, E_?]` on both copies.
    Joint(Povm),
    Factored(FactoredMeasurement),
    Program(QueryProgram),
}

#[derive(Clone, Debug)]
pub struct ComparisonStrategy {
    pub kind: StrategyKind,
    pub body: StrategyBody,
    pub label: String,
}

impl ComparisonStrategy {
    /// Dense joint strategy; the measurement must be labelled `0`, `1`, `?`.
    pub fn joint(kind: StrategyKind, povm: Povm, label: &str) -> Result<Self> {
        for answer in Answer::ALL {
            if povm.index_of(answer.label()).is_none() {
                return Err(Error::InvalidPovm(format!(
                    "joint strategy lacks outcome {:?}",
                    answer.label()
                )));
            }
        }
        if povm.len() != 3 {
            return Err(Error::InvalidPovm("joint strategy needs exactly 3 outcomes".into()));
        }
        if kind == StrategyKind::SeparableProduct {
            return Err(Error::Validation(
                "product strategies are stored in factored form".into(),
            ));
        }
        Ok(ComparisonStrategy {
            kind,
            body: StrategyBody::Joint(povm),
            label: label.to_string(),
        })
    }

    pub fn factored(kind: StrategyKind, m: FactoredMeasurement, label: &str) -> Result<Self> {
        if !matches!(kind, StrategyKind::SeparableProduct | StrategyKind::SeparableGeneral) {
            return Err(Error::Validation(format!(
                "{} strategies are not factored",
                kind.name()
            )));
        }
        Ok(ComparisonStrategy {
            kind,
            body: StrategyBody::Factored(m),
            label: label.to_string(),
        })
    }

    pub fn program(program: QueryProgram, label: &str) -> ComparisonStrategy {
        ComparisonStrategy {
            kind: StrategyKind::IdealFunctionality,
            body: StrategyBody::Program(program),
            label: label.to_string(),
        }
    }

    /// Probabilities of answering `0`, `1`, `?` on copies in states `a`, `b`.
    pub fn answer_distribution(&self, a: &PureState, b: &PureState) -> Result<[f64; 3]> {
        match &self.body {
            StrategyBody::Joint(povm) => {
                let probs = povm.probabilities_pure(&a.tensor(b)?)?;
                let mut out = [0.0; 3];
                for answer in Answer::ALL {
                    let k = povm.index_of(answer.label()).expect("checked at construction");
                    out[answer.index()] = probs[k];
                }
                Ok(out)
            }
            StrategyBody::Factored(f) => f.answer_distribution(a, b),
            StrategyBody::Program(p) => p.answer_distribution(a, b),
        }
    }

    fn check_dims(&self, local_dim: usize) -> Result<()> {
        let (got, expected) = match &self.body {
            StrategyBody::Joint(povm) => (povm.dim(), local_dim * local_dim),
            StrategyBody::Factored(f) => {
                if f.first.dim() != local_dim {
                    (f.first.dim(), local_dim)
                } else {
                    (f.second.dim(), local_dim)
                }
            }
            StrategyBody::Program(p) => (p.local_dim().unwrap_or(local_dim), local_dim),
        };
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
        Ok(())
    }
}

/// `(q_c, q_err)` of a strategy under the uniform challenge distribution.
pub fn strategy_stats(s: &ComparisonStrategy, states: &ComparisonStates) -> Result<(f64, f64)> {
    s.check_dims(states.local_dim())?;
    let mut q_c = 0.0;
    let mut q_err = 0.0;
    for (alpha, beta) in CELL_ORDER {
        let dist = s.answer_distribution(states.psi(alpha), states.psi(beta))?;
        let wrong = if alpha == beta {
            Answer::Different
        } else {
            Answer::Same
        };
        q_c += 0.25 * (dist[0] + dist[1]);
        q_err += 0.25 * dist[wrong.index()];
    }
    Ok((q_c, q_err))
}

fn local_stats(m: &Povm, states: &ComparisonStates) -> Result<(f64, f64)> {
    // Outcomes labelled "0"/"1" are guesses; anything else is inconclusive.
    let guess = |label: &str| match label {
        "0" => Some(0usize),
        "1" => Some(1usize),
        _ => None,
    };
    let mut q_c = 0.0;
    let mut q_err = 0.0;
    for truth in 0..2 {
        let probs = m.probabilities_pure(states.psi(truth))?;
        for (k, p) in probs.iter().enumerate() {
            if let Some(g) = guess(&m.labels()[k]) {
                q_c += 0.5 * p;
                if g != truth {
                    q_err += 0.5 * p;
                }
            }
        }
    }
    Ok((q_c, q_err))
}

fn is_xor_table(f: &FactoredMeasurement) -> bool {
    let labels_ok = |m: &Povm| m.len() == 2 && m.labels() == ["0", "1"];
    labels_ok(&f.first)
        && labels_ok(&f.second)
        && f.table
            == vec![
                vec![Answer::Same, Answer::Different],
                vec![Answer::Different, Answer::Same],
            ]
}

const PAIRWISE_TOL: f64 = 1e-9;

/// Analytic `(q_c, q_err, payoff)`. Factored strategies also report per-factor
/// statistics, and XOR-of-guesses strategies are cross-checked against
/// [`pairwise_payoff`].
pub fn evaluate_strategy(
    s: &ComparisonStrategy,
    states: &ComparisonStates,
    c: f64,
) -> Result<PayoffReport> {
    let (q_c, q_err) = strategy_stats(s, states)?;
    let mut report = PayoffReport::analytic(q_c, q_err, c)?;
    if let StrategyBody::Factored(f) = &s.body {
        let (first_q_c, first_q_err) = local_stats(&f.first, states)?;
        let (second_q_c, second_q_err) = local_stats(&f.second, states)?;
        let pairwise_payoff = if is_xor_table(f) {
            let value = pairwise_payoff(first_q_err.min(0.5), second_q_err.min(0.5), c)?;
            if (value - report.payoff).abs() > PAIRWISE_TOL * (1.0 + c) {
                return Err(Error::Inconsistent(format!(
                    "pairwise payoff {value} disagrees with Born-rule payoff {}",
                    report.payoff
                )));
            }
            Some(value)
        } else {
            None
        };
        report.factors = Some(FactorStats {
            first_q_c,
            first_q_err,
            second_q_c,
            second_q_err,
            pairwise_payoff,
        });
    }
    Ok(report)
}
