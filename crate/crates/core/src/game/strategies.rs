use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    evaluate_strategy, Answer, ComparisonStates, ComparisonStrategy, FactoredMeasurement,
    PayoffReport, StrategyKind,
};
use crate::discrimination::{self, LABELS};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{Povm, PureState};
use crate::random;

/// A coherent solution more than this far below `1 - tau` is reported as a
/// convergence failure.
pub const COHERENT_ACCEPT_GAP: f64 = 1e-4;

const GOLDEN_ITERATIONS: usize = 200;
const BETA_MAX: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentDiagnostics {
    /// Weight of the symmetric direction in `E_1`.
    pub beta: f64,
    pub q_c: f64,
    pub target: f64,
    pub iterations: usize,
}

/// Zero-error joint measurement for the comparison problem.
///
/// In the frame of the pair, `E_1` must vanish on `aa` and `bb`, and `E_0` on
/// `ab` and `ba`. Averaging over the swap of the two copies, an optimal `E_1`
/// is `|s><s| + beta |w><w|` with `s` the antisymmetric vector and `w` the
/// symmetric vector orthogonal to `aa` and `bb`. For fixed `E_1`, the largest
/// `E_0` supported on the complement `S0` of `{ab, ba}` with
/// `E_0 <= I - E_1` is the shorted operator `B (B^† R^{-1} B)^{-1} B^†`,
/// `R = I - E_1`, `B` an isometry onto `S0`. What is left is a concave
/// function of `beta` on `[0, 1)`, maximized by golden-section search.
pub fn coherent_optimal_comparison(psi0: &PureState, psi1: &PureState) -> Result<ComparisonStrategy> {
    coherent_with_diagnostics(psi0, psi1).map(|(s, _)| s)
}

pub fn coherent_with_diagnostics(
    psi0: &PureState,
    psi1: &PureState,
) -> Result<(ComparisonStrategy, CoherentDiagnostics)> {
    let states = ComparisonStates::new(psi0.clone(), psi1.clone())?;
    let (a, b) = states.local_coordinates();
    let aa = linalg::kron_vec(&a, &a);
    let bb = linalg::kron_vec(&b, &b);
    let ab = linalg::kron_vec(&a, &b);
    let ba = linalg::kron_vec(&b, &a);

    let anti = &ab - &ba;
    let s = anti.unscale(anti.norm());
    let same_basis = linalg::gram_schmidt(&[aa.clone(), bb.clone()]);
    let mut w = &ab + &ba;
    for v in &same_basis {
        w -= v * v.dotc(&w);
    }
    let w = w.unscale(w.norm());
    let s0 = linalg::orthogonal_complement(&[ab.clone(), ba.clone()], 4);
    let ss = linalg::outer(&s);
    let ww = linalg::outer(&w);
    let identity = linalg::identity(4);

    let operators = |beta: f64| -> Option<(CMatrix, CMatrix)> {
        let r_inv = &identity - &ss + ww.scale(beta / (1.0 - beta));
        let reduced = s0.adjoint() * r_inv * &s0;
        let shorted = reduced.try_inverse()?;
        let e0 = linalg::hermitian_part(&(&s0 * shorted * s0.adjoint()));
        let e1 = &ss + ww.scale(beta);
        Some((e0, e1))
    };
    let value = |beta: f64| -> f64 {
        match operators(beta) {
            Some((e0, e1)) => {
                0.25 * (linalg::expectation(&e0, &aa)
                    + linalg::expectation(&e0, &bb)
                    + linalg::expectation(&e1, &ab)
                    + linalg::expectation(&e1, &ba))
            }
            None => f64::NEG_INFINITY,
        }
    };

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, BETA_MAX);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = value(x1);
    let mut f2 = value(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = value(x1);
        }
    }
    let beta = 0.5 * (lo + hi);
    let target = 1.0 - states.tau;
    let (e0, e1) = operators(beta).ok_or(Error::Convergence {
        best: f64::NAN,
        required: target,
    })?;

    let dim = states.local_dim();
    let lifted0 = states.lift_joint(&e0);
    let lifted1 = states.lift_joint(&e1);
    let rest = linalg::clip_psd(&(linalg::identity(dim * dim) - &lifted0 - &lifted1));
    let povm = Povm::new(
        vec![dim, dim],
        vec![lifted0, lifted1, rest],
        LABELS.iter().map(|l| l.to_string()).collect(),
    )?;
    let strategy = ComparisonStrategy::joint(StrategyKind::Coherent, povm, "coherent-optimal")?;
    let (q_c, _) = super::strategy_stats(&strategy, &states)?;
    if q_c < target - COHERENT_ACCEPT_GAP {
        return Err(Error::Convergence {
            best: q_c,
            required: target,
        });
    }
    Ok((
        strategy,
        CoherentDiagnostics {
            beta,
            q_c,
            target,
            iterations: GOLDEN_ITERATIONS,
        },
    ))
}

fn xor_table(conclusive: usize, total: usize) -> Vec<Vec<Answer>> {
    (0..total)
        .map(|i| {
            (0..total)
                .map(|j| {
                    if i >= conclusive || j >= conclusive {
                        Answer::Inconclusive
                    } else if i == j {
                        Answer::Same
                    } else {
                        Answer::Different
                    }
                })
                .collect()
        })
        .collect()
}

/// Optimal unambiguous measurement on each copy; conclusive only when both
/// are, answering with the XOR of the two identifications.
pub fn separable_product_strategy(psi0: &PureState, psi1: &PureState) -> Result<ComparisonStrategy> {
    let local = discrimination::optimal_unambiguous_povm(psi0, psi1)?;
    let m = FactoredMeasurement::new(local.clone(), local, xor_table(2, 3))?;
    ComparisonStrategy::factored(StrategyKind::SeparableProduct, m, "local-unambiguous-xor")
}

/// Minimum-error guess on each copy, XOR of the guesses. Never inconclusive.
pub fn helstrom_product_strategy(psi0: &PureState, psi1: &PureState) -> Result<ComparisonStrategy> {
    let local = discrimination::helstrom_povm(psi0, psi1)?;
    let m = FactoredMeasurement::new(local.clone(), local, xor_table(2, 2))?;
    ComparisonStrategy::factored(StrategyKind::SeparableProduct, m, "local-helstrom-xor")
}

/// Answers "same" regardless of the state.
pub fn always_same_strategy(local_dim: usize) -> Result<ComparisonStrategy> {
    let d = local_dim * local_dim;
    let povm = Povm::new(
        vec![local_dim, local_dim],
        vec![linalg::identity(d), CMatrix::zeros(d, d), CMatrix::zeros(d, d)],
        LABELS.iter().map(|l| l.to_string()).collect(),
    )?;
    ComparisonStrategy::joint(StrategyKind::Coherent, povm, "blind-same")
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: PayoffReport,
    pub strategy: ComparisonStrategy,
    pub evaluations: usize,
}

const MIN_OUTCOMES: usize = 2;
const MAX_OUTCOMES: usize = 4;
const STEP_INIT: f64 = 0.3;
const STEP_FLOOR: f64 = 1e-5;

/// Generators `G_k` of a local measurement, `E_k ∝ G_k G_k^†` after
/// normalization.
#[derive(Clone)]
struct LocalGenerators(Vec<CMatrix>);

impl LocalGenerators {
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let n = rng.gen_range(MIN_OUTCOMES..=MAX_OUTCOMES);
        LocalGenerators(
            (0..n)
                .map(|_| {
                    let rank = rng.gen_range(1..=2);
                    random::gaussian_matrix(2, rank, rng)
                })
                .collect(),
        )
    }

    fn perturbed<R: Rng + ?Sized>(&self, step: f64, rng: &mut R) -> Self {
        LocalGenerators(
            self.0
                .iter()
                .map(|g| g + random::gaussian_matrix(g.nrows(), g.ncols(), rng).scale(step))
                .collect(),
        )
    }

    fn povm(&self) -> Option<Povm> {
        let parts: Vec<CMatrix> = self.0.iter().map(|g| g * g.adjoint()).collect();
        let povm = random::povm_from_parts(2, &parts).ok()?;
        let labels = (0..parts.len()).map(|k| format!("o{k}")).collect();
        Povm::new(vec![2], povm.elements().to_vec(), labels).ok()
    }
}

/// Best table for fixed local measurements. The payoff is a sum over table
/// cells, so the cellwise argmax is the optimum over all `3^(n1 n2)` tables.
fn best_table(first: &Povm, second: &Povm, states: &ComparisonStates, c: f64) -> (Vec<Vec<Answer>>, f64) {
    let pa: Vec<Vec<f64>> = (0..2)
        .map(|t| first.probabilities_pure(states.psi(t)).expect("local dims"))
        .collect();
    let pb: Vec<Vec<f64>> = (0..2)
        .map(|t| second.probabilities_pure(states.psi(t)).expect("local dims"))
        .collect();
    let mut total = 0.0;
    let table = (0..first.len())
        .map(|i| {
            (0..second.len())
                .map(|j| {
                    let same = 0.25 * (pa[0][i] * pb[0][j] + pa[1][i] * pb[1][j]);
                    let diff = 0.25 * (pa[0][i] * pb[1][j] + pa[1][i] * pb[0][j]);
                    let v_same = same - c * diff;
                    let v_diff = diff - c * same;
                    let (answer, v) = if v_same > 0.0 && v_same >= v_diff {
                        (Answer::Same, v_same)
                    } else if v_diff > 0.0 {
                        (Answer::Different, v_diff)
                    } else {
                        (Answer::Inconclusive, 0.0)
                    };
                    total += v;
                    answer
                })
                .collect()
        })
        .collect();
    (table, total)
}

/// Randomized search over factored strategies on the canonical qubit pair.
/// The first candidate is the local unambiguous measurement on both copies;
/// up to half the budget then samples random local 2-4 outcome
/// measurements, and the rest refines the incumbent one factor at a time. Each candidate gets its
/// optimal answer table.
pub fn separable_search(tau: f64, c: f64, budget: usize, seed: u64) -> Result<SearchOutcome> {
    if budget == 0 {
        return Err(Error::Validation("search budget must be positive".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::OutOfRange {
            value: c,
            range: "c > 0",
        });
    }
    let states = ComparisonStates::canonical(tau)?;
    let mut rng = random::seeded(seed);
    let samples = budget.div_ceil(2);
    let mut evaluations = 0;
    let mut best: Option<(f64, [LocalGenerators; 2])> = None;

    let score = |gens: &[LocalGenerators; 2]| -> Option<f64> {
        let first = gens[0].povm()?;
        let second = gens[1].povm()?;
        Some(best_table(&first, &second, &states, c).1)
    };

    // The local unambiguous measurement on both sides is the first sample.
    let idp = discrimination::optimal_unambiguous_povm(states.psi(0), states.psi(1))?;
    let idp = LocalGenerators(idp.elements().iter().map(linalg::psd_sqrt).collect());
    let start = [idp.clone(), idp];
    evaluations += 1;
    if let Some(v) = score(&start) {
        best = Some((v, start));
    }

    while evaluations < samples {
        let gens = [LocalGenerators::sample(&mut rng), LocalGenerators::sample(&mut rng)];
        evaluations += 1;
        if let Some(v) = score(&gens) {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, gens));
            }
        }
    }

    let mut step = STEP_INIT;
    let mut factor = 0;
    while evaluations < budget {
        let Some((incumbent, gens)) = best.as_ref() else {
            break;
        };
        let mut candidate = gens.clone();
        candidate[factor] = gens[factor].perturbed(step, &mut rng);
        evaluations += 1;
        match score(&candidate) {
            Some(v) if v > *incumbent => {
                best = Some((v, candidate));
                step = (step * 1.5).min(1.0);
            }
            _ => {
                step *= 0.95;
                if step < STEP_FLOOR {
                    step = STEP_INIT;
                }
                factor = 1 - factor;
            }
        }
    }

    let (_, gens) = best.ok_or(Error::Convergence {
        best: f64::NAN,
        required: 0.0,
    })?;
    let first = gens[0].povm().expect("scored before");
    let second = gens[1].povm().expect("scored before");
    let (table, _) = best_table(&first, &second, &states, c);
    let strategy = ComparisonStrategy::factored(
        StrategyKind::SeparableGeneral,
        FactoredMeasurement::new(first, second, table)?,
        "searched",
    )?;
    let report = evaluate_strategy(&strategy, &states, c)?;
    Ok(SearchOutcome {
        best: report,
        strategy,
        evaluations,
    })
}
