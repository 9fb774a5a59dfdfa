use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{comparison_states, Answer, ComparisonStrategy, GameConfig, PayoffReport, StrategyBody};
use crate::embedding::RegularEmbedding;
use crate::error::{Error, Result};
use crate::ideal::{self, IdealSession, Party};
use crate::random;

/// Challenge cells `(alpha, beta)`, `0` standing for `x0` and `1` for `x1`.
pub const CELL_ORDER: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// First two positions holding `x0` (`i`, `i2`) and `x1` (`j`, `j2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Positions {
    pub i: usize,
    pub i2: usize,
    pub j: usize,
    pub j2: usize,
}

impl Positions {
    /// Ordered copy pair `(h, h')` realizing a challenge cell.
    pub fn challenge(&self, cell: (usize, usize)) -> (usize, usize) {
        match cell {
            (0, 0) => (self.i, self.i2),
            (0, 1) => (self.i, self.j),
            (1, 0) => (self.j, self.i),
            _ => (self.j, self.j2),
        }
    }
}

pub fn find_positions(xs: &[usize], x0: usize, x1: usize) -> Option<Positions> {
    let mut zeros = xs.iter().enumerate().filter(|(_, &x)| x == x0).map(|(k, _)| k);
    let mut ones = xs.iter().enumerate().filter(|(_, &x)| x == x1).map(|(k, _)| k);
    Some(Positions {
        i: zeros.next()?,
        i2: zeros.next()?,
        j: ones.next()?,
        j2: ones.next()?,
    })
}

#[derive(Clone, Copy, Debug)]
struct Trial {
    cell: Option<usize>,
    answer: Answer,
    score: f64,
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc && w > 0.0 {
            return k;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn run_trial(
    e: &RegularEmbedding,
    cfg: &GameConfig,
    s: &ComparisonStrategy,
    template: Option<&IdealSession>,
    index: u64,
) -> Result<Trial> {
    let mut rng = random::trial_rng(cfg.seed, index);
    if let (StrategyBody::Program(program), Some(template)) = (&s.body, template) {
        let mut session = template.with_generator(rng);
        let xs = (0..cfg.m)
            .map(|k| session.honest_query(Party::Alice, k).map(|r| r.outcome))
            .collect::<Result<Vec<_>>>()?;
        let Some(positions) = find_positions(&xs, cfg.x0, cfg.x1) else {
            return Ok(Trial {
                cell: None,
                answer: Answer::Inconclusive,
                score: 0.0,
            });
        };
        let cell = session.rng().gen_range(0..4);
        let challenge = positions.challenge(CELL_ORDER[cell]);
        let outcome = ideal::run_restricted_adversary(&mut session, program, challenge, cfg.c)?;
        return Ok(Trial {
            cell: Some(cell),
            answer: outcome.answer,
            score: outcome.score,
        });
    }

    let p_x = e.primitive().p_x();
    let xs: Vec<usize> = (0..cfg.m).map(|_| sample_index(&p_x, &mut rng)).collect();
    let Some(positions) = find_positions(&xs, cfg.x0, cfg.x1) else {
        return Ok(Trial {
            cell: None,
            answer: Answer::Inconclusive,
            score: 0.0,
        });
    };
    let cell = rng.gen_range(0..4);
    let (h, h2) = positions.challenge(CELL_ORDER[cell]);
    let dist = s.answer_distribution(e.bob_state(xs[h]), e.bob_state(xs[h2]))?;
    let answer = Answer::ALL[sample_index(&dist, &mut rng)];
    Ok(Trial {
        cell: Some(cell),
        answer,
        score: answer.score(xs[h] == xs[h2], cfg.c),
    })
}

/// Monte Carlo run of the full challenge protocol. Trial `i` draws from
/// [`random::trial_rng`]`(seed, i)` and results are reduced in index order, so
/// the report does not depend on the thread count.
pub fn simulate_protocol(
    e: &RegularEmbedding,
    cfg: &GameConfig,
    s: &ComparisonStrategy,
) -> Result<PayoffReport> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(Error::Validation("trials must be positive".into()));
    }
    let states = comparison_states(e, cfg.x0, cfg.x1)?;
    if (states.tau - cfg.tau).abs() > 1e-6 {
        return Err(Error::Inconsistent(format!(
            "configured tau {} but the pair has overlap {}",
            cfg.tau, states.tau
        )));
    }
    super::strategy_stats(s, &states)?;
    let template = match &s.body {
        StrategyBody::Program(_) => Some(IdealSession::with_rng(e, cfg.m, random::seeded(cfg.seed))?),
        _ => None,
    };

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(e, cfg, s, template.as_ref(), i))
        .collect::<Result<_>>()?;

    let n = trials.len() as f64;
    let mut sum = 0.0;
    let mut aborted = 0u64;
    let mut conclusive = 0u64;
    let mut wrong = 0u64;
    let mut cells = [0u64; 4];
    for t in &trials {
        sum += t.score;
        match t.cell {
            None => aborted += 1,
            Some(cell) => cells[cell] += 1,
        }
        if t.answer != Answer::Inconclusive {
            conclusive += 1;
            if t.score < 0.0 {
                wrong += 1;
            }
        }
    }
    let mean = sum / n;
    let var = if trials.len() > 1 {
        trials.iter().map(|t| (t.score - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(PayoffReport {
        q_c: conclusive as f64 / n,
        q_err: wrong as f64 / n,
        payoff: mean,
        abort_prob: aborted as f64 / n,
        stderr: (var / n).sqrt(),
        trials: cfg.trials,
        factors: None,
        cell_counts: Some(cells),
    })
}

/// One line of a game results table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameRow {
    pub tau: f64,
    pub c: f64,
    pub strategy_kind: String,
    pub report: PayoffReport,
    pub seed: u64,
}

pub fn game_csv_header() -> &'static str {
    "tau,c,strategy_kind,q_c,q_err,payoff,abort_prob,stderr,trials,seed,version"
}

/// CSV with a header line. Floats use Rust's shortest round-trip formatting.
pub fn game_csv(rows: &[GameRow]) -> String {
    let mut out = String::from(game_csv_header());
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.tau,
            r.c,
            r.strategy_kind,
            r.report.q_c,
            r.report.q_err,
            r.report.payoff,
            r.report.abort_prob,
            r.report.stderr,
            r.report.trials,
            r.seed,
            env!("CARGO_PKG_VERSION"),
        ));
    }
    out
}
