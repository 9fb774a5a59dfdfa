//! Per-copy ideal functionality: each copy of the embedding is a residual
//! joint state, and parties touch it only through measurements on their own
//! register of a single copy. Later queries refine earlier ones by acting on
//! the residual.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discrimination;
use crate::embedding::RegularEmbedding;
use crate::error::{Error, Result};
use crate::game::{Answer, ComparisonStates};
use crate::quantum::{self, DensityOp, Povm, PureState};
use crate::random;

/// Deepest query path a program may have.
pub const MAX_DEPTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    fn position(self) -> usize {
        match self {
            Party::Alice => 0,
            Party::Bob => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub party: Party,
    pub copy: usize,
    pub povm_id: String,
    pub outcome: usize,
    pub outcome_label: String,
    pub probability: f64,
}

#[derive(Clone, Debug)]
pub struct IdealSession {
    dims: [usize; 2],
    copies: Vec<DensityOp>,
    log: Vec<QueryRecord>,
    honest: Vec<[bool; 2]>,
    /// Honest basis measurements of Alice and Bob, lifted to the joint space.
    honest_povms: Arc<[Povm; 2]>,
    rng: ChaCha8Rng,
}

#[derive(Serialize)]
struct Transcript<'a> {
    copies: usize,
    query_log: &'a [QueryRecord],
}

/// `m` copies of the embedding's joint state, outcomes drawn from `seed`.
pub fn new_session(e: &RegularEmbedding, m: usize, seed: u64) -> Result<IdealSession> {
    IdealSession::with_rng(e, m, random::seeded(seed))
}

impl IdealSession {
    pub fn with_rng(e: &RegularEmbedding, m: usize, rng: ChaCha8Rng) -> Result<IdealSession> {
        if m == 0 {
            return Err(Error::Validation("a session needs at least one copy".into()));
        }
        let rho = e.joint_state().projector();
        let dims = [e.alice_dim(), e.bob_dim()];
        let honest_povm = |party: Party, alphabet: &[String]| -> Result<Povm> {
            let dim = dims[party.position()];
            let basis = Povm::computational_basis(dim)?;
            Povm::new(vec![dim], basis.elements().to_vec(), alphabet.to_vec())?
                .embed(&dims, party.position())
        };
        let honest_povms = Arc::new([
            honest_povm(Party::Alice, e.primitive().x_alphabet())?,
            honest_povm(Party::Bob, e.primitive().y_alphabet())?,
        ]);
        Ok(IdealSession {
            dims,
            copies: vec![rho; m],
            log: Vec::new(),
            honest: vec![[false; 2]; m],
            honest_povms,
            rng,
        })
    }

    /// Copy of this session with a different generator. Used to stamp out
    /// fresh sessions from an unqueried template.
    pub(crate) fn with_generator(&self, rng: ChaCha8Rng) -> IdealSession {
        IdealSession {
            rng,
            ..self.clone()
        }
    }

    pub fn copies(&self) -> usize {
        self.copies.len()
    }

    pub fn residual(&self, copy: usize) -> Option<&DensityOp> {
        self.copies.get(copy)
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    /// Whether `party` has made the honest measurement on `copy`.
    pub fn is_honest(&self, party: Party, copy: usize) -> bool {
        self.honest
            .get(copy)
            .is_some_and(|flags| flags[party.position()])
    }

    pub fn register_dim(&self, party: Party) -> usize {
        self.dims[party.position()]
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn check_copy(&self, copy: usize) -> Result<()> {
        if copy >= self.copies.len() {
            return Err(Error::Validation(format!(
                "copy {copy} out of range for {} copies",
                self.copies.len()
            )));
        }
        Ok(())
    }

    fn apply(&mut self, party: Party, copy: usize, povm: &Povm, id: &str) -> Result<QueryRecord> {
        let lifted = povm.embed(&self.dims, party.position())?;
        self.apply_lifted(party, copy, &lifted, id)
    }

    fn apply_lifted(&mut self, party: Party, copy: usize, lifted: &Povm, id: &str) -> Result<QueryRecord> {
        let rec = quantum::measure(&self.copies[copy], lifted, &mut self.rng)?;
        self.copies[copy] = rec.residual;
        let record = QueryRecord {
            party,
            copy,
            povm_id: id.to_string(),
            outcome: rec.outcome,
            outcome_label: rec.outcome_label,
            probability: rec.probability,
        };
        self.log.push(record.clone());
        Ok(record)
    }

    /// Computational-basis measurement of `party`'s register, labelled with
    /// the primitive's alphabet.
    pub fn honest_query(&mut self, party: Party, copy: usize) -> Result<QueryRecord> {
        self.check_copy(copy)?;
        let povms = Arc::clone(&self.honest_povms);
        let record = self.apply_lifted(party, copy, &povms[party.position()], "honest")?;
        self.honest[copy][party.position()] = true;
        Ok(record)
    }

    /// Applies `povm` to `party`'s register of one copy.
    pub fn query(&mut self, party: Party, copy: usize, povm: &Povm, id: &str) -> Result<QueryRecord> {
        self.query_registers(&[(party, copy)], povm, id)
    }

    /// Entry point for measurements on a set of registers. Only a single
    /// register of a single copy is accepted.
    pub fn query_registers(
        &mut self,
        targets: &[(Party, usize)],
        povm: &Povm,
        id: &str,
    ) -> Result<QueryRecord> {
        for &(_, copy) in targets {
            self.check_copy(copy)?;
        }
        let (party, copy) = match targets {
            [single] => *single,
            [] => return Err(Error::Validation("no register targeted".into())),
            _ => {
                return Err(Error::LocalityViolation(format!(
                    "measurement spans {} registers",
                    targets.len()
                )))
            }
        };
        let reg = self.register_dim(party);
        if povm.dims().len() != 1 {
            return Err(Error::LocalityViolation(format!(
                "operator acts on {} subsystems",
                povm.dims().len()
            )));
        }
        if povm.dim() != reg {
            let joint = self.dims[0] * self.dims[1];
            if povm.dim() == joint || povm.dim() == reg * reg {
                return Err(Error::LocalityViolation(format!(
                    "operator of dimension {} is not local to one register",
                    povm.dim()
                )));
            }
            return Err(Error::DimensionMismatch {
                expected: reg,
                got: povm.dim(),
            });
        }
        self.apply(party, copy, povm, id)
    }

    /// Query log as JSON.
    pub fn transcript_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Transcript {
            copies: self.copies.len(),
            query_log: &self.log,
        })?)
    }
}

/// Which challenged copy a query targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    First,
    Second,
}

#[derive(Clone, Debug)]
pub enum ProgramNode {
    Leaf(Answer),
    /// One child per outcome of `povm`.
    Query {
        slot: Slot,
        povm: Povm,
        children: Vec<ProgramNode>,
    },
}

impl ProgramNode {
    fn depth(&self) -> usize {
        match self {
            ProgramNode::Leaf(_) => 0,
            ProgramNode::Query { children, .. } => {
                1 + children.iter().map(ProgramNode::depth).max().unwrap_or(0)
            }
        }
    }

    fn collect_dims(&self, out: &mut Vec<Vec<usize>>) {
        if let ProgramNode::Query { povm, children, .. } = self {
            out.push(povm.dims().to_vec());
            for ch in children {
                ch.collect_dims(out);
            }
        }
    }

    fn check_shape(&self) -> Result<()> {
        if let ProgramNode::Query { povm, children, .. } = self {
            if children.len() != povm.len() {
                return Err(Error::Validation(format!(
                    "query with {} outcomes has {} children",
                    povm.len(),
                    children.len()
                )));
            }
            for ch in children {
                ch.check_shape()?;
            }
        }
        Ok(())
    }
}

/// Adaptive decision tree of Bob-side queries on the two challenged copies.
#[derive(Clone, Debug)]
pub struct QueryProgram {
    root: ProgramNode,
}

impl QueryProgram {
    pub fn new(root: ProgramNode) -> Result<QueryProgram> {
        if root.depth() > MAX_DEPTH {
            return Err(Error::DepthLimit { limit: MAX_DEPTH });
        }
        root.check_shape()?;
        let mut dims = Vec::new();
        root.collect_dims(&mut dims);
        if dims.iter().any(|d| d.len() != 1) {
            return Err(Error::LocalityViolation(
                "program queries must act on one register".into(),
            ));
        }
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Validation("program queries disagree on dimension".into()));
        }
        Ok(QueryProgram { root })
    }

    /// Program that answers without looking.
    pub fn constant(answer: Answer) -> QueryProgram {
        QueryProgram {
            root: ProgramNode::Leaf(answer),
        }
    }

    pub fn root(&self) -> &ProgramNode {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Register dimension the queries act on; `None` for a constant program.
    pub fn local_dim(&self) -> Option<usize> {
        let mut dims = Vec::new();
        self.root.collect_dims(&mut dims);
        dims.first().map(|d| d[0])
    }

    /// Answer probabilities when the challenged copies hold `a` and `b`.
    pub fn answer_distribution(&self, a: &PureState, b: &PureState) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        walk(&self.root, [a.projector(), b.projector()], 1.0, &mut out)?;
        Ok(out)
    }
}

const BRANCH_FLOOR: f64 = 1e-15;

fn walk(node: &ProgramNode, states: [DensityOp; 2], weight: f64, out: &mut [f64; 3]) -> Result<()> {
    match node {
        ProgramNode::Leaf(answer) => {
            let k = Answer::ALL.iter().position(|a| a == answer).expect("listed");
            out[k] += weight;
        }
        ProgramNode::Query {
            slot,
            povm,
            children,
        } => {
            let target = match slot {
                Slot::First => 0,
                Slot::Second => 1,
            };
            let probs = povm.probabilities(&states[target])?;
            for (k, child) in children.iter().enumerate() {
                if probs[k] * weight <= BRANCH_FLOOR {
                    continue;
                }
                let mut next = states.clone();
                next[target] = quantum::luders_update(&states[target], &povm.elements()[k])?;
                walk(child, next, weight * probs[k], out)?;
            }
        }
    }
    Ok(())
}

/// Result of one restricted-adversary run on a session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryOutcome {
    pub answer: Answer,
    pub same: bool,
    pub score: f64,
}

/// Runs `program` on Bob's registers of the challenged copies `(h, h')` and
/// scores the answer against Alice's honest outcomes on those copies.
pub fn run_restricted_adversary(
    sess: &mut IdealSession,
    program: &QueryProgram,
    challenge: (usize, usize),
    c: f64,
) -> Result<AdversaryOutcome> {
    if program.depth() > MAX_DEPTH {
        return Err(Error::DepthLimit { limit: MAX_DEPTH });
    }
    let (h, h2) = challenge;
    if h == h2 {
        return Err(Error::Validation("challenged copies must differ".into()));
    }
    let x_at = |copy: usize| {
        sess.log
            .iter()
            .find(|r| r.party == Party::Alice && r.copy == copy && r.povm_id == "honest")
            .map(|r| r.outcome)
            .ok_or_else(|| Error::Validation(format!("Alice has not measured copy {copy}")))
    };
    let same = x_at(h)? == x_at(h2)?;
    let mut node = &program.root;
    let mut step = 0;
    let answer = loop {
        match node {
            ProgramNode::Leaf(answer) => break *answer,
            ProgramNode::Query {
                slot,
                povm,
                children,
            } => {
                let copy = match slot {
                    Slot::First => h,
                    Slot::Second => h2,
                };
                let record = sess.query(Party::Bob, copy, povm, &format!("program-step-{step}"))?;
                node = &children[record.outcome];
                step += 1;
            }
        }
    };
    Ok(AdversaryOutcome {
        answer,
        same,
        score: answer.score(same, c),
    })
}

/// Label maximizing the expected score of a leaf reached with probability
/// `same` on equal pairs and `diff` on unequal ones (each weighted ¼ per
/// cell).
fn best_label(same: f64, diff: f64, c: f64) -> Answer {
    let v_same = same - c * diff;
    let v_diff = diff - c * same;
    if v_same > 0.0 && v_same >= v_diff {
        Answer::Same
    } else if v_diff > 0.0 {
        Answer::Different
    } else {
        Answer::Inconclusive
    }
}

/// Measurement for one step of a random program: a random 2-3 outcome POVM,
/// the local unambiguous measurement, or a blend of the two.
fn program_step_povm<R: Rng + ?Sized>(states: &ComparisonStates, rng: &mut R) -> Result<Povm> {
    let d = states.local_dim();
    let noise = random::random_povm(d, rng.gen_range(2..=3), rng);
    let choice = rng.gen_range(0..3);
    if choice == 0 {
        return Ok(noise);
    }
    let idp = discrimination::optimal_unambiguous_povm(states.psi(0), states.psi(1))?;
    if choice == 1 {
        return Ok(idp);
    }
    let eps = rng.gen_range(0.0..0.3);
    let elements = idp
        .elements()
        .iter()
        .map(|e| e.scale(1.0 - eps))
        .chain(noise.elements().iter().map(|e| e.scale(eps)))
        .collect();
    Povm::unlabeled(vec![d], elements)
}

/// Random two-step adaptive program: a measurement on one challenged copy,
/// then for each outcome an independently chosen measurement on the other
/// copy (see [`program_step_povm`]). Leaves get the score-maximizing answer
/// for penalty `c`.
pub fn random_adaptive_program<R: Rng + ?Sized>(
    states: &ComparisonStates,
    c: f64,
    rng: &mut R,
) -> Result<QueryProgram> {
    let (first_slot, second_slot, first_idx) = if rng.gen_bool(0.5) {
        (Slot::First, Slot::Second, 0)
    } else {
        (Slot::Second, Slot::First, 1)
    };
    let first = program_step_povm(states, rng)?;
    let mut children = Vec::with_capacity(first.len());
    for k in 0..first.len() {
        let second = program_step_povm(states, rng)?;
        let mut leaves = Vec::with_capacity(second.len());
        for l in 0..second.len() {
            let mut same = 0.0;
            let mut diff = 0.0;
            for (alpha, beta) in crate::game::CELL_ORDER {
                let (s_first, s_second) = if first_idx == 0 {
                    (states.psi(alpha), states.psi(beta))
                } else {
                    (states.psi(beta), states.psi(alpha))
                };
                let p = 0.25
                    * first.probabilities_pure(s_first)?[k]
                    * second.probabilities_pure(s_second)?[l];
                if alpha == beta {
                    same += p;
                } else {
                    diff += p;
                }
            }
            leaves.push(ProgramNode::Leaf(best_label(same, diff, c)));
        }
        children.push(ProgramNode::Query {
            slot: second_slot,
            povm: second,
            children: leaves,
        });
    }
    QueryProgram::new(ProgramNode::Query {
        slot: first_slot,
        povm: first,
        children,
    })
}

/// Independent local measurements on both copies followed by a lookup
/// table, written as a depth-2 program.
pub fn product_program(first: &Povm, second: &Povm, table: &[Vec<Answer>]) -> Result<QueryProgram> {
    let children = (0..first.len())
        .map(|i| ProgramNode::Query {
            slot: Slot::Second,
            povm: second.clone(),
            children: (0..second.len())
                .map(|j| ProgramNode::Leaf(table[i][j]))
                .collect(),
        })
        .collect();
    QueryProgram::new(ProgramNode::Query {
        slot: Slot::First,
        povm: first.clone(),
        children,
    })
}
