use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accepted `tau` range; `k` diverges at both ends.
pub const TAU_DOMAIN: (f64, f64) = (0.01, 0.99);
pub const B2_GRID_POINTS: usize = 256;
/// Slack on every `<=` comparison of the certificate.
pub const CERT_SLACK: f64 = 1e-12;
/// The `c` schedule is `c_0 2^t` for `t = 0..=C_SCHEDULE_STEPS`.
pub const C_SCHEDULE_STEPS: u32 = 20;

/// `2f + 4 sqrt(q (1 - tau)) <= 1/k <= (tau (1 - tau) - f) / 2`, evaluated at
/// both ends of the `q` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub lhs_at_q_min: f64,
    pub lhs_at_q_max: f64,
    pub inv_k: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Case analysis redone with the largest error ceiling for which the chain
/// holds, `q* = tau^2 (1 - tau) / 256`. Errors above `q*` cost at least
/// `(c + 1) q*`, so case 3 needs `c >= 1/q* - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairedCheck {
    pub q_ceiling: f64,
    pub c_required: f64,
    pub c_star: f64,
    pub b2_max: f64,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub tau: f64,
    pub k: f64,
    pub f_tau: f64,
    pub c_star: f64,
    pub p_max: f64,
    /// `p_max - f_tau`.
    pub threshold: f64,
    pub b0: f64,
    pub b1: f64,
    /// `(q, B2(q))` on the grid for `c_star`.
    pub b2: Vec<(f64, f64)>,
    pub b2_max: f64,
    pub chain: ChainCheck,
    pub verified: bool,
    pub repaired: RepairedCheck,
}

fn schedule(tau: f64) -> impl Iterator<Item = f64> {
    let c0 = f64::max(10.0, 257.0 * (1.0 - tau));
    (0..=C_SCHEDULE_STEPS).map(move |t| c0 * 2f64.powi(t as i32))
}

/// `B2(q) = 1 - tau + 2 sqrt(q (1 - tau)) - 1/(2k)` on `B2_GRID_POINTS` evenly
/// spaced points of `(q_lo, q_hi]`.
fn b2_grid(tau: f64, k: f64, q_lo: f64, q_hi: f64) -> Vec<(f64, f64)> {
    (1..=B2_GRID_POINTS)
        .map(|i| {
            let q = q_lo + (q_hi - q_lo) * i as f64 / B2_GRID_POINTS as f64;
            (q, 1.0 - tau + 2.0 * (q * (1.0 - tau)).sqrt() - 0.5 / k)
        })
        .collect()
}

fn grid_max(grid: &[(f64, f64)]) -> f64 {
    grid.iter().map(|&(_, b)| b).fold(f64::NEG_INFINITY, f64::max)
}

/// Closed-form bounds on the best separable payoff, checked against
/// `p_max - f` for each `c` of the schedule. The first verifying `c` is
/// reported; when none verifies the certificate carries the first schedule
/// value with `verified = false`.
pub fn gap_certificate(tau: f64) -> Result<GapCertificate> {
    if !(TAU_DOMAIN.0..=TAU_DOMAIN.1).contains(&tau) {
        return Err(Error::OutOfRange {
            value: tau,
            range: "tau in [0.01, 0.99]",
        });
    }
    let k = 20.0 / (9.0 * tau * (1.0 - tau));
    let f_tau = tau * (1.0 - tau) / 10.0;
    let p_max = 1.0 - tau;
    let threshold = p_max - f_tau;
    let b0 = 1.0 - tau - 0.5 / k;
    let b1 = (1.0 - tau).powi(2) + 2.0 / k;
    let q_hi = 1.0 / (256.0 * (1.0 - tau));

    let evaluate = |c: f64| {
        let q_lo = 1.0 / (2.0 * k * (c + 1.0));
        let grid = b2_grid(tau, k, q_lo, q_hi);
        let b2_max = grid_max(&grid);
        let lhs = |q: f64| 2.0 * f_tau + 4.0 * (q * (1.0 - tau)).sqrt();
        let (q_first, q_last) = (grid[0].0, grid[grid.len() - 1].0);
        let rhs = (tau * (1.0 - tau) - f_tau) / 2.0;
        let chain = ChainCheck {
            lhs_at_q_min: lhs(q_first),
            lhs_at_q_max: lhs(q_last),
            inv_k: 1.0 / k,
            rhs,
            holds: lhs(q_first) <= 1.0 / k + CERT_SLACK
                && lhs(q_last) <= 1.0 / k + CERT_SLACK
                && 1.0 / k <= rhs + CERT_SLACK,
        };
        let verified = b0 <= threshold + CERT_SLACK
            && b1 <= threshold + CERT_SLACK
            && b2_max <= threshold + CERT_SLACK;
        (grid, b2_max, chain, verified)
    };

    let mut chosen = None;
    for c in schedule(tau) {
        let result = evaluate(c);
        if result.3 {
            chosen = Some((c, result));
            break;
        }
    }
    let (c_star, (b2, b2_max, chain, verified)) = match chosen {
        Some(found) => found,
        None => {
            let c0 = schedule(tau).next().expect("non-empty schedule");
            (c0, evaluate(c0))
        }
    };

    let q_star = tau * tau * (1.0 - tau) / 256.0;
    let c_required = 1.0 / q_star - 1.0;
    let repaired_c = schedule(tau)
        .find(|&c| c >= c_required)
        .unwrap_or(f64::INFINITY);
    let repaired_grid = b2_grid(tau, k, 1.0 / (2.0 * k * (repaired_c + 1.0)), q_star);
    let repaired_b2 = grid_max(&repaired_grid);
    let repaired = RepairedCheck {
        q_ceiling: q_star,
        c_required,
        c_star: repaired_c,
        b2_max: repaired_b2,
        verified: repaired_c.is_finite()
            && b0 <= threshold + CERT_SLACK
            && b1 <= threshold + CERT_SLACK
            && repaired_b2 <= threshold + CERT_SLACK,
    };

    Ok(GapCertificate {
        tau,
        k,
        f_tau,
        c_star,
        p_max,
        threshold,
        b0,
        b1,
        b2,
        b2_max,
        chain,
        verified,
        repaired,
    })
}

/// Turns an unverified certificate into [`Error::CertificateFailure`].
pub fn require_verified(cert: GapCertificate) -> Result<GapCertificate> {
    if cert.verified {
        Ok(cert)
    } else {
        Err(Error::CertificateFailure)
    }
}
