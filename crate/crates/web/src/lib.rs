//! wasm-bindgen exports for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors come back as `{"error": ...}`.

use embedgame::classical::{dependent_part, entropy_report, is_trivial_primitive, Primitive};
use embedgame::discrimination::bound_table;
use embedgame::embedding::{build_regular_embedding, classify_embedding, find_comparison_pair};
use embedgame::game::{
    coherent_optimal_comparison, evaluate_strategy, gap_certificate, separable_product_strategy,
    ComparisonStates,
};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn render<T: Serialize>(r: embedgame::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Error/conclusive frontier for one overlap.
#[wasm_bindgen]
pub fn bounds_curve(tau: f64, steps: usize) -> String {
    render(bound_table(&[tau], steps))
}

#[derive(Serialize)]
struct ScanPoint {
    tau: f64,
    coherent: f64,
    product: f64,
    gap: f64,
    f_tau: f64,
}

fn scan(c: f64, points: usize) -> embedgame::Result<Vec<ScanPoint>> {
    let points = points.clamp(2, 200);
    let (lo, hi) = embedgame::game::TAU_DOMAIN;
    (0..points)
        .map(|i| {
            let tau = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let st = ComparisonStates::canonical(tau)?;
            let coherent = coherent_optimal_comparison(st.psi(0), st.psi(1))?;
            let product = separable_product_strategy(st.psi(0), st.psi(1))?;
            let a = evaluate_strategy(&coherent, &st, c)?.payoff;
            let b = evaluate_strategy(&product, &st, c)?.payoff;
            Ok(ScanPoint {
                tau,
                coherent: a,
                product: b,
                gap: a - b,
                f_tau: gap_certificate(tau)?.f_tau,
            })
        })
        .collect()
}

/// Coherent and product payoffs across the overlap domain at penalty `c`.
#[wasm_bindgen]
pub fn payoff_scan(c: f64, points: usize) -> String {
    if !(c > 0.0 && c.is_finite()) {
        return json!({ "error": "c must be positive" }).to_string();
    }
    render(scan(c, points))
}

fn analyze(text: &str) -> embedgame::Result<serde_json::Value> {
    let p = Primitive::from_json_str(text)?;
    let trivial = is_trivial_primitive(&p)?;
    let mut out = json!({
        "entropies": entropy_report(&p),
        "classes_x": dependent_part(&p).class_count(),
        "classes_y": dependent_part(&p.transposed()).class_count(),
        "trivial": trivial,
    });
    if p.p_x().iter().all(|&w| w > 0.0) {
        let e = build_regular_embedding(&p)?;
        out["embedding"] = json!(classify_embedding(&e)?);
        out["comparison_pair"] = json!(find_comparison_pair(&e).ok());
    }
    Ok(out)
}

/// Entropies, triviality and embedding verdict for a primitive given as JSON.
#[wasm_bindgen]
pub fn analyze_primitive(text: &str) -> String {
    render(analyze(text))
}
