#![allow(dead_code)]

use fracp_core::quadrature::{verify_tail_lemmas, ClosedField, TailLemmaConfig, TailLemmaReport};
use fracp_core::{Expr, Integrability};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tail-lemma instance: a closed-form field with integrable growth and nested balls.
pub fn tail_instance(rng: &mut ChaCha8Rng) -> (ClosedField, TailLemmaConfig) {
    let dim = rng.gen_range(1..=2);
    let q = rng.gen_range(1.0..3.0);
    let alpha = rng.gen_range(0.3..2.0);
    let coord =
        |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    // Oscillating fields stay one-dimensional: their slowly decaying 2D tails are too costly.
    let families = if dim == 1 { 4 } else { 3 };
    let expr: Expr = match rng.gen_range(0..families) {
        0 => format!("const:{}", rng.gen_range(-2.0..2.0)),
        1 => {
            let gamma = rng.gen_range(0.05..0.95) * alpha / q;
            let c = coord(rng);
            let centre: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            format!(
                "power:{gamma}:{}:{}",
                rng.gen_range(0.2..2.0),
                centre.join(":")
            )
        }
        2 => {
            let c = coord(rng);
            let centre: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            format!("bump:{}:{}", rng.gen_range(0.2..1.5), centre.join(":"))
        }
        _ => format!("sine:{}", rng.gen_range(0.5..4.0)),
    }
    .parse()
    .unwrap();
    let x1 = coord(rng);
    let big_r = rng.gen_range(0.3..2.0);
    let r = big_r * rng.gen_range(0.05..0.9);
    let sep_max = big_r - r;
    let sep = sep_max * rng.gen_range(0.0..1.0);
    let mut x0 = x1.clone();
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    x0[0] += sep
        * if dim == 1 {
            angle.cos().signum()
        } else {
            angle.cos()
        };
    if dim == 2 {
        x0[1] += sep * angle.sin();
    }
    let m = match rng.gen_range(0..3) {
        0 => None,
        1 => Some(Integrability::Infinite),
        _ => Some(Integrability::Finite(q * rng.gen_range(1.2..3.0))),
    };
    let cfg = TailLemmaConfig {
        q,
        alpha,
        x0,
        x1,
        r,
        big_r,
        m,
        slack: 1e-8,
    };
    (ClosedField::new(expr, dim), cfg)
}

/// Runs `count` seeded instances and returns the reports that fail.
pub fn tail_lemma_failures(count: usize, seed: u64) -> Vec<(TailLemmaConfig, TailLemmaReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for _ in 0..count {
        let (field, cfg) = tail_instance(&mut rng);
        let rep = verify_tail_lemmas(&field, &cfg).unwrap_or_else(|e| panic!("{cfg:?}: {e}"));
        if !rep.pass() {
            failures.push((cfg, rep));
        }
    }
    failures
}
