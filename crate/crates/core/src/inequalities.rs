//! Pointwise algebraic inequalities for `J_p` and their constants.
//!
//! Every inequality is normalised to `lhs >= rhs`; a sample passes when
//! `lhs >= rhs - 1e-12 max(1, |lhs|)`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{abs_pow, jp, signed_pow};

/// Relative slack of the pass rule.
pub const PASS_SLACK: f64 = 1e-12;

/// The registered inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityId {
    /// `|A-B|^{q-2}(J_p(A)-J_p(B))(A-B) >= (p-1)(q/(p-2+q))^q ||A|^{(p-2)/q}A - |B|^{(p-2)/q}B|^q`.
    Monotone,
    /// `(2(p-1)/p)(|A|^{(p-2)/2}+|B|^{(p-2)/2}) ||A|^{(p-2)/2}A - |B|^{(p-2)/2}B| >= |J_p(A)-J_p(B)|`.
    Lipschitz,
    /// `||A|^{γ-1}A - |B|^{γ-1}B| >= |A-B|^γ / C`.
    Holder,
    /// `(J_p(A)-J_p(B))(A-B) >= |A-B|^p / C`.
    Coercive,
    /// `(J_p(a-c)-J_p(b-d))(J_{γ+1}(a-b)-J_{γ+1}(c-d)) >= ||a-b|^{(γ-1)/p}(a-b) - |c-d|^{(γ-1)/p}(c-d)|^p / C`.
    MixedCoercive,
    /// `(J_p(a-b)-J_p(c-d))(J_{γ+1}(a-c)-J_{γ+1}(b-d))
    ///  >= (2(p-1)/p²) ||a-b|^{(p-2)/2}(a-b) - |c-d|^{(p-2)/2}(c-d)|² (|a-c|^{γ-1}+|b-d|^{γ-1})`.
    MixedProduct,
}

impl InequalityId {
    pub const ALL: [InequalityId; 6] = [
        InequalityId::Monotone,
        InequalityId::Lipschitz,
        InequalityId::Holder,
        InequalityId::Coercive,
        InequalityId::MixedCoercive,
        InequalityId::MixedProduct,
    ];

    pub fn arity(self) -> usize {
        match self {
            InequalityId::MixedCoercive | InequalityId::MixedProduct => 4,
            _ => 2,
        }
    }

    /// Whether the inequality carries a second exponent (`q` or `γ`).
    pub fn has_second_exponent(self) -> bool {
        !matches!(self, InequalityId::Lipschitz | InequalityId::Coercive)
    }

    /// Whether the constant must be supplied (or brute-forced).
    pub fn needs_constant(self) -> bool {
        matches!(
            self,
            InequalityId::Holder | InequalityId::Coercive | InequalityId::MixedCoercive
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            InequalityId::Monotone => "monotone",
            InequalityId::Lipschitz => "lipschitz",
            InequalityId::Holder => "holder",
            InequalityId::Coercive => "coercive",
            InequalityId::MixedCoercive => "mixed-coercive",
            InequalityId::MixedProduct => "mixed-product",
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        InequalityId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| invalid(format!("unknown inequality `{s}`")))
    }
}

/// Exponents of one inequality instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    /// `q` for the monotone form, `γ` for the Hölder and mixed forms; ignored otherwise.
    pub second: f64,
}

impl Exponents {
    pub fn new(id: InequalityId, p: f64, second: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(invalid(format!("p must be >= 2, got {p}")));
        }
        if id.has_second_exponent() && !(second >= 1.0 && second.is_finite()) {
            return Err(invalid(format!(
                "second exponent must be >= 1, got {second}"
            )));
        }
        Ok(Exponents { p, second })
    }
}

/// Both sides of an inequality at one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// The two sides with the constant set to one: `(bound side, other side)` such that the
/// inequality reads `bound >= other / C` (or `bound >= K other` for explicit `K = 1/C`).
fn sides(id: InequalityId, e: Exponents, x: &[f64]) -> (f64, f64) {
    let p = e.p;
    match id {
        InequalityId::Monotone => {
            let (a, b) = (x[0], x[1]);
            let q = e.second;
            let lhs = abs_pow(a - b, q - 2.0) * (jp(a, p) - jp(b, p)) * (a - b);
            let lhs = if a == b { 0.0 } else { lhs };
            let core = abs_pow(
                signed_pow(a, (p - 2.0) / q) - signed_pow(b, (p - 2.0) / q),
                q,
            );
            (lhs, core)
        }
        InequalityId::Lipschitz => {
            let (a, b) = (x[0], x[1]);
            let h = (p - 2.0) / 2.0;
            let bound =
                (abs_pow(a, h) + abs_pow(b, h)) * (signed_pow(a, h) - signed_pow(b, h)).abs();
            (bound, (jp(a, p) - jp(b, p)).abs())
        }
        InequalityId::Holder => {
            let (a, b) = (x[0], x[1]);
            let g = e.second;
            (
                (signed_pow(a, g - 1.0) - signed_pow(b, g - 1.0)).abs(),
                abs_pow(a - b, g),
            )
        }
        InequalityId::Coercive => {
            let (a, b) = (x[0], x[1]);
            ((jp(a, p) - jp(b, p)) * (a - b), abs_pow(a - b, p))
        }
        InequalityId::MixedCoercive => {
            let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
            let g = e.second;
            let lhs = (jp(a - c, p) - jp(b - d, p)) * (jp(a - b, g + 1.0) - jp(c - d, g + 1.0));
            let core = abs_pow(
                signed_pow(a - b, (g - 1.0) / p) - signed_pow(c - d, (g - 1.0) / p),
                p,
            );
            (lhs, core)
        }
        InequalityId::MixedProduct => {
            let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
            let g = e.second;
            let h = (p - 2.0) / 2.0;
            let lhs = (jp(a - b, p) - jp(c - d, p)) * (jp(a - c, g + 1.0) - jp(b - d, g + 1.0));
            let core = (signed_pow(a - b, h) - signed_pow(c - d, h)).powi(2)
                * (abs_pow(a - c, g - 1.0) + abs_pow(b - d, g - 1.0));
            (lhs, core)
        }
    }
}

/// Explicit multiplier `K` in `bound >= K · other`, where the inequality provides one.
pub fn explicit_multiplier(id: InequalityId, e: Exponents) -> Option<f64> {
    let p = e.p;
    match id {
        InequalityId::Monotone => {
            let q = e.second;
            Some((p - 1.0) * (q / (p - 2.0 + q)).powf(q))
        }
        InequalityId::Lipschitz => Some(p / (2.0 * (p - 1.0))),
        InequalityId::MixedProduct => Some(2.0 * (p - 1.0) / (p * p)),
        _ => None,
    }
}

fn multiplier(id: InequalityId, e: Exponents, constant: Option<f64>) -> Result<f64> {
    match (constant, explicit_multiplier(id, e)) {
        (Some(c), _) => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid(format!("constant must be positive, got {c}")));
            }
            Ok(1.0 / c)
        }
        (None, Some(k)) => Ok(k),
        (None, None) => Err(invalid(format!("inequality `{id}` needs a constant C"))),
    }
}

fn check_tuple(id: InequalityId, x: &[f64]) -> Result<()> {
    if x.len() != id.arity() {
        return Err(invalid(format!(
            "`{id}` takes {} reals, got {}",
            id.arity(),
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("tuple contains non-finite values"));
    }
    Ok(())
}

fn outcome(lhs: f64, rhs: f64) -> Outcome {
    Outcome {
        lhs,
        rhs,
        pass: lhs >= rhs - PASS_SLACK * lhs.abs().max(1.0),
    }
}

/// Evaluates one inequality at a tuple.
///
/// `constant` overrides the built-in constant; it is required for the Hölder, coercive
/// and mixed-coercive forms. For the explicit forms a supplied `C` replaces `1/K`.
pub fn check(id: InequalityId, e: Exponents, x: &[f64], constant: Option<f64>) -> Result<Outcome> {
    check_tuple(id, x)?;
    let k = multiplier(id, e, constant)?;
    let (bound, other) = sides(id, e, x);
    Ok(match id {
        // The Lipschitz form bounds the increment of J_p from above.
        InequalityId::Lipschitz => outcome(bound, other * k),
        _ => outcome(bound, k * other),
    })
}

/// `other / bound` at a tuple; the inequality holds with constant `C` exactly when this is `<= C`.
pub fn constant_ratio(id: InequalityId, e: Exponents, x: &[f64]) -> Result<Option<f64>> {
    check_tuple(id, x)?;
    let (bound, other) = sides(id, e, x);
    if bound == 0.0 {
        if other == 0.0 {
            return Ok(None);
        }
        return Err(Error::Degenerate(format!(
            "`{id}` has a vanishing bound side with non-zero other side at {x:?}"
        )));
    }
    Ok(Some(other / bound))
}

const CHUNK: usize = 4096;

/// Ratio at a padded tuple.
type Scored = (f64, [f64; 4]);

fn sample_tuple(rng: &mut ChaCha8Rng, arity: usize, out: &mut [f64]) {
    for v in out.iter_mut().take(arity) {
        *v = rng.gen_range(-10.0..10.0);
    }
    // Exercise coincidences that uniform draws never hit.
    match rng.gen_range(0..40) {
        0 => out[1] = out[0],
        1 => out[1] = -out[0],
        2 => out[0] = 0.0,
        3 if arity == 4 => out[3] = out[2] + out[0] - out[1],
        4 if arity == 4 => out[2] = out[0],
        _ => {}
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Result of a randomized verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: InequalityId,
    pub p: f64,
    pub second: f64,
    pub constant: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub violations: usize,
    /// Smallest `(lhs - rhs)/max(1, |lhs|)` seen.
    pub min_margin: f64,
    pub extremal_witness: Vec<f64>,
}

/// Checks the inequality at `samples` seeded random tuples.
pub fn sweep(
    id: InequalityId,
    e: Exponents,
    samples: usize,
    seed: u64,
    constant: Option<f64>,
) -> Result<Verdict> {
    multiplier(id, e, constant)?;
    let arity = id.arity();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Result<(usize, f64, [f64; 4])>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut x = [0.0; 4];
            let mut violations = 0;
            let mut worst = (f64::INFINITY, [0.0; 4]);
            for _ in 0..count {
                sample_tuple(&mut rng, arity, &mut x);
                let o = check(id, e, &x[..arity], constant)?;
                if !o.pass {
                    violations += 1;
                }
                let margin = (o.lhs - o.rhs) / o.lhs.abs().max(1.0);
                if margin < worst.0 {
                    worst = (margin, x);
                }
            }
            Ok((violations, worst.0, worst.1))
        })
        .collect();
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    let mut witness = [0.0; 4];
    for r in partial {
        let (v, m, w) = r?;
        violations += v;
        if m < min_margin {
            min_margin = m;
            witness = w;
        }
    }
    Ok(Verdict {
        id,
        p: e.p,
        second: e.second,
        constant,
        samples,
        seed,
        violations,
        min_margin,
        extremal_witness: witness[..arity].to_vec(),
    })
}

/// Work allowed to the constant search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub samples: usize,
    /// Hill-climbing rounds from each retained sample.
    pub rounds: usize,
}

/// Estimated optimal constant with the tuple attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub id: InequalityId,
    pub p: f64,
    pub second: f64,
    pub constant: f64,
    pub witness: Vec<f64>,
    pub budget: Budget,
    pub seed: u64,
}

fn ratio_or_zero(id: InequalityId, e: Exponents, x: &[f64]) -> Result<f64> {
    Ok(constant_ratio(id, e, x)?.unwrap_or(0.0))
}

/// Coordinate search accepting only improvements, on a fixed step schedule.
fn refine(id: InequalityId, e: Exponents, start: &[f64], rounds: usize) -> Result<(f64, Vec<f64>)> {
    let mut x = start.to_vec();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for v in x.iter_mut() {
        *v /= scale;
    }
    let mut best = ratio_or_zero(id, e, &x)?;
    let mut step = 0.25;
    for _ in 0..rounds {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step;
                let r = match constant_ratio(id, e, &y) {
                    Ok(r) => r.unwrap_or(0.0),
                    Err(Error::Degenerate(_)) => continue,
                    Err(other) => return Err(other),
                };
                if r > best {
                    best = r;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best, x))
}

/// Estimates the optimal constant by sampling and local refinement.
///
/// Samples form a fixed seeded stream. The estimate is the maximum of the raw ratios and of
/// refinements started from the best sample of every dyadic prefix, so it never decreases
/// when the budget grows.
pub fn brute_force_constant(
    id: InequalityId,
    e: Exponents,
    budget: Budget,
    seed: u64,
) -> Result<ConstantEstimate> {
    if budget.samples == 0 {
        return Err(invalid("the sample budget must be positive"));
    }
    let arity = id.arity();
    let chunks = budget.samples.div_ceil(CHUNK);
    let per_chunk: Vec<Result<Vec<Scored>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let count = CHUNK.min(budget.samples - c * CHUNK);
            let mut x = [0.0; 4];
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                sample_tuple(&mut rng, arity, &mut x);
                out.push((ratio_or_zero(id, e, &x[..arity])?, x));
            }
            Ok(out)
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, [0.0; 4]);
    let mut checkpoints = Vec::new();
    let mut seen = 0usize;
    let mut next = 1usize;
    for chunk in per_chunk {
        for (r, x) in chunk? {
            if r > best.0 {
                best = (r, x);
            }
            seen += 1;
            if seen == next || seen == budget.samples {
                if checkpoints.last() != Some(&best.1) {
                    checkpoints.push(best.1);
                }
                next *= 2;
            }
        }
    }
    let mut constant = best.0;
    let mut witness = best.1[..arity].to_vec();
    let refined: Vec<Result<(f64, Vec<f64>)>> = checkpoints
        .par_iter()
        .map(|x| refine(id, e, &x[..arity], budget.rounds))
        .collect();
    for r in refined {
        let (c, x) = r?;
        if c > constant {
            constant = c;
            witness = x;
        }
    }
    Ok(ConstantEstimate {
        id,
        p: e.p,
        second: e.second,
        constant,
        witness,
        budget,
        seed,
    })
}

/// Near-equality tuple kept so that later sweeps replay it first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub id: InequalityId,
    pub p: f64,
    pub second: f64,
    pub point: Vec<f64>,
    pub margin: f64,
}

impl From<&Verdict> for Witness {
    fn from(v: &Verdict) -> Self {
        Witness {
            id: v.id,
            p: v.p,
            second: v.second,
            point: v.extremal_witness.clone(),
            margin: v.min_margin,
        }
    }
}

/// Reads a JSON-lines witness corpus. A missing file is an empty corpus.
pub fn load_corpus(path: &Path) -> Result<Vec<Witness>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Appends one witness to a JSON-lines corpus, creating the file if needed.
pub fn append_witness(path: &Path, w: &Witness) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    writeln!(f, "{}", serde_json::to_string(w)?)?;
    Ok(())
}

/// Re-checks the stored witnesses of `id` at exponents `e` and returns those that fail.
pub fn replay_corpus(
    corpus: &[Witness],
    id: InequalityId,
    e: Exponents,
    constant: Option<f64>,
) -> Result<Vec<Witness>> {
    let mut failed = Vec::new();
    for w in corpus
        .iter()
        .filter(|w| w.id == id && w.p == e.p && w.second == e.second)
    {
        if !check(id, e, &w.point, constant)?.pass {
            failed.push(w.clone());
        }
    }
    Ok(failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse() {
        for id in InequalityId::ALL {
            assert_eq!(id.name().parse::<InequalityId>().unwrap(), id);
        }
        assert!("nope".parse::<InequalityId>().is_err());
    }

    #[test]
    fn corpus_round_trip() {
        let dir = std::env::temp_dir().join(format!("fracp-corpus-{}", std::process::id()));
        let path = dir.join("w.jsonl");
        assert!(load_corpus(&path).unwrap().is_empty());
        let e = Exponents::new(InequalityId::Holder, 2.0, 2.0).unwrap();
        let w = Witness {
            id: InequalityId::Holder,
            p: 2.0,
            second: 2.0,
            point: vec![1.0, -1.0],
            margin: 0.0,
        };
        append_witness(&path, &w).unwrap();
        append_witness(&path, &w).unwrap();
        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.len(), 2);
        assert!(replay_corpus(&corpus, InequalityId::Holder, e, Some(2.0))
            .unwrap()
            .is_empty());
        assert_eq!(
            replay_corpus(&corpus, InequalityId::Holder, e, Some(1.9))
                .unwrap()
                .len(),
            2
        );
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn holder_antipodal_ratio() {
        let e = Exponents::new(InequalityId::Holder, 2.0, 2.0).unwrap();
        let r = constant_ratio(InequalityId::Holder, e, &[1.0, -1.0])
            .unwrap()
            .unwrap();
        assert!((r - 2.0).abs() < 1e-15);
        let fail = check(InequalityId::Holder, e, &[1.0, -1.0], Some(1.9)).unwrap();
        assert!(!fail.pass);
        assert!(
            check(InequalityId::Holder, e, &[1.0, -1.0], Some(2.0))
                .unwrap()
                .pass
        );
    }

    #[test]
    fn coincident_points_pass() {
        for id in InequalityId::ALL {
            let e = Exponents::new(id, 3.0, 2.0).unwrap();
            let x = vec![0.7; id.arity()];
            assert!(check(id, e, &x, Some(1.0)).unwrap().pass);
        }
    }
}
