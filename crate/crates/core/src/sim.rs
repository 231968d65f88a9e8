//! Fast protocol simulation on Bell-diagonal inputs.
//!
//! A Bell-diagonal state on `m` pairs is a probability distribution over
//! error labels in `Z_p^{2m}`, and the protocol maps such distributions to
//! such distributions branch by branch. Everything here is exact linear
//! bookkeeping over those label distributions; the dense state-vector path
//! in [`crate::oracle`] exists to check it.

use rayon::prelude::*;

use crate::encoder::{f_map, FRule, ProtocolSpec};
use crate::symplectic::GfVector;
use crate::{Error, Result};

/// Normalization slack accepted by distribution constructors.
const NORM_TOL: f64 = 1e-12;

/// A Bell-diagonal state: `probs[label.index()]` is the probability of the
/// error label `(a_1..a_m | b_1..b_m)` on `m` pairs.
#[derive(Clone, PartialEq, Debug)]
pub struct BellDiagonal {
    p: u8,
    pairs: usize,
    probs: Vec<f64>,
}

impl BellDiagonal {
    pub fn new(p: u8, pairs: usize, probs: Vec<f64>) -> Result<Self> {
        let expect = (p as usize).pow(2 * pairs as u32);
        if probs.len() != expect {
            return Err(Error::DimensionMismatch(probs.len(), expect));
        }
        let mut sum = 0.0;
        for &q in &probs {
            if !(q >= 0.0) {
                return Err(Error::BadDistribution(q));
            }
            sum += q;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::BadDistribution(sum));
        }
        Ok(BellDiagonal { p, pairs, probs })
    }

    /// All probability on one label.
    pub fn point_mass(label: &GfVector) -> Self {
        let p = label.p();
        let pairs = label.slots();
        let mut probs = vec![0.0; (p as usize).pow(2 * pairs as u32)];
        probs[label.index()] = 1.0;
        BellDiagonal { p, pairs, probs }
    }

    pub fn uniform(p: u8, pairs: usize) -> Self {
        let len = (p as usize).pow(2 * pairs as u32);
        BellDiagonal { p, pairs, probs: vec![1.0 / len as f64; len] }
    }

    /// Isotropic product noise: per pair, the zero label has probability
    /// `f` and every other label `(1 - f) / (p^2 - 1)`.
    pub fn werner(p: u8, pairs: usize, f: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::BadFidelity(f));
        }
        let other = (1.0 - f) / (p as f64 * p as f64 - 1.0);
        let mut pair = vec![other; (p as usize).pow(2)];
        pair[0] = f;
        let single = BellDiagonal { p, pairs: 1, probs: pair };
        Ok(single.product_copies(pairs))
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, label: &GfVector) -> f64 {
        assert_eq!(label.p(), self.p, "modulus mismatch");
        assert_eq!(label.slots(), self.pairs, "pair count mismatch");
        self.probs[label.index()]
    }

    /// Probability of the zero label: the fidelity to the ideal state.
    pub fn fidelity(&self) -> f64 {
        self.probs[0]
    }

    /// Shannon entropy of the label distribution, in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&q| q > 0.0)
            .map(|&q| -q * q.log2())
            .sum()
    }

    /// Independent product of `copies` copies of this distribution, pairs
    /// laid out in block order: copy `j` occupies pair slots
    /// `j*m .. (j+1)*m`.
    pub fn product_copies(&self, copies: usize) -> Self {
        let m = self.pairs;
        let total = m * copies;
        let len = (self.p as usize).pow(2 * total as u32);
        let mut probs = vec![0.0; len];
        for (idx, slot) in probs.iter_mut().enumerate() {
            let label = GfVector::from_index(self.p, 2 * total, idx);
            let mut acc = 1.0;
            for j in 0..copies {
                let mut coords = Vec::with_capacity(2 * m);
                for i in 0..m {
                    coords.push(label.a(j * m + i));
                }
                for i in 0..m {
                    coords.push(label.b(j * m + i));
                }
                let group = GfVector::new(self.p, coords).expect("reduced coords");
                acc *= self.probs[group.index()];
            }
            *slot = acc;
        }
        BellDiagonal { p: self.p, pairs: total, probs }
    }
}

/// Outcome of one acceptance branch `s` of a protocol run. A branch with
/// zero acceptance probability has no conditional output and carries `None`
/// instead of a made-up distribution.
#[derive(Clone, PartialEq, Debug)]
pub struct BranchResult {
    pub syndrome: Vec<u8>,
    pub accept_prob: f64,
    pub p_out: Option<BellDiagonal>,
}

/// Runs one protocol round on an `n`-pair Bell-diagonal input, producing
/// one branch per accepted syndrome in `T`.
///
/// Per branch: `accept_prob` sums the input over the syndrome coset
/// `D(s)`, and the conditional output on `k` pairs pushes each label
/// through the correction `f` and the label map `g`. The correction rule is
/// the spec's fixed rule if present, otherwise the most-likely rule for
/// this input.
pub fn run_protocol(p_in: &BellDiagonal, spec: &ProtocolSpec) -> Result<Vec<BranchResult>> {
    if p_in.p() != spec.p() {
        return Err(Error::ModulusMismatch(p_in.p(), spec.p()));
    }
    if p_in.pairs() != spec.n() {
        return Err(Error::DimensionMismatch(p_in.pairs(), spec.n()));
    }
    let stab = spec.stab();
    let rule = match spec.frule() {
        Some(r) => r.clone(),
        None => FRule::most_likely(stab, p_in),
    };
    let out_len = (spec.p() as usize).pow(2 * spec.k() as u32);
    let mut slots: std::collections::BTreeMap<&[u8], usize> = std::collections::BTreeMap::new();
    for (i, s) in spec.t_set().iter().enumerate() {
        slots.insert(s.as_slice(), i);
    }
    let mut accepts = vec![0.0; spec.t_set().len()];
    let mut outs = vec![vec![0.0; out_len]; spec.t_set().len()];
    let total = (spec.p() as usize).pow(2 * spec.n() as u32);
    for idx in 0..total {
        let t = GfVector::from_index(spec.p(), 2 * spec.n(), idx);
        let prob = p_in.probs()[idx];
        let s = stab.syndrome(&t);
        if let Some(&slot) = slots.get(s.as_slice()) {
            let w = spec.class().g_map_unchecked(&f_map(stab, &rule, &t));
            accepts[slot] += prob;
            outs[slot][w.index()] += prob;
        }
    }
    let mut results = Vec::with_capacity(accepts.len());
    for (i, s) in spec.t_set().iter().enumerate() {
        let p_out = if accepts[i] > 0.0 {
            let probs: Vec<f64> = outs[i].iter().map(|&q| q / accepts[i]).collect();
            Some(BellDiagonal::new(spec.p(), spec.k(), probs)?)
        } else {
            None
        };
        results.push(BranchResult { syndrome: s.clone(), accept_prob: accepts[i], p_out });
    }
    Ok(results)
}

/// Record of an iterated run: the zero-branch acceptance probability of
/// each completed round, and the surviving group distribution (`None` if a
/// round degenerated to zero acceptance).
#[derive(Clone, PartialEq, Debug)]
pub struct IterationRun {
    pub accepts: Vec<f64>,
    pub final_dist: Option<BellDiagonal>,
}

impl IterationRun {
    /// Product of the per-round acceptance probabilities.
    pub fn accept_product(&self) -> f64 {
        self.accepts.iter().product()
    }
}

/// Iterates the protocol `rounds` times starting from a `k`-pair group
/// distribution. Each round feeds the independent block-order product of
/// `n/k` copies of the current group into the protocol and keeps the
/// zero-syndrome branch.
pub fn iterate_protocol(
    group: &BellDiagonal,
    spec: &ProtocolSpec,
    rounds: usize,
) -> Result<IterationRun> {
    if group.p() != spec.p() {
        return Err(Error::ModulusMismatch(group.p(), spec.p()));
    }
    if group.pairs() != spec.k() {
        return Err(Error::DimensionMismatch(group.pairs(), spec.k()));
    }
    if spec.n() % spec.k() != 0 {
        return Err(Error::InvalidParameter(format!(
            "iteration needs k | n, got n = {}, k = {}",
            spec.n(),
            spec.k()
        )));
    }
    let copies = spec.n() / spec.k();
    let mut cur = group.clone();
    let mut accepts = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let p_in = cur.product_copies(copies);
        let branches = run_protocol(&p_in, spec)?;
        let zero = &branches[0];
        debug_assert!(zero.syndrome.iter().all(|&x| x == 0));
        accepts.push(zero.accept_prob);
        match &zero.p_out {
            Some(d) => cur = d.clone(),
            None => return Ok(IterationRun { accepts, final_dist: None }),
        }
    }
    Ok(IterationRun { accepts, final_dist: Some(cur) })
}

/// Ebits extractable from a group distribution by hashing:
/// `max(0, m log2 p - H)` for an `m`-pair distribution.
pub fn hashing_yield(dist: &BellDiagonal) -> f64 {
    let ebits = dist.pairs() as f64 * (dist.p() as f64).log2() - dist.entropy_bits();
    ebits.max(0.0)
}

/// One row of a yield table.
#[derive(Clone, PartialEq, Debug)]
pub struct YieldPoint {
    pub fidelity: f64,
    pub rounds: usize,
    pub accept_product: f64,
    pub entropy_bits: f64,
    pub yield_value: f64,
}

/// Yield rows for one input fidelity, `rounds = 0..=r_max` (truncated if a
/// round degenerates). Yield per initial pair after `r` rounds:
/// `(k/n)^r * prod q_j * hashing_yield / (k log2 p)`.
pub fn yield_points(spec: &ProtocolSpec, fidelity: f64, r_max: usize) -> Result<Vec<YieldPoint>> {
    let k = spec.k() as f64;
    let n = spec.n() as f64;
    let full = k * (spec.p() as f64).log2();
    let mut cur = BellDiagonal::werner(spec.p(), spec.k(), fidelity)?;
    let mut points = Vec::with_capacity(r_max + 1);
    let mut accept_product = 1.0;
    let mut survival = 1.0;
    for r in 0..=r_max {
        points.push(YieldPoint {
            fidelity,
            rounds: r,
            accept_product,
            entropy_bits: cur.entropy_bits(),
            yield_value: survival * accept_product * hashing_yield(&cur) / full,
        });
        if r == r_max {
            break;
        }
        let run = iterate_protocol(&cur, spec, 1)?;
        accept_product *= run.accepts[0];
        survival *= k / n;
        match run.final_dist {
            Some(d) => cur = d,
            None => break,
        }
    }
    Ok(points)
}

/// Full yield table over a fidelity grid, rows ordered by fidelity then
/// rounds. Grid entries are computed independently, so the result does not
/// depend on worker count.
pub fn yield_table(spec: &ProtocolSpec, f_grid: &[f64], r_max: usize) -> Result<Vec<YieldPoint>> {
    let per_f: Vec<Vec<YieldPoint>> = f_grid
        .par_iter()
        .map(|&f| yield_points(spec, f, r_max))
        .collect::<Result<_>>()?;
    Ok(per_f.into_iter().flatten().collect())
}

/// Best-round yield per grid fidelity: the row maximizing yield, earliest
/// round winning ties.
pub fn yield_curve(spec: &ProtocolSpec, f_grid: &[f64], r_max: usize) -> Result<Vec<YieldPoint>> {
    let per_f: Vec<Vec<YieldPoint>> = f_grid
        .par_iter()
        .map(|&f| yield_points(spec, f, r_max))
        .collect::<Result<_>>()?;
    Ok(per_f
        .into_iter()
        .map(|points| {
            let mut best = points[0].clone();
            for pt in points {
                if pt.yield_value > best.yield_value {
                    best = pt;
                }
            }
            best
        })
        .collect())
}

/// Writes yield rows as CSV with header
/// `F,rounds,accept_prob_product,entropy_bits,yield`, sorted by fidelity
/// then rounds.
pub fn write_yield_csv<W: std::io::Write>(points: &[YieldPoint], out: &mut W) -> std::io::Result<()> {
    let mut rows: Vec<&YieldPoint> = points.iter().collect();
    rows.sort_by(|a, b| {
        a.fidelity
            .total_cmp(&b.fidelity)
            .then(a.rounds.cmp(&b.rounds))
    });
    writeln!(out, "F,rounds,accept_prob_product,entropy_bits,yield")?;
    for pt in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            pt.fidelity, pt.rounds, pt.accept_product, pt.entropy_bits, pt.yield_value
        )?;
    }
    Ok(())
}
