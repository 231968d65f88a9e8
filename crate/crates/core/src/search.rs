//! Exhaustive, deterministic, parallel search over distillation protocols.
//!
//! A candidate is a pair (self-orthogonal subspace `C`, hyperbolic basis of
//! `C^perp / C`): the subspace fixes the stabilizer, the basis fixes the
//! encoding class. Candidates factor as `selforth_count * sp_order(k, p)`,
//! and the search visits every one of them.
//!
//! Work is partitioned by stabilizer: one chunk per subspace, all classes of
//! that subspace evaluated inside the chunk. Chunk results merge in
//! enumeration order, so reports are byte-identical for any worker count.
//! Per-candidate yields are computed by [`ChunkEval::eval`], which performs
//! the same floating-point operations in the same order as
//! [`sim::yield_points`]; the two agree bit for bit, which the tests pin.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncodingClass, ProtocolSpec};
use crate::pauli::Stabilizer;
use crate::sim::{self, BellDiagonal, YieldPoint};
use crate::symplectic::{
    enumerate_self_orthogonal, for_each_hyperbolic_basis, is_prime, quotient_form,
    reduction_factor, selforth_count, sp_order, GfVector, QuotientSpace, Subspace,
};
use crate::{Error, Result};

/// What the search ranks candidates by.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Objective {
    /// Best-round yield at one grid fidelity (which must be on the grid).
    #[serde(rename = "yield_at_f")]
    YieldAtF { f_star: f64 },
    /// Number of grid fidelities at which the candidate attains the
    /// pointwise-best yield over all candidates. Needs two passes: one to
    /// find the per-fidelity maxima, one to count matches.
    #[serde(rename = "dominance_count")]
    DominanceCount,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::YieldAtF { f_star } => write!(f, "yield at F={f_star}"),
            Objective::DominanceCount => write!(f, "dominance count over the fidelity grid"),
        }
    }
}

/// Search parameters. Fields marked `skip` affect execution only, never the
/// result values, and are excluded from the config identity used to match
/// checkpoints.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct SearchConfig {
    pub n: usize,
    pub k: usize,
    pub p: u8,
    /// Fidelity grid the yield curves are evaluated on.
    pub f_eval: Vec<f64>,
    /// Maximum iteration depth; each candidate is scored by its best round
    /// in `0..=r_max`.
    pub r_max: usize,
    /// Acceptance set attached to every produced spec.
    pub t_set: Vec<Vec<u8>>,
    pub objective: Objective,
    /// How many ranked protocols to keep.
    pub top_n: usize,
    #[serde(skip)]
    pub workers: usize,
    /// Abort before evaluating anything if the candidate count exceeds this.
    #[serde(skip)]
    pub budget: Option<u64>,
    /// Skip stabilizers that are not the lexicographically least member of
    /// their orbit under qudit permutations and the X/Z swap. Off by
    /// default; turning it on changes coverage but not the best values.
    pub symmetry_reduction: bool,
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
}

impl SearchConfig {
    pub fn new(n: usize, k: usize, p: u8) -> Self {
        let f_eval: Vec<f64> = (60..=100).step_by(5).map(|i| i as f64 / 100.0).collect();
        SearchConfig {
            n,
            k,
            p,
            f_eval,
            r_max: 4,
            t_set: vec![vec![0; n.saturating_sub(k)]],
            objective: Objective::YieldAtF { f_star: 0.85 },
            top_n: 100,
            workers: 1,
            budget: None,
            symmetry_reduction: false,
            checkpoint: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::InvalidParameter(format!("p = {} is not prime", self.p)));
        }
        if self.k < 1 || self.n <= self.k {
            return Err(Error::InvalidParameter(format!(
                "need n > k >= 1, got n = {}, k = {}",
                self.n, self.k
            )));
        }
        if self.n % self.k != 0 {
            return Err(Error::InvalidParameter(format!(
                "iterated evaluation needs k | n, got n = {}, k = {}",
                self.n, self.k
            )));
        }
        if self.f_eval.is_empty() {
            return Err(Error::InvalidParameter("empty fidelity grid".into()));
        }
        for &f in &self.f_eval {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::BadFidelity(f));
            }
        }
        if let Objective::YieldAtF { f_star } = self.objective {
            if !self.f_eval.iter().any(|f| f.to_bits() == f_star.to_bits()) {
                return Err(Error::InvalidParameter(format!(
                    "objective fidelity {f_star} is not on the evaluation grid"
                )));
            }
        }
        if self.r_max < 1 {
            return Err(Error::InvalidParameter("r_max must be at least 1".into()));
        }
        if self.top_n < 1 {
            return Err(Error::InvalidParameter("top_n must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidParameter("worker count must be at least 1".into()));
        }
        let r = self.n - self.k;
        for s in &self.t_set {
            if s.len() != r || s.iter().any(|&x| x >= self.p) {
                return Err(Error::InvalidSpec(format!("invalid syndrome {s:?} in T")));
            }
        }
        if !self.t_set.iter().any(|s| s.iter().all(|&x| x == 0)) {
            return Err(Error::InvalidSpec("acceptance set must contain the zero syndrome".into()));
        }
        Ok(())
    }

    /// The acceptance set as attached to specs: sorted and deduplicated.
    pub fn normalized_t_set(&self) -> Vec<Vec<u8>> {
        let mut t = self.t_set.clone();
        t.sort();
        t.dedup();
        t
    }

    /// Canonical single-line JSON of everything that determines the result
    /// values. Checkpoints store this and refuse to resume on a mismatch.
    pub fn identity_json(&self) -> String {
        let mut id = self.clone();
        id.t_set = self.normalized_t_set();
        serde_json::to_string(&id).expect("plain data serializes")
    }
}

/// Total candidates a full `(n, k, p)` search visits: the number of
/// `n-k`-dimensional self-orthogonal subspaces times the number of
/// hyperbolic bases of each quotient.
pub fn candidate_count(n: usize, k: usize, p: u8) -> BigUint {
    selforth_count(n as u32, k as u32, p) * sp_order(k as u32, p)
}

/// One ranked hit: the spec, its objective value, the best-round yield per
/// grid fidelity, and the full per-round yield table.
#[derive(Clone, Debug)]
pub struct RankedProtocol {
    pub spec: ProtocolSpec,
    pub objective: f64,
    pub curve: Vec<YieldPoint>,
    pub table: Vec<YieldPoint>,
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    /// Echo of the search parameters (with normalized `t_set`).
    pub config: SearchConfig,
    pub candidates: BigUint,
    /// Factor saved versus enumerating all encoding operators directly.
    pub reduction: BigUint,
    /// Stabilizer chunks evaluated (smaller than the subspace count only
    /// under symmetry reduction).
    pub stabilizers: u64,
    pub evaluated: u64,
    /// Pointwise-best yield over all candidates, aligned with
    /// `config.f_eval`.
    pub best_by_f: Vec<f64>,
    pub top: Vec<RankedProtocol>,
}

/// Tables shared by every chunk: the copy-gather index map, the initial
/// group distribution per grid fidelity, and the scalar constants of the
/// yield recursion.
struct Shared {
    p: u8,
    k: usize,
    copies: usize,
    digits: usize,
    dim: usize,
    out_len: usize,
    copy_idx: Vec<u32>,
    init: Vec<Vec<f64>>,
    full: f64,
    ratio: f64,
    r_max: usize,
}

impl Shared {
    fn new(config: &SearchConfig) -> Result<Self> {
        let p = config.p as usize;
        let (n, k) = (config.n, config.k);
        let copies = n / k;
        let digits = 2 * n;
        let dim = p
            .checked_pow(digits as u32)
            .ok_or(Error::SizeLimit(usize::MAX, usize::MAX))?;
        let out_len = p.pow(2 * k as u32);
        if out_len > u16::MAX as usize {
            return Err(Error::SizeLimit(out_len, u16::MAX as usize));
        }
        let mut copy_idx = Vec::with_capacity(dim * copies);
        for idx in 0..dim {
            let label = GfVector::from_index(config.p, digits, idx);
            for j in 0..copies {
                let mut coords = Vec::with_capacity(2 * k);
                for i in 0..k {
                    coords.push(label.a(j * k + i));
                }
                for i in 0..k {
                    coords.push(label.b(j * k + i));
                }
                let group = GfVector::new(config.p, coords).expect("reduced coords");
                copy_idx.push(group.index() as u32);
            }
        }
        let mut init = Vec::with_capacity(config.f_eval.len());
        for &f in &config.f_eval {
            init.push(BellDiagonal::werner(config.p, k, f)?.probs().to_vec());
        }
        let full = k as f64 * (config.p as f64).log2();
        let ratio = k as f64 / n as f64;
        Ok(Shared {
            p: config.p,
            k,
            copies,
            digits,
            dim,
            out_len,
            copy_idx,
            init,
            full,
            ratio,
            r_max: config.r_max,
        })
    }
}

/// `x - y` on base-`p` digit strings packed as label indices.
fn sub_label(p: usize, digits: usize, x: usize, y: usize) -> usize {
    if p == 2 {
        return x ^ y;
    }
    let (mut x, mut y) = (x, y);
    let mut place = 1;
    let mut acc = 0;
    for _ in 0..digits {
        acc += (x % p + p - y % p) % p * place;
        place *= p;
        x /= p;
        y /= p;
    }
    acc
}

/// Entropy in bits, accumulated in slot order so it reproduces
/// [`BellDiagonal::entropy_bits`] exactly.
fn entropy_ascending(probs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &q in probs {
        if q > 0.0 {
            acc += -q * q.log2();
        }
    }
    acc
}

/// Per-stabilizer evaluation state: the zero-syndrome coset in ascending
/// label order plus reusable buffers, so a candidate evaluation allocates
/// nothing.
struct ChunkEval {
    coset0: Vec<u32>,
    group: Vec<f64>,
    pair: Vec<f64>,
    next: Vec<f64>,
    w_lut: Vec<u16>,
}

impl ChunkEval {
    fn new(shared: &Shared, stab: &Stabilizer) -> Self {
        let mut coset0: Vec<u32> = stab.cperp().elements().map(|v| v.index() as u32).collect();
        coset0.sort_unstable();
        ChunkEval {
            coset0,
            group: vec![0.0; shared.dim],
            pair: vec![0.0; shared.out_len],
            next: vec![0.0; shared.out_len],
            w_lut: vec![0; shared.dim],
        }
    }

    /// Tabulates the label map of `class` on all of `C^perp`; only those
    /// entries are ever read.
    fn fill_w_lut(&mut self, cperp: &Subspace, class: &EncodingClass) {
        for v in cperp.elements() {
            self.w_lut[v.index()] = class.g_map_unchecked(&v).index() as u16;
        }
    }

    /// Best-round yield per grid fidelity for the current `w_lut`.
    ///
    /// The loop body mirrors one round of `iterate_protocol` restricted to
    /// the zero branch: same product gather, same coset sums in ascending
    /// label order, same correction representative (most likely error, ties
    /// to the smaller label), same normalization and entropy accumulation.
    /// Keeping the operation order identical makes the scores bitwise equal
    /// to the reference path for every candidate.
    fn eval(&mut self, sh: &Shared, yields: &mut [f64]) {
        for (fi, init) in sh.init.iter().enumerate() {
            self.pair.copy_from_slice(init);
            let mut accept_product = 1.0;
            let mut survival = 1.0;
            let h = entropy_ascending(&self.pair);
            let mut best = survival * accept_product * (sh.full - h).max(0.0) / sh.full;
            for _ in 1..=sh.r_max {
                for idx in 0..sh.dim {
                    let mut acc = 1.0;
                    let base = idx * sh.copies;
                    for j in 0..sh.copies {
                        acc *= self.pair[sh.copy_idx[base + j] as usize];
                    }
                    self.group[idx] = acc;
                }
                let mut accept = 0.0;
                let mut rep = 0usize;
                let mut rep_q = f64::NEG_INFINITY;
                for &t in &self.coset0 {
                    let q = self.group[t as usize];
                    accept += q;
                    if q > rep_q {
                        rep_q = q;
                        rep = t as usize;
                    }
                }
                if !(accept > 0.0) {
                    break;
                }
                accept_product *= accept;
                survival *= sh.ratio;
                self.next.fill(0.0);
                for &t in &self.coset0 {
                    let f_idx = sub_label(sh.p as usize, sh.digits, t as usize, rep);
                    self.next[self.w_lut[f_idx] as usize] += self.group[t as usize];
                }
                for (dst, &src) in self.pair.iter_mut().zip(&self.next) {
                    *dst = src / accept;
                }
                let h = entropy_ascending(&self.pair);
                let y = survival * accept_product * (sh.full - h).max(0.0) / sh.full;
                if y > best {
                    best = y;
                }
            }
            yields[fi] = best;
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct TopEntry {
    objective: f64,
    spec: String,
}

#[derive(Clone, Serialize, Deserialize)]
struct ChunkLine {
    pass: u8,
    chunk: u64,
    evaluated: u64,
    best_by_f: Vec<f64>,
    top: Vec<TopEntry>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    config: String,
}

/// Per-pass constants handed to every chunk.
struct PassCtx<'a> {
    shared: &'a Shared,
    t_set: &'a [Vec<u8>],
    /// Grid position of the objective fidelity, for the yield objective.
    star_idx: Option<usize>,
    /// Per-fidelity maxima from pass 1, for the dominance objective.
    maxima: Option<&'a [f64]>,
    top_n: usize,
    /// Pass 1 of the dominance objective only collects maxima.
    want_top: bool,
    pass: u8,
}

fn process_chunk(ctx: &PassCtx<'_>, c: &Subspace, chunk: u64) -> Result<ChunkLine> {
    let sh = ctx.shared;
    let stab = Stabilizer::from_subspace(c)?;
    let quot = QuotientSpace::new(c)?;
    let mut ev = ChunkEval::new(sh, &stab);
    let p = sh.p;
    let k = sh.k;
    let nf = sh.init.len();
    let mut yields = vec![0.0; nf];
    let mut best_by_f = vec![f64::NEG_INFINITY; nf];
    let mut entries: Vec<TopEntry> = Vec::new();
    let mut evaluated: u64 = 0;
    let mut failure: Option<Error> = None;
    for_each_hyperbolic_basis(p, 2 * k, |x, y| quotient_form(p, x, y), |pairs| {
        if failure.is_some() {
            return;
        }
        let step = (|| -> Result<()> {
            let xi_high: Vec<GfVector> = pairs.iter().map(|(x, _)| quot.lift(x)).collect();
            let eta_high: Vec<GfVector> = pairs.iter().map(|(_, y)| quot.lift(y)).collect();
            let class = EncodingClass::build(c, &xi_high, &eta_high)?;
            ev.fill_w_lut(stab.cperp(), &class);
            ev.eval(sh, &mut yields);
            for (b, &y) in best_by_f.iter_mut().zip(&yields) {
                if y > *b {
                    *b = y;
                }
            }
            evaluated += 1;
            if ctx.want_top {
                let objective = if let Some(maxima) = ctx.maxima {
                    yields.iter().zip(maxima).filter(|(y, m)| y == m).count() as f64
                } else if let Some(i) = ctx.star_idx {
                    yields[i]
                } else {
                    0.0
                };
                let spec = ProtocolSpec::new(stab.clone(), class, ctx.t_set.to_vec())?;
                entries.push(TopEntry { objective, spec: spec.to_canonical_json() });
            }
            Ok(())
        })();
        if let Err(e) = step {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    // Classes of one stabilizer biject with hyperbolic bases of the quotient.
    if BigUint::from(evaluated) != sp_order(k as u32, p) {
        return Err(Error::InvalidParameter(format!(
            "chunk {chunk} visited {evaluated} classes, expected {}",
            sp_order(k as u32, p)
        )));
    }
    sort_entries(&mut entries);
    entries.truncate(ctx.top_n);
    Ok(ChunkLine { pass: ctx.pass, chunk, evaluated, best_by_f, top: entries })
}

/// Objective descending, canonical spec JSON ascending. Total because two
/// distinct candidates never serialize identically.
fn sort_entries(entries: &mut [TopEntry]) {
    entries.sort_by(|a, b| {
        b.objective
            .total_cmp(&a.objective)
            .then_with(|| a.spec.cmp(&b.spec))
    });
}

fn load_checkpoint(path: &Path, identity: &str) -> Result<BTreeMap<(u8, u64), ChunkLine>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let reader = BufReader::new(File::open(path)?);
    let mut saw_header = false;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            let header: HeaderLine = serde_json::from_str(&line)
                .map_err(|_| Error::InvalidParameter("checkpoint header is unreadable".into()))?;
            if header.config != identity {
                return Err(Error::InvalidParameter(
                    "checkpoint belongs to a different search configuration".into(),
                ));
            }
            saw_header = true;
            continue;
        }
        // Torn trailing writes are expected after an interrupt; skip lines
        // that do not parse.
        if let Ok(chunk) = serde_json::from_str::<ChunkLine>(&line) {
            done.insert((chunk.pass, chunk.chunk), chunk);
        }
    }
    Ok(done)
}

fn open_sink(path: &Path, identity: &str, resuming: bool) -> Result<Mutex<BufWriter<File>>> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = BufWriter::new(file);
    if !resuming {
        let header = serde_json::to_string(&HeaderLine { config: identity.to_string() })?;
        writeln!(writer, "{header}")?;
        writer.flush()?;
    }
    Ok(Mutex::new(writer))
}

fn run_pass(
    ctx: &PassCtx<'_>,
    chunks: &[(u64, &Subspace)],
    done: &BTreeMap<(u8, u64), ChunkLine>,
    sink: Option<&Mutex<BufWriter<File>>>,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ChunkLine>> {
    pool.install(|| {
        chunks
            .par_iter()
            .map(|&(chunk, c)| {
                if let Some(line) = done.get(&(ctx.pass, chunk)) {
                    return Ok(line.clone());
                }
                let line = process_chunk(ctx, c, chunk)?;
                if let Some(sink) = sink {
                    let text = serde_json::to_string(&line)?;
                    let mut writer = sink
                        .lock()
                        .map_err(|_| Error::InvalidParameter("checkpoint writer poisoned".into()))?;
                    writeln!(writer, "{text}")?;
                    writer.flush()?;
                }
                Ok(line)
            })
            .collect()
    })
}

/// Applies a qudit permutation and optionally the X/Z swap to a label
/// vector. Both preserve self-orthogonality and map protocols to protocols
/// with identical yield curves.
fn transform_vector(v: &GfVector, perm: &[usize], dual: bool) -> GfVector {
    let n = perm.len();
    let mut coords = vec![0u8; 2 * n];
    for i in 0..n {
        let (a, b) = (v.a(perm[i]), v.b(perm[i]));
        if dual {
            coords[i] = b;
            coords[n + i] = a;
        } else {
            coords[i] = a;
            coords[n + i] = b;
        }
    }
    GfVector::new(v.p(), coords).expect("permuted coords")
}

fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// True iff `c` is the lexicographically least subspace in its orbit under
/// qudit permutations and the X/Z swap (comparing canonical basis rows).
fn is_orbit_representative(c: &Subspace) -> bool {
    let n = c.ambient_dim() / 2;
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        for dual in [false, true] {
            let identity = !dual && perm.iter().enumerate().all(|(i, &x)| i == x);
            if identity {
                continue;
            }
            let rows: Vec<GfVector> =
                c.rows().iter().map(|v| transform_vector(v, &perm, dual)).collect();
            let image = Subspace::from_span(c.p(), c.ambient_dim(), &rows).expect("mapped span");
            if image < *c {
                return false;
            }
        }
        if !next_permutation(&mut perm) {
            return true;
        }
    }
}

/// Runs the full search described by `config`.
///
/// Guarantees, independent of worker count and checkpoint state:
/// coverage equals [`candidate_count`] when symmetry reduction is off, the
/// ranking is totally ordered (objective descending, canonical JSON
/// ascending), and `best_by_f` holds the pointwise-best yield over all
/// candidates.
pub fn search(config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    let t_set = config.normalized_t_set();
    let candidates = candidate_count(config.n, config.k, config.p);
    let reduction = reduction_factor(config.n as u32, config.k as u32, config.p);
    if let Some(budget) = config.budget {
        if candidates > BigUint::from(budget) {
            return Err(Error::BudgetExceeded { candidates, budget });
        }
    }
    let shared = Shared::new(config)?;
    let subspaces: Vec<Subspace> =
        enumerate_self_orthogonal(config.n, config.k, config.p)?.collect();
    // Chunk ids are enumeration positions, so they stay stable whether or
    // not the symmetry filter drops some of them.
    let chunks: Vec<(u64, &Subspace)> = subspaces
        .iter()
        .enumerate()
        .filter(|(_, c)| !config.symmetry_reduction || is_orbit_representative(c))
        .map(|(i, c)| (i as u64, c))
        .collect();
    let identity = config.identity_json();
    let done = match &config.checkpoint {
        Some(path) => load_checkpoint(path, &identity)?,
        None => BTreeMap::new(),
    };
    let sink = match &config.checkpoint {
        Some(path) => Some(open_sink(path, &identity, !done.is_empty())?),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let star_idx = match config.objective {
        Objective::YieldAtF { f_star } => {
            Some(
                config
                    .f_eval
                    .iter()
                    .position(|f| f.to_bits() == f_star.to_bits())
                    .expect("validated membership"),
            )
        }
        Objective::DominanceCount => None,
    };
    let nf = config.f_eval.len();
    let maxima: Option<Vec<f64>> = if config.objective == Objective::DominanceCount {
        let ctx = PassCtx {
            shared: &shared,
            t_set: &t_set,
            star_idx: None,
            maxima: None,
            top_n: config.top_n,
            want_top: false,
            pass: 1,
        };
        let lines = run_pass(&ctx, &chunks, &done, sink.as_ref(), &pool)?;
        let mut maxima = vec![f64::NEG_INFINITY; nf];
        for line in &lines {
            for (m, &b) in maxima.iter_mut().zip(&line.best_by_f) {
                if b > *m {
                    *m = b;
                }
            }
        }
        Some(maxima)
    } else {
        None
    };
    let ctx = PassCtx {
        shared: &shared,
        t_set: &t_set,
        star_idx,
        maxima: maxima.as_deref(),
        top_n: config.top_n,
        want_top: true,
        pass: if maxima.is_some() { 2 } else { 1 },
    };
    let lines = run_pass(&ctx, &chunks, &done, sink.as_ref(), &pool)?;
    let mut evaluated: u64 = 0;
    let mut best_by_f = vec![f64::NEG_INFINITY; nf];
    let mut top: Vec<TopEntry> = Vec::new();
    for line in &lines {
        evaluated += line.evaluated;
        for (b, &y) in best_by_f.iter_mut().zip(&line.best_by_f) {
            if y > *b {
                *b = y;
            }
        }
        top.extend(line.top.iter().cloned());
        sort_entries(&mut top);
        top.truncate(config.top_n);
    }
    if !config.symmetry_reduction && BigUint::from(evaluated) != candidates {
        return Err(Error::InvalidParameter(format!(
            "coverage mismatch: evaluated {evaluated} of {candidates} candidates"
        )));
    }
    let mut ranked = Vec::with_capacity(top.len());
    for entry in &top {
        let spec = ProtocolSpec::from_json(&entry.spec)?;
        let curve = sim::yield_curve(&spec, &config.f_eval, config.r_max)?;
        let table = sim::yield_table(&spec, &config.f_eval, config.r_max)?;
        ranked.push(RankedProtocol { spec, objective: entry.objective, curve, table });
    }
    let mut echo = config.clone();
    echo.t_set = t_set;
    Ok(SearchReport {
        config: echo,
        candidates,
        reduction,
        stabilizers: chunks.len() as u64,
        evaluated,
        best_by_f,
        top: ranked,
    })
}

/// Writes the deterministic results file: a config and coverage preamble,
/// the pointwise-best yields, then per ranked protocol its canonical JSON
/// and full yield table as CSV. Contains nothing that varies with worker
/// count or timing.
pub fn write_report<W: Write>(report: &SearchReport, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "# protocol search results")?;
    writeln!(out, "# config: {}", report.config.identity_json())?;
    writeln!(out, "# objective: {}", report.config.objective)?;
    writeln!(out, "# candidates: {}", report.candidates)?;
    writeln!(out, "# stabilizers evaluated: {}", report.stabilizers)?;
    writeln!(out, "# candidates evaluated: {}", report.evaluated)?;
    writeln!(out, "# reduction factor vs enumerating all encoders: {}", report.reduction)?;
    writeln!(out, "# best yield per input fidelity:")?;
    for (f, y) in report.config.f_eval.iter().zip(&report.best_by_f) {
        writeln!(out, "#   F={f} yield={y}")?;
    }
    for (rank, hit) in report.top.iter().enumerate() {
        writeln!(out)?;
        writeln!(out, "## rank {} objective {}", rank + 1, hit.objective)?;
        writeln!(out, "{}", hit.spec.to_canonical_json())?;
        sim::write_yield_csv(&hit.table, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::GfVector;

    fn small_config(n: usize, k: usize, p: u8) -> SearchConfig {
        let mut config = SearchConfig::new(n, k, p);
        config.f_eval = vec![0.7, 0.85];
        config.objective = Objective::YieldAtF { f_star: 0.85 };
        config.r_max = 2;
        config
    }

    /// Direct enumeration of every `(subspace, class)` pair, for
    /// cross-checking small searches.
    fn all_specs(n: usize, k: usize, p: u8, t_set: &[Vec<u8>]) -> Vec<ProtocolSpec> {
        let mut specs = Vec::new();
        for c in enumerate_self_orthogonal(n, k, p).unwrap() {
            let stab = Stabilizer::from_subspace(&c).unwrap();
            let quot = QuotientSpace::new(&c).unwrap();
            for_each_hyperbolic_basis(p, 2 * k, |x, y| quotient_form(p, x, y), |pairs| {
                let xi_high: Vec<GfVector> = pairs.iter().map(|(x, _)| quot.lift(x)).collect();
                let eta_high: Vec<GfVector> = pairs.iter().map(|(_, y)| quot.lift(y)).collect();
                let class = EncodingClass::build(&c, &xi_high, &eta_high).unwrap();
                specs.push(ProtocolSpec::new(stab.clone(), class, t_set.to_vec()).unwrap());
            })
            .unwrap();
        }
        specs
    }

    fn best_yield(spec: &ProtocolSpec, f: f64, r_max: usize) -> f64 {
        sim::yield_points(spec, f, r_max)
            .unwrap()
            .iter()
            .map(|pt| pt.yield_value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn candidate_counts_match_the_closed_forms() {
        assert_eq!(candidate_count(2, 1, 2), BigUint::from(90u32));
        assert_eq!(candidate_count(3, 1, 2), BigUint::from(1890u32));
        assert_eq!(candidate_count(4, 2, 2), BigUint::from(3_855_600u64));
        assert_eq!(reduction_factor(4, 2, 2), BigUint::from(12288u32));
        // candidates * reduction = number of hyperbolic bases of the whole
        // space = |Sp(2n, p)|.
        for (n, k, p) in [(2usize, 1usize, 2u8), (3, 1, 2), (4, 2, 2), (2, 1, 3)] {
            assert_eq!(
                candidate_count(n, k, p) * reduction_factor(n as u32, k as u32, p),
                sp_order(n as u32, p),
            );
        }
    }

    #[test]
    fn search_scores_match_the_reference_path_exactly() {
        let mut config = small_config(2, 1, 2);
        config.top_n = 90;
        let report = search(&config).unwrap();
        assert_eq!(report.evaluated, 90);
        assert_eq!(report.stabilizers, 15);
        assert_eq!(report.top.len(), 90);
        for hit in &report.top {
            let expect = best_yield(&hit.spec, 0.85, config.r_max);
            assert_eq!(hit.objective, expect, "fast path diverged for {}", hit.spec.to_canonical_json());
        }
        // The pointwise maxima agree with direct enumeration.
        let specs = all_specs(2, 1, 2, &config.normalized_t_set());
        assert_eq!(specs.len(), 90);
        for (fi, &f) in config.f_eval.iter().enumerate() {
            let direct = specs
                .iter()
                .map(|s| best_yield(s, f, config.r_max))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(report.best_by_f[fi], direct);
        }
        // Ranking is by objective, descending.
        for pair in report.top.windows(2) {
            assert!(pair[0].objective >= pair[1].objective);
        }
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let config = small_config(3, 1, 2);
        let mut outputs = Vec::new();
        for workers in [1usize, 4, 8] {
            let mut c = config.clone();
            c.workers = workers;
            let report = search(&c).unwrap();
            assert_eq!(report.evaluated, 1890);
            let mut buf = Vec::new();
            write_report(&report, &mut buf).unwrap();
            outputs.push(buf);
        }
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(outputs[0], outputs[2]);
    }

    #[test]
    fn checkpoint_resume_reproduces_the_full_run() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("search.ckpt");
        let fresh = {
            let mut c = small_config(2, 1, 2);
            c.workers = 2;
            let report = search(&c).unwrap();
            let mut buf = Vec::new();
            write_report(&report, &mut buf).unwrap();
            buf
        };
        // First run writes the full log.
        let mut c = small_config(2, 1, 2);
        c.checkpoint = Some(path.clone());
        search(&c).unwrap();
        let full_log = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = full_log.lines().collect();
        assert!(lines.len() > 3);
        // Keep the header and the first third of the chunks, as if the run
        // had been interrupted.
        let keep = 1 + (lines.len() - 1) / 3;
        std::fs::write(&path, lines[..keep].join("\n") + "\n").unwrap();
        let resumed = {
            let mut c = small_config(2, 1, 2);
            c.checkpoint = Some(path.clone());
            c.workers = 4;
            let report = search(&c).unwrap();
            let mut buf = Vec::new();
            write_report(&report, &mut buf).unwrap();
            buf
        };
        assert_eq!(fresh, resumed);
        // A config change invalidates the log.
        let mut other = small_config(2, 1, 2);
        other.r_max = 3;
        other.checkpoint = Some(path);
        assert!(matches!(search(&other), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn budget_is_enforced_before_any_evaluation() {
        let mut config = small_config(2, 1, 2);
        config.budget = Some(89);
        match search(&config) {
            Err(Error::BudgetExceeded { candidates, budget }) => {
                assert_eq!(candidates, BigUint::from(90u32));
                assert_eq!(budget, 89);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        config.budget = Some(90);
        assert!(search(&config).is_ok());
    }

    #[test]
    fn symmetry_reduction_keeps_the_best_values() {
        let full = search(&small_config(3, 1, 2)).unwrap();
        let mut c = small_config(3, 1, 2);
        c.symmetry_reduction = true;
        let reduced = search(&c).unwrap();
        assert!(reduced.evaluated < full.evaluated);
        assert!(reduced.stabilizers < full.stabilizers);
        for (a, b) in full.best_by_f.iter().zip(&reduced.best_by_f) {
            assert!((a - b).abs() <= 1e-12, "best {a} vs reduced {b}");
        }
        assert!((full.top[0].objective - reduced.top[0].objective).abs() <= 1e-12);
    }

    #[test]
    fn dominance_count_tallies_pointwise_wins() {
        let mut config = small_config(2, 1, 2);
        config.objective = Objective::DominanceCount;
        config.top_n = 90;
        let report = search(&config).unwrap();
        for hit in &report.top {
            let mut wins = 0;
            for (fi, &f) in config.f_eval.iter().enumerate() {
                if best_yield(&hit.spec, f, config.r_max) == report.best_by_f[fi] {
                    wins += 1;
                }
            }
            assert_eq!(hit.objective, wins as f64);
        }
        assert!(report.top[0].objective >= 1.0);
        for pair in report.top.windows(2) {
            assert!(pair[0].objective >= pair[1].objective);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SearchConfig::new(2, 1, 2).validate().is_ok());
        let mut c = SearchConfig::new(2, 1, 2);
        c.objective = Objective::YieldAtF { f_star: 0.83 };
        assert!(c.validate().is_err());
        assert!(SearchConfig::new(2, 2, 2).validate().is_err());
        assert!(SearchConfig::new(1, 0, 2).validate().is_err());
        assert!(SearchConfig::new(2, 1, 4).validate().is_err());
        assert!(SearchConfig::new(3, 2, 2).validate().is_err());
        let mut c = SearchConfig::new(2, 1, 2);
        c.r_max = 0;
        assert!(c.validate().is_err());
        let mut c = SearchConfig::new(2, 1, 2);
        c.f_eval.clear();
        assert!(c.validate().is_err());
        let mut c = SearchConfig::new(2, 1, 2);
        c.t_set = vec![vec![1]];
        assert!(c.validate().is_err());
        let mut c = SearchConfig::new(2, 1, 2);
        c.f_eval.push(1.25);
        assert!(c.validate().is_err());
    }
}
