//! The `edp` command line: counting, candidate enumeration, spec
//! verification, simulation, yield curves, exhaustive search, and CSV
//! comparisons.
//!
//! Every run is reproducible from its flag set alone; randomized checks
//! take an explicit `--seed` with a fixed default. Exit codes: 0 success,
//! 1 verification or runtime failure, 2 usage error, 3 search budget
//! exceeded.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{EncoderParams, EncodingClass, ProtocolSpec};
use crate::oracle;
use crate::pauli::{PauliElement, Stabilizer};
use crate::search::{self, candidate_count, Objective, SearchConfig};
use crate::sim::{self, BellDiagonal, BranchResult};
use crate::symplectic::{
    enumerate_self_orthogonal, for_each_hyperbolic_basis, is_prime, quotient_form,
    reduction_factor, selforth_count, sp_order, GfVector, QuotientSpace,
};
use crate::{Error, Result};

#[derive(Parser)]
#[command(name = "edp", version, about = "Stabilizer distillation protocols: build, check, simulate, search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the candidate counts for an (n, k, p) search space.
    Count(CountArgs),
    /// Emit every candidate protocol of (n, k, p) as one JSON spec per line.
    Enumerate(EnumerateArgs),
    /// Check a protocol spec: encoder unitarity, conjugation images, the
    /// encoded Bell identity, and dense-against-fast agreement.
    Verify(VerifyArgs),
    /// Run protocol rounds on a Werner input and print the branch
    /// bookkeeping.
    Simulate(SimulateArgs),
    /// Write the yield table of one spec over a fidelity grid as CSV.
    Curve(CurveArgs),
    /// Exhaustively search all candidates of (n, k, p) and rank them.
    Search(SearchArgs),
    /// Compare specs: CSV with one best-round yield column per protocol.
    Compare(CompareArgs),
}

#[derive(Args)]
struct CountArgs {
    #[arg(short = 'n')]
    n: usize,
    #[arg(short = 'k')]
    k: usize,
    #[arg(short = 'p', default_value_t = 2)]
    p: u8,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(short = 'n')]
    n: usize,
    #[arg(short = 'k')]
    k: usize,
    #[arg(short = 'p', default_value_t = 2)]
    p: u8,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Protocol spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Random (input, label) samples per randomized check.
    #[arg(long, default_value_t = 5)]
    samples: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Input Werner fidelity.
    #[arg(long, default_value_t = 0.85)]
    fidelity: f64,
    /// Iteration rounds to trace.
    #[arg(long, default_value_t = 2)]
    rounds: usize,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long = "f-min", default_value_t = 0.6)]
    f_min: f64,
    #[arg(long = "f-max", default_value_t = 1.0)]
    f_max: f64,
    #[arg(long = "f-step", default_value_t = 0.01)]
    f_step: f64,
    /// Maximum iteration rounds per grid point.
    #[arg(long, default_value_t = 4)]
    rounds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    /// Rank by best-round yield at --fidelity.
    Yield,
    /// Rank by the number of grid fidelities where the candidate is
    /// pointwise best.
    Dominance,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(short = 'n')]
    n: usize,
    #[arg(short = 'k')]
    k: usize,
    #[arg(short = 'p', default_value_t = 2)]
    p: u8,
    /// Objective fidelity F*; must lie on the evaluation grid.
    #[arg(long, default_value_t = 0.85)]
    fidelity: f64,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Yield)]
    objective: ObjectiveArg,
    #[arg(long = "f-min", default_value_t = 0.6)]
    f_min: f64,
    #[arg(long = "f-max", default_value_t = 1.0)]
    f_max: f64,
    #[arg(long = "f-step", default_value_t = 0.05)]
    f_step: f64,
    /// Maximum iteration rounds per candidate and grid point.
    #[arg(long, default_value_t = 4)]
    rounds: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Ranked protocols to keep.
    #[arg(long, default_value_t = 100)]
    top: usize,
    /// Refuse to run if the candidate count exceeds this.
    #[arg(long)]
    budget: Option<u64>,
    /// Evaluate only one stabilizer per symmetry orbit.
    #[arg(long, default_value_t = false)]
    symmetry: bool,
    /// Append-only resume log.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Results file; omitted means summary only.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Protocol spec JSON file; repeat for each column.
    #[arg(long, required = true)]
    spec: Vec<PathBuf>,
    #[arg(long = "f-min", default_value_t = 0.6)]
    f_min: f64,
    #[arg(long = "f-max", default_value_t = 1.0)]
    f_max: f64,
    #[arg(long = "f-step", default_value_t = 0.01)]
    f_step: f64,
    #[arg(long, default_value_t = 4)]
    rounds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses the process arguments, runs the command, and returns the exit
/// code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        Error::InvalidParameter(_) | Error::BadFidelity(_) => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Count(args) => cmd_count(&args),
        Command::Enumerate(args) => cmd_enumerate(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Curve(args) => cmd_curve(&args),
        Command::Search(args) => cmd_search(&args),
        Command::Compare(args) => cmd_compare(&args),
    }
}

fn check_nkp(n: usize, k: usize, p: u8) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not prime")));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("need n >= k >= 1, got n = {n}, k = {k}")));
    }
    Ok(())
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_spec(path: &Path) -> Result<ProtocolSpec> {
    let text = std::fs::read_to_string(path)?;
    ProtocolSpec::from_json(&text)
}

/// Inclusive fidelity grid `min, min+step, ..` with the endpoint clamped to
/// `max` so rounding never pushes a point above it.
fn fidelity_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    for f in [min, max] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::BadFidelity(f));
        }
    }
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("f-step must be positive, got {step}")));
    }
    if max < min {
        return Err(Error::InvalidParameter(format!("f-max {max} is below f-min {min}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize;
    let mut grid = Vec::with_capacity(count + 1);
    for i in 0..=count {
        // Snap accumulated float noise to nine decimals so printed grids
        // read as entered (0.8, not 0.7999999999999999).
        let f = ((min + i as f64 * step) * 1e9).round() / 1e9;
        grid.push(if f > max { max } else { f });
    }
    Ok(grid)
}

fn snap_to_grid(grid: &[f64], f_star: f64) -> Result<f64> {
    grid.iter()
        .copied()
        .find(|f| (f - f_star).abs() < 1e-9)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("--fidelity {f_star} is not on the evaluation grid"))
        })
}

fn cmd_count(args: &CountArgs) -> Result<i32> {
    check_nkp(args.n, args.k, args.p)?;
    let (n, k, p) = (args.n as u32, args.k as u32, args.p);
    println!("search space for [[{},{}]]_{}", args.n, args.k, args.p);
    println!("stabilizers (self-orthogonal subspaces): {}", selforth_count(n, k, p));
    println!("encoding classes per stabilizer: {}", sp_order(k, p));
    println!("candidates: {}", candidate_count(args.n, args.k, args.p));
    println!("hyperbolic bases of the full space: {}", sp_order(n, p));
    println!("reduction factor: {}", reduction_factor(n, k, p));
    Ok(0)
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<i32> {
    check_nkp(args.n, args.k, args.p)?;
    let mut out = open_out(&args.out)?;
    let p = args.p;
    let k = args.k;
    for c in enumerate_self_orthogonal(args.n, args.k, p)? {
        let stab = Stabilizer::from_subspace(&c)?;
        let quot = QuotientSpace::new(&c)?;
        let mut failure: Option<Error> = None;
        for_each_hyperbolic_basis(p, 2 * k, |x, y| quotient_form(p, x, y), |pairs| {
            if failure.is_some() {
                return;
            }
            let step = (|| -> Result<()> {
                let xi_high: Vec<GfVector> = pairs.iter().map(|(x, _)| quot.lift(x)).collect();
                let eta_high: Vec<GfVector> = pairs.iter().map(|(_, y)| quot.lift(y)).collect();
                let class = EncodingClass::build(&c, &xi_high, &eta_high)?;
                let spec = ProtocolSpec::with_zero_t(stab.clone(), class)?;
                writeln!(out, "{}", spec.to_canonical_json())?;
                Ok(())
            })();
            if let Err(e) = step {
                failure = Some(e);
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
    }
    out.flush()?;
    Ok(0)
}

fn random_bell_diagonal(rng: &mut ChaCha8Rng, p: u8, pairs: usize) -> BellDiagonal {
    let len = (p as usize).pow(2 * pairs as u32);
    let mut probs: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = probs.iter().sum();
    for q in &mut probs {
        *q /= sum;
    }
    BellDiagonal::new(p, pairs, probs).expect("normalized distribution")
}

fn branches_close(
    dense: &[BranchResult],
    fast: &[BranchResult],
    tol: f64,
) -> std::result::Result<(), String> {
    if dense.len() != fast.len() {
        return Err(format!("branch count {} vs {}", dense.len(), fast.len()));
    }
    for (d, f) in dense.iter().zip(fast) {
        if d.syndrome != f.syndrome {
            return Err(format!("syndrome order {:?} vs {:?}", d.syndrome, f.syndrome));
        }
        if (d.accept_prob - f.accept_prob).abs() > tol {
            return Err(format!(
                "accept({:?}): {} vs {}",
                d.syndrome, d.accept_prob, f.accept_prob
            ));
        }
        match (&d.p_out, &f.p_out) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                for (x, y) in a.probs().iter().zip(b.probs()) {
                    if (x - y).abs() > tol {
                        return Err(format!("P_out({:?}): {} vs {}", d.syndrome, x, y));
                    }
                }
            }
            _ => {
                if d.accept_prob > tol || f.accept_prob > tol {
                    return Err(format!("conditional output presence differs at {:?}", d.syndrome));
                }
            }
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let spec = load_spec(&args.spec)?;
    let (p, n, k) = (spec.p(), spec.n(), spec.k());
    let r = n - k;
    println!("spec: [[{n},{k}]]_{p}, |T| = {}", spec.t_set().len());
    let mut failed = 0usize;
    let mut report = |name: &str, outcome: std::result::Result<String, String>| match outcome {
        Ok(detail) if detail.is_empty() => println!("ok   {name}"),
        Ok(detail) => println!("ok   {name} ({detail})"),
        Err(msg) => {
            println!("FAIL {name}: {msg}");
            failed += 1;
        }
    };

    let params = EncoderParams::from_class(spec.stab(), spec.class())?;
    report("hyperbolic extension of the class", Ok(String::new()));

    let enc = oracle::build_encoder(&params)?;
    let defect = oracle::unitarity_defect(enc.matrix());
    report(
        "encoder unitarity",
        if defect <= 1e-10 {
            Ok(format!("defect {defect:.2e}"))
        } else {
            Err(format!("defect {defect:.2e}"))
        },
    );

    // Fixed state: every stabilizer-basis Z image must fix psi(0).
    {
        let psi = enc.column(0);
        let mut worst = 0.0f64;
        for i in 0..n {
            let op = if i < r {
                params.encoded_z_low_op(i)
            } else {
                params.encoded_z_op(i, enc.lambda_high()[i - r])
            };
            let moved = oracle::apply_pauli(&op, &psi);
            worst = worst.max((moved - &psi).norm());
        }
        report(
            "psi(0) is a joint eigenvector",
            if worst <= 1e-9 { Ok(format!("residual {worst:.2e}")) } else { Err(format!("residual {worst:.2e}")) },
        );
    }

    // Conjugation images: U XZ(e_i) U^dagger against the label arithmetic.
    {
        let u = enc.matrix();
        let ud = u.adjoint();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut unit = vec![0u8; n];
            unit[i] = 1;
            let zero = vec![0u8; n];
            let x_in = GfVector::from_halves(p, &unit, &zero)?;
            let z_in = GfVector::from_halves(p, &zero, &unit)?;
            let x_expect = params.encoded_x_op(i);
            let z_expect = if i < r {
                params.encoded_z_low_op(i)
            } else {
                params.encoded_z_op(i, enc.lambda_high()[i - r])
            };
            for (vin, expect) in [(x_in, x_expect), (z_in, z_expect)] {
                let lhs = u * oracle::xz_matrix(&vin, 0)? * &ud;
                let rhs = oracle::pauli_matrix(&expect)?;
                let diff = (&lhs - &rhs).iter().map(|c| c.norm()).fold(0.0, f64::max);
                worst = worst.max(diff);
            }
        }
        report(
            "conjugation images match the label maps",
            if worst <= 1e-9 { Ok(format!("max deviation {worst:.2e}")) } else { Err(format!("max deviation {worst:.2e}")) },
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    // Encoded Bell identity at random logical labels and syndromes.
    {
        let mut all = true;
        let mut detail = String::new();
        for _ in 0..args.samples.max(1) {
            let e: Vec<u8> = (0..r).map(|_| rng.gen_range(0..p)).collect();
            let w_coords: Vec<u8> = (0..2 * k).map(|_| rng.gen_range(0..p)).collect();
            let w = GfVector::new(p, w_coords)?;
            if !oracle::verify_encoded_bell(&params, &e, &w)? {
                all = false;
                detail = format!("fails at e={e:?}, w={w}");
                break;
            }
        }
        report(
            "encoded Bell identity",
            if all { Ok(format!("{} samples", args.samples.max(1))) } else { Err(detail) },
        );
    }

    // Dense run against the label-map fast path.
    if (p as usize).checked_pow(2 * n as u32).is_some_and(|d| d <= 6561) {
        let mut outcome: std::result::Result<String, String> =
            Ok(format!("{} random inputs, tolerance 1e-9", args.samples.max(1)));
        for _ in 0..args.samples.max(1) {
            let input = random_bell_diagonal(&mut rng, p, n);
            let dense = oracle::run_protocol_dense(&input, &spec, &params)?;
            let fast = sim::run_protocol(&input, &spec)?;
            if let Err(msg) = branches_close(&dense, &fast, 1e-9) {
                outcome = Err(msg);
                break;
            }
        }
        report("dense state-vector run matches the fast path", outcome);
    } else {
        println!("skip dense comparison (state space too large)");
    }

    if failed == 0 {
        println!("all checks passed");
        Ok(0)
    } else {
        println!("{failed} check(s) failed");
        Ok(1)
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let spec = load_spec(&args.spec)?;
    let input = BellDiagonal::werner(spec.p(), spec.n(), args.fidelity)?;
    println!(
        "[[{},{}]]_{} protocol on {} Werner pairs of fidelity {}",
        spec.n(),
        spec.k(),
        spec.p(),
        spec.n(),
        args.fidelity
    );
    println!("first-round branches:");
    for br in sim::run_protocol(&input, &spec)? {
        match br.p_out {
            Some(d) => println!(
                "  s={:?}: accept={} output_fidelity={}",
                br.syndrome,
                br.accept_prob,
                d.fidelity()
            ),
            None => println!("  s={:?}: accept=0 (no conditional output)", br.syndrome),
        }
    }
    println!("iterated zero branch:");
    let mut cur = BellDiagonal::werner(spec.p(), spec.k(), args.fidelity)?;
    for round in 1..=args.rounds {
        let run = sim::iterate_protocol(&cur, &spec, 1)?;
        match run.final_dist {
            Some(d) => {
                println!(
                    "  round {round}: accept={} group_fidelity={}",
                    run.accepts[0],
                    d.fidelity()
                );
                cur = d;
            }
            None => {
                println!("  round {round}: accept=0, protocol degenerates");
                break;
            }
        }
    }
    println!("yield per round (hashing the surviving group):");
    for pt in sim::yield_points(&spec, args.fidelity, args.rounds)? {
        println!(
            "  r={} accept_product={} entropy_bits={} yield={}",
            pt.rounds, pt.accept_product, pt.entropy_bits, pt.yield_value
        );
    }
    Ok(0)
}

fn cmd_curve(args: &CurveArgs) -> Result<i32> {
    let spec = load_spec(&args.spec)?;
    let grid = fidelity_grid(args.f_min, args.f_max, args.f_step)?;
    let table = sim::yield_table(&spec, &grid, args.rounds)?;
    let mut out = open_out(&args.out)?;
    sim::write_yield_csv(&table, &mut out)?;
    out.flush()?;
    Ok(0)
}

fn pauli_string(v: &GfVector) -> String {
    PauliElement::from_vec(v.clone()).to_string()
}

fn cmd_search(args: &SearchArgs) -> Result<i32> {
    let grid = fidelity_grid(args.f_min, args.f_max, args.f_step)?;
    let objective = match args.objective {
        ObjectiveArg::Yield => Objective::YieldAtF { f_star: snap_to_grid(&grid, args.fidelity)? },
        ObjectiveArg::Dominance => Objective::DominanceCount,
    };
    let mut config = SearchConfig::new(args.n, args.k, args.p);
    config.f_eval = grid;
    config.r_max = args.rounds;
    config.objective = objective;
    config.top_n = args.top;
    config.workers = args.workers;
    config.budget = args.budget;
    config.symmetry_reduction = args.symmetry;
    config.checkpoint = args.checkpoint.clone();
    let report = search::search(&config)?;
    println!(
        "candidates: {} ({} stabilizers x {} classes)",
        report.candidates,
        selforth_count(args.n as u32, args.k as u32, args.p),
        sp_order(args.k as u32, args.p)
    );
    println!("evaluated: {} candidates in {} stabilizer chunks", report.evaluated, report.stabilizers);
    println!("reduction factor vs enumerating all encoders: {}", report.reduction);
    println!("objective: {}", config.objective);
    println!("best yield per fidelity:");
    for (f, y) in report.config.f_eval.iter().zip(&report.best_by_f) {
        println!("  F={f} yield={y}");
    }
    for (rank, hit) in report.top.iter().take(3).enumerate() {
        println!("rank {}: objective {}", rank + 1, hit.objective);
        let stab = hit.spec.stab();
        let gens: Vec<String> = stab
            .generators()
            .iter()
            .zip(stab.lambda())
            .map(|(g, l)| format!("{} (lambda {})", pauli_string(g), l))
            .collect();
        println!("  stabilizer: {}", gens.join("; "));
        let xs: Vec<String> = hit.spec.class().h_rows().iter().map(pauli_string).collect();
        let zs: Vec<String> = hit.spec.class().g_rows().iter().map(pauli_string).collect();
        println!("  logical X: {}", xs.join("; "));
        println!("  logical Z: {}", zs.join("; "));
        println!("  spec: {}", hit.spec.to_canonical_json());
    }
    if let Some(path) = &args.out {
        let mut out = BufWriter::new(File::create(path)?);
        search::write_report(&report, &mut out)?;
        out.flush()?;
        println!("results written to {}", path.display());
    }
    Ok(0)
}

fn column_names(paths: &[PathBuf]) -> Vec<String> {
    let mut names = Vec::with_capacity(paths.len());
    for path in paths {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "spec".to_string());
        let clean: String = stem
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let mut name = clean.clone();
        let mut suffix = 2;
        while names.contains(&name) {
            name = format!("{clean}_{suffix}");
            suffix += 1;
        }
        names.push(name);
    }
    names
}

fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    let grid = fidelity_grid(args.f_min, args.f_max, args.f_step)?;
    let names = column_names(&args.spec);
    let mut columns = Vec::with_capacity(args.spec.len());
    for path in &args.spec {
        let spec = load_spec(path)?;
        columns.push(sim::yield_curve(&spec, &grid, args.rounds)?);
    }
    let mut out = open_out(&args.out)?;
    let header: Vec<String> = names.iter().map(|n| format!("yield_{n}")).collect();
    writeln!(out, "F,{}", header.join(","))?;
    for (i, f) in grid.iter().enumerate() {
        let row: Vec<String> = columns.iter().map(|c| c[i].yield_value.to_string()).collect();
        writeln!(out, "{f},{}", row.join(","))?;
    }
    out.flush()?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_inclusive_and_clamped() {
        let g = fidelity_grid(0.6, 1.0, 0.01).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], 0.6);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.iter().all(|f| (0.0..=1.0).contains(f)));
        let g = fidelity_grid(0.6, 1.0, 0.05).unwrap();
        assert_eq!(g.len(), 9);
        assert!(snap_to_grid(&g, 0.85).is_ok());
        assert!(snap_to_grid(&g, 0.83).is_err());
        assert!(fidelity_grid(0.9, 0.6, 0.01).is_err());
        assert!(fidelity_grid(0.6, 1.0, 0.0).is_err());
        assert!(fidelity_grid(-0.1, 1.0, 0.01).is_err());
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(exit_code(&Error::BudgetExceeded { candidates: 90u32.into(), budget: 10 }), 3);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code(&Error::BadFidelity(2.0)), 2);
        assert_eq!(exit_code(&Error::InvalidSpec("x".into())), 1);
        assert_eq!(exit_code(&Error::BadProducts), 1);
    }

    #[test]
    fn column_names_are_sanitized_and_unique() {
        let names = column_names(&[
            PathBuf::from("a/best-42.json"),
            PathBuf::from("b/best-42.json"),
            PathBuf::from("qpa.json"),
        ]);
        assert_eq!(names, vec!["best_42", "best_42_2", "qpa"]);
    }
}
