use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use specden::chebyshev::{kv_pair, verify_leg_bound};
use specden::diff::{
    diff_spectrum_pipeline, exact_diff_moments, exact_diff_spectrum, four_vertex_pair, total_diff_walks, DiffMode,
};
use specden::distinguishers::{coupling_experiment, loop_game, marble_experiment, probe_budget, probe_game, GameResult};
use specden::instances::{default_mom_n, default_rw_n, relabel_random, InstanceParams, Variant, Which};
use specden::moments::{estimate_moments_walks, exact_moments, exact_moments_dense, Accuracy, MomentVector};
use specden::reconstruct::{sde_pipeline, solve_moment_lp, MomentWeights, SdeOptions};
use specden::spectrum::{
    dense_symmetric_eigenvalues, mixture_spectrum, mom_instance_spectrum, ring_eigen_counts, rw_instance_spectrum,
    wasserstein1,
};
use specden::verify::{run_criterion, Budget, VerifySummary, CRITERIA};
use specden::{Error, ExperimentReport, Interval, RandomSource, Result, SpectralMeasure, WeightedGraph};

use crate::{
    BudgetArg, ChebArgs, Cli, Command, CoupleArgs, DiffArgs, DistinguishArgs, GameArg, GenArgs, InstanceArgs,
    MomentsArgs, ReconstructArgs, SdeArgs, SpectrumArgs, VariantArg, VerifyArgs, WeightsArg, WhichArg,
};

/// Graphs up to this size get dense reference values in reports.
const DENSE_REFERENCE_LIMIT: usize = 2048;

pub fn run(cli: &Cli) -> Result<()> {
    let source = RandomSource::new(cli.seed);
    match &cli.command {
        Command::Gen(a) => gen(a, source),
        Command::Spectrum(a) => spectrum(a, cli.seed),
        Command::Moments(a) => moments(a, cli.seed, source),
        Command::Reconstruct(a) => reconstruct(a, cli.seed),
        Command::Sde(a) => sde(a, cli.seed, source),
        Command::Diff(a) => diff(a, cli.seed, source),
        Command::Couple(a) => couple(a, cli.seed, source),
        Command::Distinguish(a) => distinguish(a, cli.seed, source),
        Command::Cheb(a) => cheb(a, cli.seed),
        Command::Verify(a) => verify(a, cli.seed),
    }
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::Mom => Variant::Mom,
        VariantArg::Rw => Variant::Rw,
        VariantArg::Mixture => Variant::Mixture,
    }
}

fn which(w: WhichArg) -> Which {
    match w {
        WhichArg::G1 => Which::G1,
        WhichArg::G2 => Which::G2,
    }
}

fn weights(w: WeightsArg) -> MomentWeights {
    match w {
        WeightsArg::Uniform => MomentWeights::Uniform,
        WeightsArg::Geometric => MomentWeights::Geometric,
    }
}

fn default_n(v: VariantArg, ell: usize, n: Option<usize>) -> Result<usize> {
    match (n, v) {
        (Some(n), _) => Ok(n),
        (None, VariantArg::Mom) => default_mom_n(ell),
        (None, VariantArg::Rw) => default_rw_n(ell),
        (None, VariantArg::Mixture) => Err(Error::InvalidParameter("mixture instances need --n".into())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_graph(path: &Path) -> Result<WeightedGraph> {
    WeightedGraph::read_edge_list(open(path)?)
}

fn write_measure(measure: &SpectralMeasure, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            measure.write_csv(&mut w)?;
            w.flush()?;
        }
        None => measure.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

/// Stamps the wall clock and writes the report to `path`, or to stdout when
/// `to_stdout` is set and no path is given.
fn emit(mut report: ExperimentReport, started: Instant, path: Option<&PathBuf>, to_stdout: bool) -> Result<()> {
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    match path {
        Some(p) => {
            let mut w = create(p)?;
            report.write_json(&mut w)?;
            w.flush()?;
        }
        None if to_stdout => report.write_json(io::stdout().lock())?,
        None => {}
    }
    Ok(())
}

fn dense_measure(graph: &WeightedGraph) -> Result<SpectralMeasure> {
    let eig = dense_symmetric_eigenvalues(&graph.dense_normalized_adjacency()?)?;
    SpectralMeasure::from_values(&eig, Interval::UNIT)
}

fn instance_params(a: &InstanceArgs, w: WhichArg) -> Result<InstanceParams> {
    Ok(InstanceParams {
        ell: a.ell,
        n: default_n(a.variant, a.ell, a.n)?,
        variant: variant(a.variant),
        alpha: a.alpha,
        which: which(w),
    })
}

fn gen(a: &GenArgs, source: RandomSource) -> Result<()> {
    let params = instance_params(&a.instance, a.which)?;
    let mut graph = params.generate()?;
    if a.relabel {
        graph = relabel_random(&graph, source)?;
    }
    let mut w = create(&a.out)?;
    graph.write_edge_list(&mut w)?;
    w.flush()?;
    Ok(())
}

fn spectrum(a: &SpectrumArgs, seed: u64) -> Result<()> {
    let started = Instant::now();
    let mut report = ExperimentReport::new("spectrum", seed);
    let measure = if let Some(path) = &a.graph {
        let graph = read_graph(path)?;
        report = report.param("graph", path.display().to_string())?;
        report.measure("vertices", graph.vertex_count())?;
        dense_measure(&graph)?
    } else if let Some(len) = a.cycle {
        report = report.param("cycle", len)?;
        SpectralMeasure::from_counts(&ring_eigen_counts(len)?, Interval::UNIT)?
    } else if let Some(v) = a.variant {
        let ell = a.ell.ok_or_else(|| Error::InvalidParameter("--variant needs --ell".into()))?;
        let n = default_n(v, ell, a.n)?;
        let (pair, reference) = match v {
            VariantArg::Mom => (mom_instance_spectrum(ell, n)?, 0.25 / ell as f64),
            VariantArg::Rw => (rw_instance_spectrum(ell, n)?, 0.5 / ell as f64),
            VariantArg::Mixture => {
                let alpha = a.alpha.ok_or_else(|| Error::InvalidParameter("mixture needs --alpha".into()))?;
                report = report.param("alpha", alpha)?;
                (mixture_spectrum(ell, alpha, n)?, (2.0 * alpha - 1.0) / ell as f64)
            }
        };
        report = report.param("variant", format!("{v:?}").to_lowercase())?.param("ell", ell)?.param("n", n)?;
        report.compare("w1", wasserstein1(&pair.0, &pair.1)?, reference)?;
        match a.which {
            WhichArg::G1 => pair.0,
            WhichArg::G2 => pair.1,
        }
    } else {
        return Err(Error::InvalidParameter("give one of --graph, --variant or --cycle".into()));
    };
    report.measure("atoms", measure.atoms())?;
    write_measure(&measure, a.out.as_ref())?;
    emit(report, started, a.json.as_ref(), false)
}

fn moments(a: &MomentsArgs, seed: u64, source: RandomSource) -> Result<()> {
    let started = Instant::now();
    let mut report = ExperimentReport::new("moments", seed).param("k", a.k)?;
    let m = match (&a.graph, &a.spectrum) {
        (Some(path), _) => {
            let graph = read_graph(path)?;
            report = report.param("graph", path.display().to_string())?;
            match a.walks {
                Some(w) => {
                    report = report.param("walks_per_moment", w)?;
                    let est = estimate_moments_walks(&graph, a.k, w, source)?;
                    if graph.vertex_count() <= DENSE_REFERENCE_LIMIT {
                        report.references.insert("moments".into(), json!(exact_moments_dense(&graph, a.k)?.values));
                    }
                    est
                }
                None => exact_moments_dense(&graph, a.k)?,
            }
        }
        (None, Some(path)) => {
            report = report.param("spectrum", path.display().to_string())?;
            exact_moments(&SpectralMeasure::read_csv(open(path)?, None)?, a.k)?
        }
        (None, None) => return Err(Error::InvalidParameter("give --graph or --spectrum".into())),
    };
    report.measure("moments", &m.values)?;
    report.measure("accuracy", m.accuracy)?;
    emit(report, started, a.json.as_ref(), true)
}

fn targets_from_report(path: &Path) -> Result<Vec<f64>> {
    let report = ExperimentReport::read_json(open(path)?)?;
    let values = report
        .measured
        .get("moments")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no measured moments", path.display())))?;
    values
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| Error::InvalidParameter("moments must be numbers".into())))
        .collect()
}

fn reconstruct(a: &ReconstructArgs, seed: u64) -> Result<()> {
    let started = Instant::now();
    let values = match &a.from {
        Some(path) => targets_from_report(path)?,
        None => a.moments.clone(),
    };
    let targets = MomentVector::new(values, Accuracy::Exact)?;
    let interval = Interval::new(a.lo, a.hi)?;
    let d = a.grid.unwrap_or(4 * targets.k() + 1);
    let r = solve_moment_lp(&targets, interval, d, weights(a.weights))?;
    let mut report = ExperimentReport::new("reconstruct", seed)
        .param("targets", &targets.values)?
        .param("interval", [a.lo, a.hi])?
        .param("grid", d)?
        .param("weights", format!("{:?}", a.weights).to_lowercase())?;
    report.measure("residual", r.residual)?;
    report.measure("atoms", r.measure.atoms())?;
    write_measure(&r.measure, a.out.as_ref())?;
    emit(report, started, a.json.as_ref(), false)
}

fn sde(a: &SdeArgs, seed: u64, source: RandomSource) -> Result<()> {
    let started = Instant::now();
    let graph = read_graph(&a.graph)?;
    let options = SdeOptions { c: a.c, budget_cap: a.budget, strict: a.strict, weights: weights(a.weights) };
    let r = sde_pipeline(&graph, a.eps, options, source)?;
    let mut report = ExperimentReport::new("sde", seed)
        .param("graph", a.graph.display().to_string())?
        .param("eps", a.eps)?
        .param("c", a.c)?
        .param("budget", a.budget)?
        .param("strict", a.strict)?;
    report.measure("k", r.k)?;
    report.measure("target_delta", r.target_delta)?;
    report.measure("walks_per_moment", r.walks_per_moment)?;
    report.measure("required_walks", r.required_walks)?;
    report.measure("total_walks", r.total_walks)?;
    report.measure("capped", r.capped)?;
    report.measure("moments", &r.moments.values)?;
    report.measure("residual", r.result.residual)?;
    report.measure("atoms", r.result.measure.atoms())?;
    if graph.vertex_count() <= DENSE_REFERENCE_LIMIT {
        report.compare("w1_to_dense", wasserstein1(&r.result.measure, &dense_measure(&graph)?)?, a.eps)?;
    }
    write_measure(&r.result.measure, a.out.as_ref())?;
    emit(report, started, a.json.as_ref(), false)
}

fn diff(a: &DiffArgs, seed: u64, source: RandomSource) -> Result<()> {
    let started = Instant::now();
    let (g1, g2, label) = match (&a.g1, &a.g2) {
        (Some(p1), Some(p2)) => {
            (read_graph(p1)?, read_graph(p2)?, format!("{} {}", p1.display(), p2.display()))
        }
        _ => {
            let (g1, g2) = four_vertex_pair()?;
            (g1, g2, "four-vertex pair".to_string())
        }
    };
    let mut report = ExperimentReport::new("diff", seed).param("graphs", label)?;
    if a.exact {
        let exact = exact_diff_spectrum(&g1, &g2)?;
        report.measure("atoms", exact.atoms())?;
        write_measure(&exact, a.out.as_ref())?;
        return emit(report, started, a.json.as_ref(), false);
    }
    let mode = match a.eps {
        Some(eps) => DiffMode::Theorem { eps, c: a.big_c, delta: a.delta },
        None => DiffMode::Relaxed { k: a.k, theta: a.theta, delta: a.delta },
    };
    let (k, theta, delta) = mode.parameters()?;
    report = report.param("k", k)?.param("theta", theta)?.param("delta", delta)?.param("budget", a.budget)?;
    report.measure("required_walks", total_diff_walks(k, theta, delta))?;
    let r = diff_spectrum_pipeline(&g1, &g2, mode, a.budget, source)?;
    report.measure("total_walks", r.estimate.total_walks())?;
    report.measure("moments", &r.estimate.values)?;
    if g1.vertex_count() <= DENSE_REFERENCE_LIMIT {
        report.references.insert("moments".into(), json!(exact_diff_moments(&g1, &g2, k)?));
    }
    if let Some(w) = r.w1_to_exact {
        report.measure("w1_to_exact", w)?;
    }
    report.measure("residual", r.result.residual)?;
    report.measure("atoms", r.result.measure.atoms())?;
    write_measure(&r.result.measure, a.out.as_ref())?;
    emit(report, started, a.json.as_ref(), false)
}

fn couple(a: &CoupleArgs, seed: u64, source: RandomSource) -> Result<()> {
    let started = Instant::now();
    let s = coupling_experiment(a.ell, a.n, a.m, a.t, a.trials, source)?;
    let mut report = ExperimentReport::new("couple", seed)
        .param("ell", a.ell)?
        .param("n", a.n)?
        .param("m", a.m)?
        .param("T", a.t)?
        .param("trials", a.trials)?;
    report.compare("p_unequal", s.p_unequal, s.tv_bound)?;
    report.measure("sigma", s.sigma)?;
    report.compare("event1_failure_rate", s.event1_failures as f64 / s.trials as f64, s.event1_bound)?;
    report.compare("event2_failure_rate", s.event2_failures as f64 / s.trials as f64, s.event2_bound)?;
    report.compare("implication_violations", s.implication_violations, 0)?;
    report.measure("tv_bound", s.tv_bound)?;
    emit(report, started, a.json.as_ref(), true)
}

fn game_report(report: &mut ExperimentReport, g: &GameResult, success_bound: Option<f64>) -> Result<()> {
    let rate = g.successes as f64 / g.trials as f64;
    match success_bound {
        Some(b) => report.compare("success", rate, b)?,
        None => report.measure("success", rate)?,
    }
    report.measure("successes", g.successes)?;
    report.measure("ties", g.ties)?;
    report.measure("advantage", g.advantage)?;
    Ok(())
}

fn required<T: Copy>(v: Option<T>, flag: &str, game: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("the {game} game needs --{flag}")))
}

fn distinguish(a: &DistinguishArgs, seed: u64, source: RandomSource) -> Result<()> {
    let started = Instant::now();
    let mut report = ExperimentReport::new("distinguish", seed);
    match a.game {
        GameArg::Loop => {
            let ell = a.ell.unwrap_or(5);
            let n = match a.n {
                Some(n) => n,
                None => default_rw_n(ell)?,
            };
            let (m, t) = (required(a.m, "m", "loop")?, required(a.t, "T", "loop")?);
            report = report
                .param("game", "loop")?
                .param("ell", ell)?
                .param("n", n)?
                .param("m", m)?
                .param("T", t)?
                .param("seeds", a.seeds)?;
            let g = loop_game(ell, n, m, t, a.seeds, source)?;
            // a test with success p has total variation at least 2p − 1
            game_report(&mut report, &g, Some(0.5 + 0.5 * g.theoretical_bound))?;
        }
        GameArg::Probe => {
            let ell = a.ell.unwrap_or(5);
            let n = match a.n {
                Some(n) => n,
                None => default_rw_n(ell)?,
            };
            report = report
                .param("game", "probe")?
                .param("ell", ell)?
                .param("n", n)?
                .param("reps", a.reps)?
                .param("seeds", a.seeds)?;
            let g = probe_game(ell, n, a.reps, a.seeds, source)?;
            game_report(&mut report, &g, None)?;
            report.measure("step_budget", probe_budget(ell, a.reps))?;
        }
        GameArg::Marble => {
            let (alpha, s) = (required(a.alpha, "alpha", "marble")?, required(a.s, "s", "marble")?);
            let n = required(a.n, "n", "marble")?;
            report = report
                .param("game", "marble")?
                .param("alpha", alpha)?
                .param("n", n)?
                .param("s", s)?
                .param("trials", a.trials)?
                .param("replacement", a.replacement)?;
            let g = marble_experiment(alpha, n, s, a.replacement, a.trials, source)?;
            let success = g.advantage + 0.5;
            report.compare("success", success, 0.5 + 0.5 * g.theoretical_bound)?;
            report.measure("successes", g.successes)?;
            report.measure("ties", g.ties)?;
            report.measure("tv_bound", g.theoretical_bound)?;
        }
    }
    emit(report, started, a.json.as_ref(), true)
}

fn cheb(a: &ChebArgs, seed: u64) -> Result<()> {
    let started = Instant::now();
    let (p, q) = kv_pair(a.ell)?;
    let leg = verify_leg_bound(&p, &q, a.ell)?;
    let mut report = ExperimentReport::new("cheb", seed).param("ell", a.ell)?;
    report.measure("c", leg.c)?;
    report.compare("bound", leg.bound, leg.w1)?;
    report.compare("W1", leg.w1, 2.0 / a.ell as f64)?;
    report.compare("witness", leg.witness, leg.w1)?;
    emit(report, started, a.json.as_ref(), true)
}

fn verify(a: &VerifyArgs, seed: u64) -> Result<()> {
    let budget = match a.budget {
        BudgetArg::Quick => Budget::Quick,
        BudgetArg::Full => Budget::Full,
    };
    let ids: Vec<u8> = if a.only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { a.only.clone() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(Error::InvalidParameter(format!("no criterion {bad}")));
    }
    let mut criteria = Vec::with_capacity(ids.len());
    for id in ids {
        let r = run_criterion(id, budget, seed);
        println!("{:>2} {} [{:.2} s] {}: {}", r.id, if r.passed { "PASS" } else { "FAIL" }, r.seconds, r.name, r.detail);
        criteria.push(r);
    }
    let all_passed = criteria.iter().all(|c| c.passed);
    let summary = VerifySummary { budget, seed, criteria, all_passed };
    if let Some(path) = &a.json {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}
