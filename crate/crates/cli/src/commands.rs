//! One function per subcommand. Each writes its files under the output
//! directory and prints a short summary.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use lstf::benchmark::{run_campaign, run_heuristic, write_records_jsonl, write_summary_csv, SG_THRESHOLD};
use lstf::closed::{sweep_t_an, write_sweep_csv, AnnealRun};
use lstf::open::{
    ame_curve, energy_scale_sweep, eigenstate_populations, frustration_sweep, metadata, write_curve_csv,
    write_populations_csv, DEFAULT_REPORT_POINTS,
};
use lstf::problem::IsingProblem;
use lstf::schedule::SchedulePlan;
use lstf::semiclassical::{
    find_local_minima, line_profile, minima_crossing, minima_trace, MinimaLine, PotentialGrid, TwoQubitPotential,
};
use lstf::spectrum::{find_s_plus, trace_spectrum, uniform_grid};
use lstf::table::write_rows_csv;

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::Failure;

fn out_dir(cfg: &RunConfig, command: &'static str) -> Result<OutDir, Failure> {
    let root = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(command));
    OutDir::create(&root, command, cfg)
}

fn load(cfg: &RunConfig) -> Result<(IsingProblem, SchedulePlan), Failure> {
    let problem = cfg.problem.load()?;
    for w in problem.warnings() {
        log::warn!("{w}");
    }
    let plan = cfg.plan.build()?;
    plan.validate_for(problem.n_qubits)?;
    Ok((problem, plan))
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    let (problem, plan) = load(cfg)?;
    let trace = trace_spectrum(&problem, &plan, cfg.spectrum.grid)?;
    let crossings = (0..problem.n_qubits)
        .map(|k| find_s_plus(&trace, k))
        .collect::<lstf::Result<Vec<_>>>()?;
    let class = if trace.gap_at_s_star <= SG_THRESHOLD { "SG" } else { "LG" };
    let out = out_dir(cfg, "spectrum")?;
    out.text("spectrum.csv", |w| trace.write_csv(w))?;
    out.json(
        "summary.json",
        &json!({
            "s_star": trace.s_star,
            "gap": trace.gap_at_s_star,
            "class": class,
            "s_plus_list": trace.s_plus_list,
            "mz_zero_crossings": crossings,
            "samples": trace.samples.len(),
        }),
    )?;
    println!("s* = {:.4}  gap = {:.4e} GHz  ({class})", trace.s_star, trace.gap_at_s_star);
    if !trace.s_plus_list.is_empty() {
        println!("s+ = {:.4?}", trace.s_plus_list);
    }
    Ok(())
}

pub fn semiclassical(cfg: &RunConfig) -> Result<(), Failure> {
    let (problem, plan) = load(cfg)?;
    if problem.n_qubits != 2 {
        return Err(Failure::Config(format!(
            "the semiclassical analysis needs a two-qubit problem, got {} qubits",
            problem.n_qubits
        )));
    }
    let sc = &cfg.semiclassical;
    if sc.s_points < 2 {
        return Err(Failure::Config("semiclassical.s_points must be at least 2".into()));
    }
    let model = TwoQubitPotential::new(&problem, &plan)?;
    let s_list = uniform_grid(sc.s_points);
    let trace = minima_trace(&model, &s_list, sc.resolution)?;
    let out = out_dir(cfg, "semiclassical")?;
    out.text("minima.csv", |w| trace.write_csv(w))?;

    let s_plus = match trace.crossing_brackets().first() {
        Some(&(lo, hi)) => Some(minima_crossing(&model, lo, hi, sc.resolution)?),
        None => None,
    };
    let mut minima = Vec::new();
    let mut line = serde_json::Value::Null;
    if let Some(s) = s_plus {
        let grid = PotentialGrid::compute(&model, s, sc.resolution)?;
        out.text(&format!("surface_s{s:.5}.csv"), |w| grid.write_csv(w))?;
        minima = find_local_minima(&model, &grid)?;
        if let [a, b, ..] = minima.as_slice() {
            let l = MinimaLine::between(&model, s, a, b);
            let prof = line_profile(&model, s, &l, sc.line_samples)?;
            out.text("line.csv", |w| prof.write_csv(w))?;
            let i = prof.argmin_d();
            line = json!({
                "line": l,
                "barrier": prof.barrier,
                "min_d": prof.d[i],
                "argmin_theta1": prof.theta1[i],
                "argmin_theta2": prof.theta2[i],
            });
        }
    }
    for &s in &sc.surfaces {
        let grid = PotentialGrid::compute(&model, s, sc.resolution)?;
        out.text(&format!("surface_s{s:.5}.csv"), |w| grid.write_csv(w))?;
    }
    let onset = trace.onset();
    out.json(
        "summary.json",
        &json!({
            "onset": onset,
            "s_plus": s_plus,
            "minima_at_s_plus": minima,
            "line_profile": line,
            "resolution": sc.resolution,
            "s_points": sc.s_points,
            "line_samples": sc.line_samples,
        }),
    )?;
    match onset {
        Some(o) => println!("second minimum appears at s = {o:.3}"),
        None => println!("a single minimum throughout"),
    }
    if let Some(s) = s_plus {
        println!("minima cross at s+ = {s:.5}");
    }
    Ok(())
}

fn population_name(t_an: f64) -> String {
    format!("populations_t{t_an}.csv")
}

pub fn dynamics(cfg: &RunConfig) -> Result<(), Failure> {
    let dy = &cfg.dynamics;
    if dy.t_an.is_empty() {
        return Err(Failure::Config("dynamics.t_an is empty".into()));
    }
    let tol = dy.tolerances();
    let has_problem =
        cfg.problem.two_qubit.is_some() || cfg.problem.instance.is_some() || cfg.problem.builtin.is_some();
    let sweeps = !dy.f_sweep.is_empty() || !dy.r_sweep.is_empty();
    let loaded = if has_problem || !sweeps { Some(load(cfg)?) } else { None };
    let bath = if dy.open || sweeps { Some(cfg.bath.spec()?) } else { None };
    let coupling = cfg.bath.coupling();
    let out = out_dir(cfg, "dynamics")?;

    if let Some((problem, plan)) = &loaded {
        match bath {
            Some(bath) if dy.open => {
                let points = ame_curve(problem, plan, &bath, &coupling, &dy.t_an, tol)?;
                out.text("curve.csv", |w| write_curve_csv(&points, w))?;
                if dy.populations {
                    let report = uniform_grid(DEFAULT_REPORT_POINTS);
                    for &t_an in &dy.t_an {
                        let run = AnnealRun::new(problem.clone(), *plan, t_an)?.with_tolerances(tol);
                        let rows = eigenstate_populations(&run, &bath, &coupling, &report)?;
                        out.text(&population_name(t_an), |w| write_populations_csv(&rows, w))?;
                    }
                }
                println!("{:>10}  {:>10}  {:>10}", "t_an (ns)", "P open", "P closed");
                for p in &points {
                    println!("{:>10}  {:>10.5}  {:>10.5}", p.t_an, p.p_ground, p.p_closed);
                }
            }
            _ => {
                let points = sweep_t_an(problem, plan, &dy.t_an, tol, dy.solver)?;
                out.text("sweep.csv", |w| write_sweep_csv(&points, w))?;
                println!("{:>10}  {:>10}  {:>12}", "t_an (ns)", "P success", "TTS (ns)");
                for p in &points {
                    println!("{:>10}  {:>10.5}  {:>12.4e}", p.t_an, p.success_probability, p.tts_raw);
                }
            }
        }
    }
    if let Some(bath) = bath.filter(|_| sweeps) {
        let r = cfg.problem.two_qubit.map_or(1.0, |t| t.r);
        if !dy.f_sweep.is_empty() {
            let rows = frustration_sweep(&dy.f_sweep, r, cfg.plan.s_x, &bath, &coupling, &dy.t_an, tol)?;
            out.text("frustration.csv", |w| write_rows_csv(&rows, w))?;
            println!("frustration sweep: {} rows", rows.len());
        }
        if !dy.r_sweep.is_empty() {
            let rows = energy_scale_sweep(&dy.r_sweep, dy.sweep_f, cfg.plan.s_x, &bath, &coupling, &dy.t_an, tol)?;
            out.text("energy_scale.csv", |w| write_rows_csv(&rows, w))?;
            println!("energy-scale sweep: {} rows", rows.len());
        }
    }
    let meta = match bath {
        Some(b) => metadata(&b, &coupling),
        None => json!({ "solver": dy.solver, "tolerances": tol }),
    };
    out.json("metadata.json", &meta)?;
    Ok(())
}

pub fn benchmark(cfg: &RunConfig) -> Result<(), Failure> {
    let campaign = run_campaign(&cfg.benchmark)?;
    let out = out_dir(cfg, "benchmark")?;
    out.text("records.jsonl", |w| write_records_jsonl(&campaign.records, w))?;
    out.text("summary.csv", |w| write_summary_csv(&campaign.summary, w))?;
    out.json("families.json", &campaign.families)?;
    println!("{:>8}  {:>8}  {:>8}  {:>8}  {:>12}", "edges", "samples", "DQA win%", "SG%", "SG DQA win%");
    for g in &campaign.summary {
        println!(
            "{:>8}  {:>8}  {:>8.1}  {:>8.1}  {:>12.1}",
            g.edges, g.samples, g.dqa_win_pct, g.sg_pct, g.sg_dqa_win_pct
        );
        if g.failed > 0 {
            println!("          {} failed samples", g.failed);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct LstfRow {
    k: usize,
    success: f64,
    e_res: f64,
    tts: f64,
}

pub fn heuristic(cfg: &RunConfig) -> Result<(), Failure> {
    let problem = cfg.problem.load()?;
    let h = &cfg.heuristic;
    let rep = run_heuristic(&problem, h.t_an, h.s_x, cfg.dynamics.tolerances())?;
    let out = out_dir(cfg, "heuristic")?;
    let rows: Vec<LstfRow> = rep
        .lstf
        .iter()
        .map(|l| LstfRow { k: l.k, success: l.outcome.success, e_res: l.outcome.e_res, tts: l.outcome.tts })
        .collect();
    out.text("lstf.csv", |w| write_rows_csv(&rows, w))?;
    let speedup = rep.speedup();
    out.json("heuristic.json", &json!({ "report": rep, "speedup": speedup.is_finite().then_some(speedup) }))?;
    println!("AQA  P = {:.5}  TTS = {:.4e} ns", rep.aqa.success, rep.aqa.tts);
    for r in &rows {
        println!("k={:<3} P = {:.5}  TTS = {:.4e} ns  E_res = {:.3e}", r.k, r.success, r.tts, r.e_res);
    }
    match rep.best_k {
        Some(k) => println!("best: LSTF on qubit {k}, speedup {speedup:.3}"),
        None => println!("no LSTF run beats AQA"),
    }
    Ok(())
}
