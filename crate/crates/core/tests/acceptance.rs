//! Acceptance gate. Each test prints one PASS/FAIL line and asserts on it.
//!
//! Lines are written straight to stdout so they show up without `--nocapture`.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use lstf::benchmark::{run_campaign, CampaignSpec};
use lstf::closed::{evolve_schrodinger, evolve_von_neumann, AnnealRun, FinalState};
use lstf::density;
use lstf::hamiltonian::{hamiltonian_at, AnnealHamiltonian};
use lstf::instances::{four_qubit_frustrated, seven_qubit};
use lstf::ode::Tolerances;
use lstf::open::{
    ame_curve, evolve_ame, frustration_sweep, ground_transition_elements, spectral_density, Axis, BathSpec,
    CouplingSpec,
};
use lstf::problem::{build_two_qubit, CouplerSign, IsingProblem};
use lstf::schedule::SchedulePlan;
use lstf::semiclassical::{
    find_local_minima, line_profile, minima_crossing, minima_trace, MinimaLine, PotentialGrid, TwoQubitPotential,
    EQUAL_SUPERPOSITION,
};
use lstf::spectrum::{eigensystem, magnetizations, max_slope_location, trace_spectrum, DEFAULT_GRID};

fn report(name: &str, checks: &[(String, bool)], elapsed: Duration, budget: Duration) {
    let fast = elapsed <= budget;
    let pass = fast && checks.iter().all(|c| c.1);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
    let mut detail: Vec<String> = checks.iter().map(|c| c.0.clone()).collect();
    detail.push(format!("runtime {:.1}s (< {}s)", elapsed.as_secs_f64(), budget.as_secs()));
    let line = format!("\n[{}] {name}: {}\n", if pass { "PASS" } else { "FAIL" }, detail.join("; "));
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(fast, "{name}: runtime {elapsed:?} over {budget:?}");
    assert!(failed.is_empty(), "{name}: failed checks: {}", failed.join(" | "));
}

fn check(ok: bool, msg: String) -> (String, bool) {
    let mark = if ok { "ok" } else { "MISS" };
    (format!("{msg} [{mark}]"), ok)
}

fn two_qubit(h_x2: f64) -> IsingProblem {
    build_two_qubit(0.8, 1.0, CouplerSign::Positive, h_x2).unwrap()
}

#[test]
fn two_qubit_spectrum() {
    let t = Instant::now();
    let tr = trace_spectrum(&two_qubit(1.0), &SchedulePlan::Aqa, DEFAULT_GRID).unwrap();
    let end = tr.samples.last().unwrap();
    let checks = vec![
        check((tr.gap_at_s_star - 0.4).abs() <= 0.01, format!("gap(s*) = {:.5} GHz, want 0.4 ± 0.01", tr.gap_at_s_star)),
        check((tr.s_star - 0.85).abs() <= 0.01, format!("s* = {:.4}, want 0.85 ± 0.01", tr.s_star)),
        check(
            end.s == 1.0 && (end.gap(1) - 2.0 * (1.0 - 0.8)).abs() <= 1e-9,
            format!("final gap {:.12} vs 2R(1-f) = 0.4", end.gap(1)),
        ),
    ];
    report("two-qubit spectrum", &checks, t.elapsed(), Duration::from_secs(1));
}

/// Largest `|dm^z/ds|` of qubit `k`, refined on a fine grid around the coarse
/// steepest point.
fn max_mz_slope(problem: &IsingProblem, k: usize, centre: f64) -> f64 {
    let mz = |s: f64| {
        let es = eigensystem(&hamiltonian_at(problem, &SchedulePlan::Aqa, s).unwrap()).unwrap();
        magnetizations(problem.n_qubits, &es.state(0)).0[k]
    };
    let h = 1e-6;
    (0..=400)
        .map(|i| (centre - 2e-3 + 4e-3 * i as f64 / 400.0).clamp(h, 1.0 - h))
        .map(|s| ((mz(s + h) - mz(s - h)) / (2.0 * h)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn gap_suppression() {
    let t = Instant::now();
    let mut gaps = Vec::new();
    let mut slopes = Vec::new();
    for h in [0.001, 0.01, 0.1] {
        let p = two_qubit(h);
        let tr = trace_spectrum(&p, &SchedulePlan::Aqa, DEFAULT_GRID).unwrap();
        gaps.push(tr.gap_at_s_star);
        slopes.push(max_mz_slope(&p, 1, max_slope_location(&tr, 1).unwrap()));
    }
    let checks = vec![
        check(gaps[0] < gaps[1] && gaps[1] < gaps[2], format!("gap(s*) over h_x2 = 0.001, 0.01, 0.1: {gaps:?}")),
        check(
            slopes[0] > slopes[1] && slopes[1] > slopes[2],
            format!("max |dm_z/ds| over the same h_x2: {slopes:?}"),
        ),
    ];
    report("gap suppression", &checks, t.elapsed(), Duration::from_secs(10));
}

#[test]
fn semiclassical_suite() {
    let t = Instant::now();
    let res = 512;
    let p = two_qubit(0.01);
    let model = TwoQubitPotential::new(&p, &SchedulePlan::Aqa).unwrap();
    let s_list: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let tr = minima_trace(&model, &s_list, res).unwrap();
    let counts = tr.counts();
    let single_before = counts.iter().filter(|c| c.0 < 0.41).all(|c| c.1 == 1);
    // every sampled s after 0.41 up to the last point with a transverse field
    let double_after = counts.iter().filter(|c| c.0 > 0.41 && c.0 < 1.0).all(|c| c.1 == 2);
    let onset = tr.onset().unwrap_or(f64::NAN);

    let br = tr.crossing_brackets();
    let s_plus = minima_crossing(&model, br[0].0, br[0].1, res).unwrap();
    let grid = PotentialGrid::compute(&model, s_plus, res).unwrap();
    let mins = find_local_minima(&model, &grid).unwrap();
    let split = (mins[0].energy - mins[1].energy).abs();
    let near = |x: f64, y: f64| (x - y).abs() <= 0.05;
    let at_pi = mins.iter().any(|m| near(m.theta2, PI));
    let at_2pi = mins.iter().any(|m| near(m.theta2, TAU) || near(m.theta2, 0.0));
    let line = MinimaLine::between(&model, s_plus, &mins[0], &mins[1]);
    let prof = line_profile(&model, s_plus, &line, 2001).unwrap();
    let i = prof.argmin_d();
    let spec_s_plus = trace_spectrum(&p, &SchedulePlan::Aqa, DEFAULT_GRID).unwrap();
    let spec_s_plus = lstf::spectrum::find_s_plus(&spec_s_plus, 1).unwrap();

    let checks = vec![
        check(single_before, "one minimum for every sampled s < 0.41".into()),
        check(double_after, format!("two minima for every sampled s in (0.41, 1); measured onset {onset:.2}")),
        check(split <= 1e-4, format!("minima split at s+ = {s_plus:.5}: {split:.2e} R")),
        check(at_pi && at_2pi, format!("theta2 of minima {:.4}, {:.4}", mins[0].theta2, mins[1].theta2)),
        check(
            near(prof.theta2[i], EQUAL_SUPERPOSITION),
            format!("argmin D on line at theta2 = {:.4} (3pi/2 = {:.4})", prof.theta2[i], EQUAL_SUPERPOSITION),
        ),
        check(prof.d[i] > 0.1, format!("min D on line at s+ = {:.4}", prof.d[i])),
        check(
            spec_s_plus.iter().any(|&s| (s - s_plus).abs() <= 1e-3),
            format!("spectrum m_z zero-crossing {spec_s_plus:.5?}"),
        ),
    ];
    report("semiclassical suite", &checks, t.elapsed(), Duration::from_secs(60));
}

fn final_success(problem: &IsingProblem, plan: SchedulePlan, t_an: f64) -> (f64, f64) {
    let res = evolve_schrodinger(&AnnealRun::new(problem.clone(), plan, t_an).unwrap()).unwrap();
    (res.success_probability, res.tts.raw)
}

#[test]
fn single_instance_dynamics() {
    let t = Instant::now();
    let p = seven_qubit(1.0).unwrap();
    let (aqa, aqa_tts) = final_success(&p, SchedulePlan::Aqa, 100.0);
    let runs: Vec<(usize, f64, f64)> = [0, 2, 5]
        .into_iter()
        .map(|k| {
            let (s, tts) = final_success(&p, SchedulePlan::lstf(k, 0.2).unwrap(), 100.0);
            (k, s, tts)
        })
        .collect();
    let dqa_tts = runs[0].2;
    let within = |x: f64, target: f64| (x - target).abs() <= 0.05 * target;
    let checks = vec![
        check(aqa < 0.01, format!("AQA success {aqa:.5}")),
        check(runs[0].1 > 0.9999, format!("LSTF k=0 success {:.8}", runs[0].1)),
        check(
            runs[1].1 > 0.99 && runs[2].1 > 0.99,
            format!("LSTF k=2 success {:.6}, k=5 success {:.6}", runs[1].1, runs[2].1),
        ),
        check(within(dqa_tts, 46.7), format!("DQA raw TTS {dqa_tts:.2} ns, want 46.7 ± 5%")),
        check(within(aqa_tts, 49_000.0), format!("AQA raw TTS {:.0} ns, want 49000 ± 5%", aqa_tts)),
    ];
    report("single-instance dynamics", &checks, t.elapsed(), Duration::from_secs(120));
}

#[test]
fn triple_crossing() {
    let t = Instant::now();
    let p = seven_qubit(1.0).unwrap();
    let plan = SchedulePlan::lstf(6, 0.2).unwrap();
    let tr = trace_spectrum(&p, &plan, DEFAULT_GRID).unwrap();
    let gaps: Vec<f64> = tr
        .s_plus_list
        .iter()
        .map(|&s| {
            let es = eigensystem(&hamiltonian_at(&p, &plan, s).unwrap()).unwrap();
            es.values[1] - es.values[0]
        })
        .collect();
    let checks = vec![
        check(tr.s_plus_list.len() == 3, format!("crossings at {:.5?}", tr.s_plus_list)),
        check(gaps.iter().all(|&g| g < 1e-4), format!("gap at crossings {gaps:?}")),
    ];
    report("triple crossing (k=6)", &checks, t.elapsed(), Duration::from_secs(30));
}

#[test]
fn benchmark_campaign() {
    let t = Instant::now();
    let spec = CampaignSpec::default();
    assert_eq!(spec.samples_per_group, 100);
    let c = run_campaign(&spec).unwrap();
    let table = [(61.7, 27.4, 73.3), (60.6, 16.9, 77.7), (54.5, 8.5, 97.7)];
    let mut checks = Vec::new();
    for (g, &(win, sg, _)) in c.summary.iter().zip(&table) {
        checks.push(check(
            (g.dqa_win_pct - win).abs() <= 10.0,
            format!("{} DQA wins {:.1}% vs {win}%", g.edges, g.dqa_win_pct),
        ));
        checks.push(check((g.sg_pct - sg).abs() <= 8.0, format!("{} SG {:.1}% vs {sg}%", g.edges, g.sg_pct)));
    }
    let (lo, hi) = (&c.summary[0], &c.summary[2]);
    checks.push(check(
        hi.sg_dqa_win_pct > 85.0,
        format!("14+16 SG DQA wins {:.1}% ({} SG)", hi.sg_dqa_win_pct, hi.sg_count),
    ));
    checks.push(check(
        lo.sg_dqa_win_pct > 60.0,
        format!("6+8 SG DQA wins {:.1}% ({} SG)", lo.sg_dqa_win_pct, lo.sg_count),
    ));
    checks.push(check(c.summary.iter().all(|g| g.failed == 0), "no failed samples".into()));
    report("benchmark campaign", &checks, t.elapsed(), Duration::from_secs(7200));
}

#[test]
fn closed_system_suite() {
    let t = Instant::now();
    let cases = [
        (two_qubit(1.0), SchedulePlan::Aqa),
        (two_qubit(1.0), SchedulePlan::lstf(1, 0.2).unwrap()),
        (four_qubit_frustrated().unwrap(), SchedulePlan::Aqa),
        (four_qubit_frustrated().unwrap(), SchedulePlan::lstf(0, 0.2).unwrap()),
    ];
    let (mut norm, mut purity, mut dist) = (0.0f64, 0.0f64, 0.0f64);
    for (p, plan) in &cases {
        for t_an in [1.0, 10.0, 50.0] {
            let run = AnnealRun::new(p.clone(), *plan, t_an).unwrap();
            let se = evolve_schrodinger(&run).unwrap();
            let vn = evolve_von_neumann(&run).unwrap();
            let (FinalState::Pure(psi), FinalState::Mixed(rho)) = (&se.state, &vn.state) else { unreachable!() };
            norm = norm.max((density::norm(psi) - 1.0).abs());
            purity = purity.max((density::purity(rho) - 1.0).abs());
            dist = dist.max(density::trace_distance(&density::outer(psi), rho));
        }
    }
    let p = two_qubit(1.0);
    let ham = AnnealHamiltonian::new(&p, &SchedulePlan::Aqa).unwrap();
    let g0 = eigensystem(&ham.dense(0.0)).unwrap().state(0);
    let g1 = eigensystem(&ham.dense(1.0)).unwrap().state(0);
    let overlap: f64 = g0.iter().zip(&g1).map(|(a, b)| a * b).sum();
    let (sudden, _) = final_success(&p, SchedulePlan::Aqa, 1e-6);
    let (adiabatic, _) = final_success(&p, SchedulePlan::Aqa, 500.0);
    let checks = vec![
        check(norm <= 1e-8, format!("max norm drift {norm:.2e}")),
        check(purity <= 1e-8, format!("max purity drift {purity:.2e}")),
        check(dist <= 1e-6, format!("max SE/von Neumann trace distance {dist:.2e}")),
        check(
            (sudden - overlap * overlap).abs() <= 1e-6,
            format!("sudden limit {sudden:.8} vs |<E0(1)|E0(0)>|^2 = {:.8}", overlap * overlap),
        ),
        check(adiabatic > 0.999, format!("adiabatic limit (500 ns) success {adiabatic:.6}")),
    ];
    report("closed-system suite", &checks, t.elapsed(), Duration::from_secs(60));
}

/// `|<g_clear|g_set>|` for the lowest states of the two target sectors.
fn sector_overlap(h: &DMatrix<f64>, k: usize) -> (f64, f64) {
    let dim = h.nrows();
    let idx = |set: bool| (0..dim).filter(|j| (j >> k & 1 == 1) == set).collect::<Vec<_>>();
    let (a, b) = (idx(false), idx(true));
    let block = |ix: &[usize]| DMatrix::from_fn(ix.len(), ix.len(), |r, c| h[(ix[r], ix[c])]);
    let ea = eigensystem(&block(&a)).unwrap();
    let eb = eigensystem(&block(&b)).unwrap();
    let ov: f64 = ea.state(0).iter().zip(eb.state(0)).map(|(x, y)| x * y).sum();
    (ov.abs(), (ea.values[0] - eb.values[0]).abs())
}

#[test]
fn open_system_suite() {
    let t = Instant::now();
    let bath = BathSpec::default();
    let beta = bath.beta();
    let kms = (0..50)
        .map(|i| 0.01 + 60.0 * i as f64 / 49.0)
        .map(|w| {
            let lhs = spectral_density(&bath, -w);
            let rhs = (-beta * w).exp() * spectral_density(&bath, w);
            ((lhs - rhs) / rhs).abs()
        })
        .fold(0.0, f64::max);

    let strong = bath.with_eta_g2(1e-2);
    let mut drift = 0.0f64;
    let mut zero_bath = 0.0f64;
    for plan in [SchedulePlan::Aqa, SchedulePlan::lstf(1, 0.2).unwrap()] {
        for axis in [Axis::X, Axis::Z] {
            let run = AnnealRun::new(two_qubit(1.0), plan, 50.0).unwrap();
            drift = drift.max(evolve_ame(&run, &strong, &CouplingSpec::all(axis)).unwrap().max_trace_drift);
            let quiet = evolve_ame(&run, &bath.with_eta_g2(0.0), &CouplingSpec::all(axis)).unwrap();
            let closed = evolve_schrodinger(&run).unwrap();
            zero_bath = zero_bath.max(density::trace_distance(&quiet.result.state.density(), &closed.state.density()));
        }
    }

    // structural test: only sigma^x on the target connects E0 and E1
    let mut nontarget = 0.0f64;
    let mut unit_dev = 0.0f64;
    let mut overlap_dev = 0.0f64;
    let mut min_after = 1.0f64;
    let both = |n: usize| {
        let mut c = CouplingSpec::all(Axis::X).operators(n).unwrap();
        c.extend(CouplingSpec::all(Axis::Z).operators(n).unwrap());
        c
    };
    for (p, k) in [(two_qubit(1.0), 1usize), (four_qubit_frustrated().unwrap(), 0)] {
        let plan = SchedulePlan::lstf(k, 0.2).unwrap();
        for i in 1..200 {
            let s = i as f64 / 200.0;
            let h = hamiltonian_at(&p, &plan, s).unwrap();
            let es = eigensystem(&h).unwrap();
            if es.values[1] - es.values[0] < 1e-6 {
                continue;
            }
            let mut elems = ground_transition_elements(&p, &plan, s, &CouplingSpec::all(Axis::X)).unwrap();
            elems.extend(ground_transition_elements(&p, &plan, s, &CouplingSpec::all(Axis::Z)).unwrap());
            assert_eq!(elems.len(), both(p.n_qubits).len());
            for ((axis, q), v) in elems {
                if axis == Axis::X && q == k {
                    if s <= 0.2 {
                        unit_dev = unit_dev.max((v.abs() - 1.0).abs());
                    } else {
                        let (ov, _) = sector_overlap(&h, k);
                        overlap_dev = overlap_dev.max((v.abs() - ov).abs());
                        min_after = min_after.min(v.abs());
                    }
                } else {
                    nontarget = nontarget.max(v.abs());
                }
            }
        }
    }
    let checks = vec![
        check(kms <= 1e-10, format!("KMS relative error {kms:.2e} over 50 points")),
        check(drift <= 1e-7, format!("max AME trace drift {drift:.2e}")),
        check(zero_bath <= 1e-6, format!("eta g^2 = 0 vs closed trace distance {zero_bath:.2e}")),
        check(nontarget <= 1e-10, format!("max non-target |<E1|A|E0>| {nontarget:.2e}")),
        check(unit_dev <= 1e-10, format!("target sigma^x magnitude deviation from 1 on [0, s_x] {unit_dev:.2e}")),
        check(
            overlap_dev <= 1e-8,
            format!("after s_x: element vs sector overlap {overlap_dev:.2e}, min magnitude {min_after:.3}"),
        ),
    ];
    report("open-system suite", &checks, t.elapsed(), Duration::from_secs(300));
}

#[test]
fn open_system_curves() {
    let t = Instant::now();
    let tol = Tolerances { rel: 1e-8, abs: 1e-8 };
    let bath = BathSpec::default();
    let p = two_qubit(1.0);
    let aqa_t = [5.0, 10.0, 20.0, 50.0, 100.0, 200.0];
    let mut checks = Vec::new();
    for axis in [Axis::X, Axis::Z] {
        let curve = ame_curve(&p, &SchedulePlan::Aqa, &bath, &CouplingSpec::all(axis), &aqa_t, tol).unwrap();
        // quasi-adiabatic once the closed curve reaches 0.99
        let start = curve.iter().position(|c| c.p_closed >= 0.99).unwrap_or(curve.len());
        let gaps: Vec<f64> = curve[start..].iter().map(|c| c.p_closed - c.p_ground).collect();
        let ok = gaps.len() >= 2 && gaps[0] > 0.0 && gaps.windows(2).all(|w| w[1] > w[0]);
        checks.push(check(
            ok,
            format!("AQA {axis:?}: closed - open from {} ns: {gaps:.4?}", curve.get(start).map_or(f64::NAN, |c| c.t_an)),
        ));
    }

    let lstf = SchedulePlan::lstf(1, 0.2).unwrap();
    let dqa_t = [
        2.0, 5.0, 10.0, 20.0, 25.0, 30.0, 40.0, 50.0, 55.0, 70.0, 100.0, 200.0, 500.0, 1000.0, 1500.0, 2000.0, 3000.0,
    ];
    let x = ame_curve(&p, &lstf, &bath, &CouplingSpec::all(Axis::X), &dqa_t, tol).unwrap();
    let (imin, low) = x
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.p_ground.total_cmp(&b.1.p_ground))
        .map(|(i, c)| (i, c.p_ground))
        .unwrap();
    let onset = x[imin].t_an;
    let recovers = imin + 1 < x.len() && x[imin + 1..].iter().all(|c| c.p_ground > low);
    checks.push(check(
        (25.0..=55.0).contains(&onset) && recovers,
        format!("DQA X dip minimum {low:.4} at t_an = {onset} ns, recovery after it: {recovers}"),
    ));

    let z = ame_curve(&p, &lstf, &bath, &CouplingSpec::all(Axis::Z), &aqa_t, tol).unwrap();
    let dev = z.iter().map(|c| (c.p_ground - c.p_closed).abs()).fold(0.0, f64::max);
    checks.push(check(dev <= 0.05, format!("DQA Z max |open - closed| {dev:.2e}")));

    let window = [100.0, 200.0, 500.0];
    let rows =
        frustration_sweep(&[0.5, 0.65, 0.8], 1.0, 0.2, &bath, &CouplingSpec::all(Axis::X), &window, tol).unwrap();
    let plateau: Vec<f64> = rows
        .chunks(window.len())
        .map(|c| c.iter().map(|r| r.p_ground).sum::<f64>() / window.len() as f64)
        .collect();
    checks.push(check(
        plateau.windows(2).all(|w| w[1] < w[0]),
        format!("plateau p_ground (mean over 100-500 ns) for f = 0.5, 0.65, 0.8: {plateau:.4?}"),
    ));
    report("open-system curves", &checks, t.elapsed(), Duration::from_secs(1800));
}
