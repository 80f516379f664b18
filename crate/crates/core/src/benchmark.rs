//! Random 7-qubit instances, the per-qubit LSTF heuristic, small/large-gap
//! classification and campaign statistics.

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed::{evolve_schrodinger, AnnealResult, AnnealRun};
use crate::error::{domain, Result};
use crate::graph::{generate_graph_family, Graph, GraphFamily, N_VERTICES};
use crate::hamiltonian::AnnealHamiltonian;
use crate::ode::Tolerances;
use crate::problem::IsingProblem;
use crate::schedule::{SchedulePlan, DEFAULT_S_X};
use crate::spectrum::locate_min_gap;
use crate::table::write_rows_csv;

/// Problems whose AQA minimum gap is at most this (GHz) are small-gap.
pub const SG_THRESHOLD: f64 = 1.0 / TAU;
/// Coupler strength in units of `R`.
pub const COUPLER: f64 = -0.5;
/// Coarse grid for the minimum-gap search before golden refinement.
pub const CLASSIFY_GRID: usize = 201;

/// `n` iid standard-normal fields rescaled so that `max|h| = R`.
pub fn draw_fields(rng: &mut ChaCha8Rng, n: usize, energy_scale: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let max = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    raw.iter().map(|x| x / max * energy_scale).collect()
}

/// Fields from a fresh generator seeded with `seed`.
pub fn draw_fields_seeded(seed: u64, n: usize, energy_scale: f64) -> Vec<f64> {
    draw_fields(&mut ChaCha8Rng::seed_from_u64(seed), n, energy_scale)
}

/// Benchmark instance: `J = -0.5R` on every edge and `h^x = R` everywhere.
pub fn build_instance(graph: &Graph, h_z: &[f64], energy_scale: f64) -> Result<IsingProblem> {
    IsingProblem::new(
        graph.n_vertices,
        graph.edges.clone(),
        h_z.to_vec(),
        vec![COUPLER * energy_scale; graph.edge_count()],
        vec![energy_scale; graph.n_vertices],
        energy_scale,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapClass {
    #[serde(rename = "SG")]
    SmallGap,
    #[serde(rename = "LG")]
    LargeGap,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Classification {
    pub class: GapClass,
    pub s_star: f64,
    pub gap: f64,
}

/// SG iff the AQA `ΔE₁(s*) ≤ 1/(2π)` GHz.
pub fn classify(problem: &IsingProblem) -> Result<Classification> {
    let ham = AnnealHamiltonian::new(problem, &SchedulePlan::Aqa)?;
    let (s_star, gap) = locate_min_gap(&ham, CLASSIFY_GRID);
    let class = if gap <= SG_THRESHOLD { GapClass::SmallGap } else { GapClass::LargeGap };
    Ok(Classification { class, s_star, gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub success: f64,
    pub e_res: f64,
    /// Raw time-to-solution, ns; `null` in JSON when infinite.
    #[serde(with = "infinite_as_null")]
    pub tts: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl From<&AnnealResult> for Outcome {
    fn from(r: &AnnealResult) -> Self {
        Outcome { success: r.success_probability, e_res: r.energy_residual, tts: r.tts.raw }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LstfOutcome {
    /// Target qubit (0-based).
    pub k: usize,
    #[serde(flatten)]
    pub outcome: Outcome,
}

/// Result of the three-step heuristic on one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeuristicReport {
    pub t_an: f64,
    pub s_x: f64,
    pub aqa: Outcome,
    pub lstf: Vec<LstfOutcome>,
    /// Target of the lowest-residual LSTF run beating AQA, if any.
    pub best_k: Option<usize>,
    pub best: Outcome,
    pub dqa_win: bool,
}

impl HeuristicReport {
    /// `TTS_AQA / TTS_best`.
    pub fn speedup(&self) -> f64 {
        self.aqa.tts / self.best.tts
    }

    pub fn best_lstf(&self) -> Option<&LstfOutcome> {
        self.lstf.iter().min_by(|a, b| a.outcome.e_res.total_cmp(&b.outcome.e_res))
    }
}

/// AQA, then LSTF(k, s_x, 0, 0) for every qubit with a nonzero field,
/// keeping the lowest-energy outcome.
pub fn run_heuristic(problem: &IsingProblem, t_an: f64, s_x: f64, tol: Tolerances) -> Result<HeuristicReport> {
    if !(t_an > 0.0) {
        return domain(format!("t_an must be positive, got {t_an}"));
    }
    let run = |plan: SchedulePlan| -> Result<Outcome> {
        let r = AnnealRun::new(problem.clone(), plan, t_an)?.with_tolerances(tol);
        Ok(Outcome::from(&evolve_schrodinger(&r)?))
    };
    let aqa = run(SchedulePlan::Aqa)?;
    let eligible: Vec<usize> = (0..problem.n_qubits).filter(|&k| problem.h_z[k] != 0.0).collect();
    let lstf = eligible
        .par_iter()
        .map(|&k| Ok(LstfOutcome { k, outcome: run(SchedulePlan::lstf(k, s_x)?)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut best = aqa;
    let mut best_k = None;
    for l in &lstf {
        if l.outcome.e_res < best.e_res {
            best = l.outcome;
            best_k = Some(l.k);
        }
    }
    Ok(HeuristicReport { t_an, s_x, aqa, lstf, best_k, best, dqa_win: best_k.is_some() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignSpec {
    /// Edge counts lumped into each reported group.
    pub edge_groups: Vec<Vec<usize>>,
    pub samples_per_group: usize,
    pub seed: u64,
    pub t_an: f64,
    pub s_x: f64,
    pub energy_scale: f64,
    pub tol: Tolerances,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec {
            edge_groups: vec![vec![6, 8], vec![10, 12], vec![14, 16]],
            samples_per_group: 100,
            seed: 2021,
            t_an: 100.0,
            s_x: DEFAULT_S_X,
            energy_scale: 1.0,
            tol: Tolerances::default(),
        }
    }
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_group == 0 {
            return domain("samples_per_group must be at least 1");
        }
        if self.edge_groups.is_empty() || self.edge_groups.iter().any(|g| g.is_empty()) {
            return domain("every edge group needs at least one edge count");
        }
        if !(self.t_an > 0.0) || !(self.energy_scale > 0.0) {
            return domain("t_an and energy_scale must be positive");
        }
        SchedulePlan::lstf(0, self.s_x)?;
        Ok(())
    }

    /// Seed of the graph family for one edge count.
    pub fn family_seed(&self, edge_count: usize) -> u64 {
        self.seed.wrapping_mul(1000).wrapping_add(edge_count as u64)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub group: usize,
    pub sample: usize,
    pub edge_count: usize,
    pub graph_id: usize,
    pub edges: Vec<(usize, usize)>,
    /// Generator stream the fields and graph choice were drawn from.
    pub stream: u64,
    pub h_z: Vec<f64>,
    pub class: GapClass,
    pub gap: f64,
    pub s_star: f64,
    pub aqa: Outcome,
    pub lstf: Vec<LstfOutcome>,
    pub dqa_win: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSummary {
    pub edges: String,
    pub samples: usize,
    pub failed: usize,
    pub dqa_win_pct: f64,
    pub sg_pct: f64,
    pub sg_count: usize,
    pub sg_dqa_win_pct: f64,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub spec: CampaignSpec,
    pub families: Vec<GraphFamily>,
    pub records: Vec<SampleRecord>,
    pub summary: Vec<GroupSummary>,
}

struct Job {
    group: usize,
    sample: usize,
    edge_count: usize,
    family: usize,
    stream: u64,
}

fn run_sample(spec: &CampaignSpec, job: &Job, family: &GraphFamily) -> Result<SampleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(job.stream);
    let graph_id = rng.random_range(0..family.graphs.len());
    let graph = &family.graphs[graph_id];
    let h_z = draw_fields(&mut rng, N_VERTICES, spec.energy_scale);
    let problem = build_instance(graph, &h_z, spec.energy_scale)?;
    let cls = classify(&problem)?;
    let rep = run_heuristic(&problem, spec.t_an, spec.s_x, spec.tol)?;
    Ok(SampleRecord {
        group: job.group,
        sample: job.sample,
        edge_count: job.edge_count,
        graph_id,
        edges: graph.edges.clone(),
        stream: job.stream,
        h_z,
        class: cls.class,
        gap: cls.gap,
        s_star: cls.s_star,
        aqa: rep.aqa,
        lstf: rep.lstf,
        dqa_win: rep.dqa_win,
    })
}

/// Runs every group, splitting each group's samples evenly across its edge
/// counts. Failed samples are dropped from the statistics and counted.
pub fn run_campaign(spec: &CampaignSpec) -> Result<Campaign> {
    spec.validate()?;
    let mut counts: Vec<usize> = spec.edge_groups.iter().flatten().copied().collect();
    counts.sort_unstable();
    counts.dedup();
    let families = counts
        .iter()
        .map(|&e| generate_graph_family(e, spec.family_seed(e)))
        .collect::<Result<Vec<_>>>()?;
    let family_of = |e: usize| counts.iter().position(|&c| c == e).expect("edge count collected above");

    let mut jobs = Vec::new();
    let mut stream = 0u64;
    for (g, group) in spec.edge_groups.iter().enumerate() {
        for sample in 0..spec.samples_per_group {
            let edge_count = group[sample % group.len()];
            jobs.push(Job { group: g, sample, edge_count, family: family_of(edge_count), stream });
            stream += 1;
        }
    }
    let results: Vec<Result<SampleRecord>> =
        jobs.par_iter().map(|j| run_sample(spec, j, &families[j.family])).collect();

    let mut records = Vec::new();
    let mut failed = vec![0usize; spec.edge_groups.len()];
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::warn!("sample {} of group {} failed: {e}", job.sample, job.group);
                failed[job.group] += 1;
            }
        }
    }
    let summary = summarize(spec, &records, &failed);
    Ok(Campaign { spec: spec.clone(), families, records, summary })
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn summarize(spec: &CampaignSpec, records: &[SampleRecord], failed: &[usize]) -> Vec<GroupSummary> {
    spec.edge_groups
        .iter()
        .enumerate()
        .map(|(g, edges)| {
            let recs: Vec<&SampleRecord> = records.iter().filter(|r| r.group == g).collect();
            let sg: Vec<&&SampleRecord> = recs.iter().filter(|r| r.class == GapClass::SmallGap).collect();
            GroupSummary {
                edges: edges.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("+"),
                samples: recs.len(),
                failed: failed.get(g).copied().unwrap_or(0),
                dqa_win_pct: pct(recs.iter().filter(|r| r.dqa_win).count(), recs.len()),
                sg_pct: pct(sg.len(), recs.len()),
                sg_count: sg.len(),
                sg_dqa_win_pct: pct(sg.iter().filter(|r| r.dqa_win).count(), sg.len()),
            }
        })
        .collect()
}

pub fn write_records_jsonl<W: Write>(records: &[SampleRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses JSON-lines records, skipping blank lines and `#` header lines.
pub fn read_records_jsonl(text: &str) -> Result<Vec<SampleRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[GroupSummary], out: W) -> Result<()> {
    write_rows_csv(summary, out)
}
