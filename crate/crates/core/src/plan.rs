//! Experiment plans: suite dispatch, summary reports and plot-ready series.

use crate::covering::{Cover, CoverConfig};
use crate::covering_checks;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::gauge::{self, FrRow};
use crate::kernel::{self, KernelMode};
use crate::lattice::{self, DepthRange, Lattice};
use crate::metric::Budget;
use crate::metric_checks as mc;
use crate::operator_checks as oc;
use crate::operators::{self, OperatorMatrix};
use crate::report::Check;
use crate::C;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SUITES: [&str; 6] = ["metric", "gauge", "lattice", "kernel", "operators", "covering"];

/// A builtin name (`disc`, `ball<n>`, `ellipsoid`), a path to a DomainSpec file, or an inline spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainRef {
    Name(String),
    Spec(DomainSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domains {
    One(DomainRef),
    Many(Vec<DomainRef>),
}

impl Domains {
    pub fn refs(&self) -> Vec<DomainRef> {
        match self {
            Domains::One(d) => vec![d.clone()],
            Domains::Many(v) => v.clone(),
        }
    }
}

fn default_domains() -> Domains {
    Domains::Many(vec![DomainRef::Name("disc".into()), DomainRef::Name("ball2".into())])
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// optimizer budget for the oracle queries
    pub distance: Budget,
    pub oracle_x: Vec<f64>,
    pub metric_pairs: usize,
    pub triples: usize,
    pub mu_samples: usize,
    pub fr_samples: usize,
    pub fr_ks: Vec<u32>,
    pub tail_radii: Vec<f64>,
    pub lattice_candidates: usize,
    pub reproducing_polys: usize,
    pub kernel_pairs: usize,
    pub commutator_trials: usize,
    pub degrees: Vec<u32>,
    pub split_count: usize,
    pub cover: CoverConfig,
    /// j_max on domains of dimension ≥ 2
    pub cover_j_max_ball: u32,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            distance: Budget::default(),
            oracle_x: vec![0.3, 0.5, 0.9],
            metric_pairs: 1000,
            triples: 8,
            mu_samples: 20_000,
            fr_samples: 100_000,
            fr_ks: vec![10, 11, 12, 13, 14, 15],
            tail_radii: (4..=12).map(f64::from).collect(),
            lattice_candidates: 2000,
            reproducing_polys: 4,
            kernel_pairs: 400,
            commutator_trials: 100,
            degrees: vec![6, 10, 14],
            split_count: 50,
            cover: CoverConfig::default(),
            cover_j_max_ball: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Outputs {
    pub summary: String,
    pub timings: String,
    pub tables: bool,
    pub operators: bool,
    pub lattices: bool,
    pub covers: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            summary: "summary.json".into(),
            timings: "timings.json".into(),
            tables: true,
            operators: true,
            lattices: true,
            covers: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default = "default_domains", alias = "domain")]
    pub domains: Domains,
    pub suites: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ExperimentPlan {
    /// The plan used by the determinism criterion: every suite on the disc and the ball.
    pub fn default_plan() -> Self {
        ExperimentPlan {
            domains: default_domains(),
            suites: vec!["all".into()],
            seed: 1,
            budgets: Budgets::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("malformed plan: {e}")))
    }

    /// Expands `all` and rejects unknown names.
    pub fn selected_suites(&self) -> Result<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.suites {
            let names: Vec<&str> = if s == "all" {
                SUITES.to_vec()
            } else if SUITES.contains(&s.as_str()) {
                vec![s.as_str()]
            } else {
                return Err(Error::Config(format!("unknown suite {s:?}")));
            };
            for n in names {
                if !out.iter().any(|o| o == n) {
                    out.push(n.to_string());
                }
            }
        }
        Ok(out)
    }
}

/// `sha256("blob <len>\0" ++ bytes)`, hex.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolves a domain reference; relative paths are taken from `base`.
pub fn resolve_domain(r: &DomainRef, base: &Path) -> Result<(String, DomainSpec)> {
    match r {
        DomainRef::Spec(d) => Ok((format!("custom_n{}", d.n), d.clone())),
        DomainRef::Name(s) => {
            if s == "disc" {
                return Ok(("disc".into(), DomainSpec::disc()));
            }
            if s == "ellipsoid" {
                return Ok(("ellipsoid".into(), DomainSpec::ellipsoid(&[1.0, 2.0])?));
            }
            if let Some(n) = s.strip_prefix("ball").and_then(|k| k.parse::<usize>().ok()) {
                if n == 0 {
                    return Err(Error::Config("ball0".into()));
                }
                return Ok((s.clone(), DomainSpec::ball(n)));
            }
            let p = base.join(s);
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Error::Config(format!("domain file {}: {e}", p.display())))?;
            let d: DomainSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("domain file {}: {e}", p.display())))?;
            let stem = p.file_stem().and_then(|x| x.to_str()).unwrap_or("custom").to_string();
            Ok((stem, d))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub domain: String,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrPoint {
    pub domain: String,
    pub a: f64,
    pub mode: String,
    pub log_abs_r: f64,
    pub log_estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerezinPoint {
    pub label: String,
    pub neg_r: f64,
    pub berezin_abs: f64,
    #[serde(rename = "N")]
    pub degree: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub domain: String,
    pub j: u32,
    pub u_index: usize,
    pub center_angle: f64,
    pub d: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    #[serde(default)]
    pub fr_regression: Vec<FrPoint>,
    #[serde(default)]
    pub berezin_decay: Vec<BerezinPoint>,
    #[serde(default)]
    pub cover_map: Vec<CoverPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub plan_hash: String,
    pub timestamp: u64,
    pub seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub domains: Vec<String>,
    pub suites: Vec<String>,
    pub results: Vec<SuiteResult>,
    pub passed: bool,
    pub hard_failures: Vec<String>,
    pub soft_failures: Vec<String>,
    pub series: Series,
}

impl Report {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.results.iter().flat_map(|r| r.checks.iter())
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks().find(|c| c.name == name)
    }

    /// Summary JSON with the timestamp zeroed, for comparisons between runs.
    pub fn canonical_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.timestamp = 0;
        Ok(serde_json::to_string_pretty(&r)?)
    }
}

/// Everything a run produces besides the summary.
#[derive(Default)]
pub struct Artifacts {
    pub fr_rows: Vec<(String, FrRow)>,
    pub lattices: Vec<(String, Lattice)>,
    pub covers: Vec<(String, Cover)>,
    pub operators: Vec<OperatorMatrix>,
    pub timings: BTreeMap<String, f64>,
}

fn is_timing(key: &str) -> bool {
    key.contains("seconds")
}

fn strip_value(v: &mut Value, path: &str, sink: &mut BTreeMap<String, f64>) {
    match v {
        Value::Object(m) => {
            let keys: Vec<String> = m.keys().cloned().collect();
            for k in keys {
                if is_timing(&k) {
                    if let Some(x) = m.remove(&k).and_then(|x| x.as_f64()) {
                        sink.insert(format!("{path}.{k}"), x);
                    }
                } else if let Some(x) = m.get_mut(&k) {
                    strip_value(x, &format!("{path}.{k}"), sink);
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter_mut().enumerate() {
                strip_value(x, &format!("{path}[{i}]"), sink);
            }
        }
        _ => {}
    }
}

/// Moves wall-clock values out of a check so the summary is reproducible.
fn strip_timing(c: &mut Check, prefix: &str, sink: &mut BTreeMap<String, f64>) {
    let keys: Vec<String> = c.fitted.keys().filter(|k| is_timing(k)).cloned().collect();
    for k in keys {
        if let Some(x) = c.fitted.remove(&k).and_then(|x| x.as_f64()) {
            sink.insert(format!("{prefix}/{}.{k}", c.name), x);
        }
    }
    if let Some(w) = c.witness.as_mut() {
        strip_value(w, &format!("{prefix}/{}.witness", c.name), sink);
    }
}

struct Ctx<'a> {
    budgets: &'a Budgets,
    seed: u64,
    art: &'a mut Artifacts,
    series: &'a mut Series,
}

fn suite_seed(base: u64, suite: &str) -> u64 {
    let k = SUITES.iter().position(|s| *s == suite).unwrap_or(0) as u64;
    base.wrapping_mul(1000).wrapping_add(k * 100)
}

fn metric_suite(dom: &DomainSpec, label: &str, cx: &mut Ctx) -> Vec<Check> {
    let b = cx.budgets;
    let s = cx.seed;
    let mut out = Vec::new();
    if dom.is_unit_ball() {
        out.push(mc::check_arctanh_oracle(dom, &b.oracle_x, &b.distance));
    }
    out.push(mc::check_depth_decay(dom, b.metric_pairs, [s, s + 1], &Budget::fast(), label));
    out.push(mc::check_gauge_growth(dom, b.metric_pairs / 4, s + 2, &Budget::fast(), label));
    out.push(mc::check_symmetry_triangle(dom, b.triples, s + 3, &b.distance));
    out.push(mc::check_surface_pairs(dom, &[1e-2, 1e-3], &[1.0, 2.0], 10, s + 4, &Budget::scan()));
    out.push(mc::check_shell_distances(dom, &[1e-2, 1e-3], 2, s + 5, &Budget::scan()));
    if dom.is_unit_ball() {
        out.push(mc::check_polydisc_inclusions(dom, 1.0, 0.25, &[1e-1, 1e-2, 1e-3], 200, s + 6));
        out.push(mc::check_f_stability(dom, 0.25, 500, s + 7));
        out.push(mc::check_mu_band(dom, 0.5, &[1e-1, 1e-2, 1e-3], b.mu_samples, s + 8));
    }
    if dom.n == 1 && dom.is_unit_ball() {
        out.push(mc::check_polydisc_examples());
    }
    out
}

fn gauge_suite(dom: &DomainSpec, label: &str, cx: &mut Ctx) -> Vec<Check> {
    let b = cx.budgets;
    let s = cx.seed;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (i, a) in [0.5, 1.0, -0.5].into_iter().enumerate() {
        let (c, r) = gauge::check_fr_slope(dom, 0.0, a, &b.fr_ks, b.fr_samples, s + i as u64, 0.1, label);
        out.push(c);
        rows.extend(r);
    }
    let (c, r) = gauge::check_weight_bounded(dom, 0.5, &b.fr_ks, b.fr_samples, s + 3, label);
    out.push(c);
    rows.extend(r);
    match gauge::approach_points(dom, &[4]) {
        Ok(z) => {
            let (c, r) = gauge::check_tail_decay(dom, &z[0], 0.0, 0.5, &b.tail_radii, b.fr_samples, s + 4, label);
            out.push(c);
            rows.extend(r);
        }
        Err(e) => out.push(Check::from_error(format!("gauge.tail_decay.{label}"), &e)),
    }
    out.push(gauge::check_x_comparable(dom, 0.1, 500, s + 5, 100.0));
    out.push(gauge::check_symmetry_defect(dom, 500, s + 6).unwrap_or_else(|e| Check::from_error("gauge.symmetry_defect", &e)));
    out.push(
        gauge::check_normal_ray(dom, &[1e-1, 1e-2, 1e-3], &Budget::scan())
            .unwrap_or_else(|e| Check::from_error("gauge.normal_ray", &e)),
    );
    for r in &rows {
        cx.series.fr_regression.push(FrPoint {
            domain: label.to_string(),
            a: r.a,
            mode: format!("{:?}", r.mode).to_lowercase(),
            log_abs_r: r.abscissa.ln(),
            log_estimate: r.estimate.ln(),
            stderr: r.stderr,
        });
    }
    cx.art.fr_rows.extend(rows.into_iter().map(|r| (label.to_string(), r)));
    out
}

fn lattice_suite(dom: &DomainSpec, label: &str, cx: &mut Ctx) -> Vec<Check> {
    let b = cx.budgets;
    let s = cx.seed;
    let mut out = Vec::new();
    let a = 0.5;
    match lattice::build_separated_in(dom, DepthRange { lo: 1e-3, hi: 1.0 }, a, b.lattice_candidates, s) {
        Ok(lat) => {
            let oracle = lattice::lattice_oracle(dom);
            match lattice::min_pair_distance(dom, &lat, &oracle) {
                Ok((d, wit)) => out.push(
                    Check::new("lattice.separated", lat.len() < 2 || d >= a)
                        .fit("points", lat.len() as f64)
                        .fit("min_distance", d)
                        .witness(wit),
                ),
                Err(e) => out.push(Check::from_error("lattice.separated", &e)),
            }
            if dom.is_unit_ball() {
                out.push(
                    lattice::packing_audit(dom, &lat, 20, s + 1)
                        .unwrap_or_else(|e| Check::from_error("lattice.packing_disjoint", &e)),
                );
            }
            cx.art.lattices.push((label.to_string(), lat));
        }
        Err(e) => out.push(Check::from_error("lattice.separated", &e)),
    }
    if dom.n == 1 && dom.is_unit_ball() {
        out.push(lattice::check_schur_decay(1.0, &b.tail_radii, 0.25));
    }
    out
}

fn kernel_suite(dom: &DomainSpec, label: &str, cx: &mut Ctx) -> Vec<Check> {
    let b = cx.budgets;
    let s = cx.seed;
    let n = dom.n;
    let mut out = Vec::new();
    if dom.is_unit_ball() {
        if n == 1 {
            out.push(kernel::check_reproducing(dom, 6, &[0.3, 0.6, 0.9], b.reproducing_polys, s, 1e-6));
        }
        out.push(kernel::check_diagonal_band(dom, KernelMode::ExactBall, &format!("{label}.exact")));
        out.push(kernel::check_fefferman_vs_exact(n, b.kernel_pairs, s + 1));
        out.push(kernel::check_local_sup(n, 20, s + 2));
        out.push(kernel::check_local_lipschitz(n, 20, s + 3));
        out.push(kernel::check_kernel_lipschitz(n, 20, s + 4));
        out.push(kernel::check_gram_floor(n, b.kernel_pairs, 0.5, s + 5));
    }
    match KernelMode::fefferman(n, 0.5) {
        Ok(mode) => out.push(kernel::check_diagonal_band(dom, mode, &format!("{label}.leading"))),
        Err(e) => out.push(Check::from_error(format!("kernel.diagonal_band.{label}.leading"), &e)),
    }
    out.push(kernel::check_mean_value_gradient(n, 50, s + 6));
    out
}

fn berezin_decay(degrees: &[u32]) -> Result<(Vec<BerezinPoint>, Vec<OperatorMatrix>)> {
    let mut pts = Vec::new();
    let mut ops = Vec::new();
    for &deg in degrees {
        let space = operators::build_galerkin(1, deg, operators::galerkin_rule(1, deg, 8))?;
        let mut t = operators::toeplitz_matrix(&space, &oc::interior_bump);
        t.label = format!("T_bump_N{deg}");
        for k in 1..=8 {
            let neg_r = 0.5f64.powi(k);
            let z = [C::new((1.0 - neg_r).sqrt(), 0.0)];
            match operators::berezin(&space, &t, &z) {
                Ok(v) => pts.push(BerezinPoint {
                    label: "T_bump".into(),
                    neg_r,
                    berezin_abs: v.norm(),
                    degree: deg,
                }),
                Err(Error::Resolution(_)) => break,
                Err(e) => return Err(e),
            }
        }
        ops.push(t);
    }
    Ok((pts, ops))
}

fn operators_suite(cx: &mut Ctx) -> Vec<Check> {
    let b = cx.budgets;
    let s = cx.seed;
    let mut out = vec![
        oc::check_commutator_identity(b.commutator_trials, 45, s),
        oc::check_berezin_commutator_bound(b.commutator_trials, 30, s + 1),
        oc::check_toeplitz_basics(*b.degrees.last().unwrap_or(&14)),
        oc::check_perturbation_monotone(&[0.2, 0.1, 0.05], 5, s + 2),
        oc::check_discrete_sum_bound(s + 3),
        oc::check_averaged_toeplitz(s + 4),
    ];
    let (c, _) = oc::check_compactness(&b.degrees, s + 5);
    out.push(c);
    out.push(oc::check_offdiag_split(&[1, 2, 3, 4], b.split_count, s + 6));
    out.push(oc::check_localization(s + 7));
    out.push(oc::check_telescoping(s + 8));
    out.push(oc::check_commutator_vs_diff(s + 9));
    out.push(oc::check_disjoint_shells(s + 10));
    out.push(oc::check_hankel_oracle());
    match berezin_decay(&b.degrees) {
        Ok((pts, ops)) => {
            cx.series.berezin_decay.extend(pts);
            cx.art.operators.extend(ops);
        }
        Err(e) => out.push(Check::from_error("operators.berezin_decay", &e)),
    }
    out
}

fn covering_suite(dom: &DomainSpec, label: &str, cx: &mut Ctx) -> Vec<Check> {
    let b = cx.budgets;
    if !dom.is_unit_ball() {
        return vec![Check::new(format!("covering.{label}"), false)
            .soft()
            .note("the covering is built in collar coordinates of the unit ball")];
    }
    let mut cfg = b.cover.clone();
    cfg.seed = cx.seed;
    if dom.n > 1 {
        cfg.j_max = cfg.j_max.min(b.cover_j_max_ball);
    }
    match covering_checks::covering_suite(dom, &cfg, label) {
        Ok((mut checks, cover)) => {
            if dom.n == 1 {
                checks.push(oc::check_partition_h(&cover, 10));
            }
            for row in cover.cover_map() {
                cx.series.cover_map.push(CoverPoint {
                    domain: label.to_string(),
                    j: row.j,
                    u_index: row.u_index,
                    center_angle: row.center_angle,
                    d: row.d,
                });
            }
            cx.art.covers.push((label.to_string(), cover));
            checks
        }
        Err(e) => vec![Check::from_error(format!("covering.build.{label}"), &e)],
    }
}

/// Runs a plan. Suite names and domains are validated before anything is computed.
pub fn run_plan(plan: &ExperimentPlan, plan_bytes: &[u8], base: &Path) -> Result<(Report, Artifacts)> {
    let suites = plan.selected_suites()?;
    let domains = plan
        .domains
        .refs()
        .iter()
        .map(|r| resolve_domain(r, base))
        .collect::<Result<Vec<_>>>()?;
    let mut art = Artifacts::default();
    let mut series = Series::default();
    let mut results = Vec::new();
    let mut seeds = BTreeMap::new();
    for suite in &suites {
        let seed = suite_seed(plan.seed, suite);
        seeds.insert(suite.clone(), seed);
        let mut cx = Ctx {
            budgets: &plan.budgets,
            seed,
            art: &mut art,
            series: &mut series,
        };
        // the Galerkin operators live on the disc whatever the plan's domains are
        if suite == "operators" {
            let t = std::time::Instant::now();
            let checks = operators_suite(&mut cx);
            cx.art.timings.insert("operators/disc".into(), t.elapsed().as_secs_f64());
            results.push(SuiteResult {
                suite: suite.clone(),
                domain: "disc".into(),
                checks,
            });
            continue;
        }
        for (label, dom) in &domains {
            let t = std::time::Instant::now();
            let checks = match suite.as_str() {
                "metric" => metric_suite(dom, label, &mut cx),
                "gauge" => gauge_suite(dom, label, &mut cx),
                "lattice" => lattice_suite(dom, label, &mut cx),
                "kernel" => kernel_suite(dom, label, &mut cx),
                "covering" => covering_suite(dom, label, &mut cx),
                _ => unreachable!(),
            };
            cx.art.timings.insert(format!("{suite}/{label}"), t.elapsed().as_secs_f64());
            results.push(SuiteResult {
                suite: suite.clone(),
                domain: label.clone(),
                checks,
            });
        }
    }
    for r in &mut results {
        let prefix = format!("{}/{}", r.suite, r.domain);
        for c in &mut r.checks {
            strip_timing(c, &prefix, &mut art.timings);
        }
    }
    let mut hard = Vec::new();
    let mut soft = Vec::new();
    for r in &results {
        for c in r.checks.iter().filter(|c| !c.passed) {
            let id = format!("{}/{}/{}", r.suite, r.domain, c.name);
            if c.hard {
                hard.push(id);
            } else {
                soft.push(id);
            }
        }
    }
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = Report {
        plan_hash: blob_hash(plan_bytes),
        timestamp,
        seed: plan.seed,
        seeds,
        domains: domains.iter().map(|d| d.0.clone()).collect(),
        suites,
        results,
        passed: hard.is_empty(),
        hard_failures: hard,
        soft_failures: soft,
        series,
    };
    Ok((report, art))
}

fn io<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(e.to_string())
}

/// Writes the summary, timings and detail files into `out`.
pub fn write_outputs(report: &Report, art: &Artifacts, outputs: &Outputs, out: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let summary = out.join(&outputs.summary);
    std::fs::write(&summary, serde_json::to_string_pretty(report)?)?;
    std::fs::write(out.join(&outputs.timings), serde_json::to_string_pretty(&art.timings)?)?;
    if outputs.tables {
        if !art.fr_rows.is_empty() {
            let rows: Vec<FrRow> = art.fr_rows.iter().map(|r| r.1.clone()).collect();
            gauge::write_fr_csv(&rows, std::fs::File::create(out.join("fr_rows.csv"))?)?;
        }
        for kind in [PlotKind::FrRegression, PlotKind::BerezinDecay, PlotKind::CoverMap] {
            if emit(report, kind, std::io::sink()).is_ok() {
                emit(report, kind, std::fs::File::create(out.join(format!("{}.csv", kind.name())))?)?;
            }
        }
    }
    if outputs.operators {
        for op in &art.operators {
            op.write(&out.join("operators"), &op.label)?;
        }
    }
    if outputs.lattices {
        for (label, lat) in &art.lattices {
            std::fs::write(out.join(format!("lattice_{label}.json")), lat.to_json()?)?;
        }
    }
    if outputs.covers {
        for (label, cover) in &art.covers {
            std::fs::write(out.join(format!("cover_{label}.json")), cover.to_json()?)?;
        }
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    FrRegression,
    BerezinDecay,
    CoverMap,
}

impl PlotKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::FrRegression => "fr-regression",
            PlotKind::BerezinDecay => "berezin-decay",
            PlotKind::CoverMap => "cover-map",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fr-regression" => Ok(PlotKind::FrRegression),
            "berezin-decay" => Ok(PlotKind::BerezinDecay),
            "cover-map" => Ok(PlotKind::CoverMap),
            _ => Err(Error::Config(format!("unknown plot kind {s:?}"))),
        }
    }
}

/// Tidy CSV for one series of a report.
pub fn emit<W: std::io::Write>(report: &Report, kind: PlotKind, out: W) -> Result<()> {
    let s = &report.series;
    let empty = match kind {
        PlotKind::FrRegression => s.fr_regression.is_empty(),
        PlotKind::BerezinDecay => s.berezin_decay.is_empty(),
        PlotKind::CoverMap => s.cover_map.is_empty(),
    };
    if empty {
        return Err(Error::Config(format!("report has no {} series", kind.name())));
    }
    let mut w = csv::Writer::from_writer(out);
    match kind {
        PlotKind::FrRegression => {
            w.write_record(["log_abs_r", "log_estimate", "stderr", "domain", "a", "mode"]).map_err(io)?;
            for p in &s.fr_regression {
                w.write_record([
                    p.log_abs_r.to_string(),
                    p.log_estimate.to_string(),
                    p.stderr.to_string(),
                    p.domain.clone(),
                    p.a.to_string(),
                    p.mode.clone(),
                ])
                .map_err(io)?;
            }
        }
        PlotKind::BerezinDecay => {
            w.write_record(["neg_r", "berezin_abs", "N", "operator"]).map_err(io)?;
            for p in &s.berezin_decay {
                w.write_record([p.neg_r.to_string(), p.berezin_abs.to_string(), p.degree.to_string(), p.label.clone()])
                    .map_err(io)?;
            }
        }
        PlotKind::CoverMap => {
            w.write_record(["j", "u_index", "center_angle", "d", "domain"]).map_err(io)?;
            for p in &s.cover_map {
                w.write_record([
                    p.j.to_string(),
                    p.u_index.to_string(),
                    p.center_angle.to_string(),
                    p.d.to_string(),
                    p.domain.clone(),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("malformed report: {e}")))
}
