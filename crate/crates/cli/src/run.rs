//! Executes a manifest and writes its artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use fpp_core::capacity::{sample_capacities, truncate, SeedSpec};
use fpp_core::estimate::animals::{
    count_diamond_sets, count_vertex_animals, diamond_size_cap, vertex_size_cap,
};
use fpp_core::estimate::{
    chebyshev_exponent, choose_lambda_p0, epsilon0_renorm, rate_sweep, zero_flow_bound, BoundParams,
};
use fpp_core::flow::oracle::{
    brute_force_min_cut, brute_force_path_packing, MAX_CUT_EDGES, MAX_PACKING_EDGES,
};
use fpp_core::flow::{count_disjoint_open_paths, max_flow, max_flow_with, verify_packing};
use fpp_core::lattice::{build_cylinder, CylinderSpec, LatticeGraph, VertexBox};
use fpp_core::renorm::{
    block_process, block_union, construct_crossing_path, count_block_disjoint_paths,
    enumerate_event, estimate_delta_k, rescale_region, support_region, w_threshold, BoxEvent,
    CrossingOutcome, MAX_ENUMERATION_EDGES,
};

use crate::config::{
    sweep_spec, BlocksConfig, BoundsConfig, Experiment, FlowConfig, OracleConfig, OracleMode,
    RunManifest, SweepConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;
pub const EXIT_COUNTEREXAMPLE: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("oracle refused: {0}")]
    Refused(String),
    #[error("counterexample found, written to {}", .0.display())]
    Counterexample(PathBuf),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Refused(_) => EXIT_REFUSED,
            RunError::Counterexample(_) => EXIT_COUNTEREXAMPLE,
            RunError::Runtime(_) | RunError::Io(_) => EXIT_RUNTIME,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

/// Result files of one run, all carrying the manifest hash.
struct Artifacts {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(manifest: &RunManifest) -> Result<Self, RunError> {
        let dir = PathBuf::from(&manifest.output);
        fs::create_dir_all(&dir)?;
        let mut a = Self {
            dir,
            hash: manifest.hash(),
            written: Vec::new(),
        };
        a.raw(
            "manifest.json",
            format!("{}\n", manifest.to_json()).as_bytes(),
        )?;
        Ok(a)
    }

    fn raw(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, RunError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV whose first line is `# manifest sha256 <hash>`.
    fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<PathBuf, RunError> {
        let mut buf = Vec::new();
        writeln!(buf, "# manifest sha256 {}", self.hash)?;
        body(&mut buf)?;
        self.raw(name, &buf)
    }

    /// JSON object with a `manifest_sha256` field in front.
    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf, RunError> {
        let mut v = serde_json::to_value(value).map_err(runtime)?;
        let obj = v.as_object_mut().expect("artifact is a JSON object");
        let mut out = serde_json::Map::new();
        out.insert("manifest_sha256".into(), json!(self.hash));
        out.append(obj);
        let text = serde_json::to_string_pretty(&out).map_err(runtime)?;
        self.raw(name, format!("{text}\n").as_bytes())
    }
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub message: String,
}

/// Runs the manifest, writing its artifacts into `manifest.output`.
pub fn run(manifest: &RunManifest) -> Result<RunSummary, RunError> {
    let mut art = Artifacts::new(manifest)?;
    let message = match &manifest.experiment {
        Experiment::Flow(c) => run_flow(c, manifest.seed, &mut art)?,
        Experiment::Sweep(c) => run_sweep(c, manifest.seed, &mut art)?,
        Experiment::Blocks(c) => run_blocks(c, manifest.seed, &mut art)?,
        Experiment::Bounds(c) => run_bounds(c, &mut art)?,
        Experiment::Oracle(c) => run_oracle(c, manifest.seed, &mut art)?,
    };
    Ok(RunSummary {
        files: art.written,
        message,
    })
}

fn cylinder(d: usize, k: &[u32], m: u32) -> Result<LatticeGraph, RunError> {
    let spec =
        CylinderSpec::new(d, k.to_vec(), m).map_err(|e| RunError::Config(vec![e.to_string()]))?;
    build_cylinder(&spec).map_err(runtime)
}

fn run_flow(c: &FlowConfig, seed: u64, art: &mut Artifacts) -> Result<String, RunError> {
    let g = cylinder(c.d, &c.k, c.m)?;
    let mut field = sample_capacities(&g, &c.distribution, SeedSpec::new(seed, c.replicate));
    if let Some(eta) = c.eta {
        field = truncate(&field, eta);
    }
    let res = max_flow_with(&g, &field, c.arithmetic).map_err(runtime)?;
    if c.dump_field {
        art.csv("capacities.csv", |w| field.write_csv(w))?;
    }
    let report = res.report(c.with_flows);
    art.json(
        "flow.json",
        &json!({
            "vertices": g.num_vertices(),
            "edges": g.num_edges(),
            "flow": report,
            "exact_value": res.exact_value,
        }),
    )?;
    Ok(format!(
        "phi = {} (cut of {} edges)",
        res.value,
        res.cut.len()
    ))
}

fn run_sweep(c: &SweepConfig, seed: u64, art: &mut Artifacts) -> Result<String, RunError> {
    let spec = sweep_spec(c, seed);
    let sweep = rate_sweep(&spec, c.floor).map_err(runtime)?;
    art.csv("sweep.csv", |w| sweep.report.write_csv(w))?;
    art.json(
        "sweep.json",
        &json!({
            "d": sweep.report.d,
            "confidence": sweep.report.confidence,
            "floor": sweep.floor,
            "above_floor": sweep.above_floor,
            "all_above_floor": sweep.all_above_floor(),
            "rows": sweep.report.rows,
        }),
    )?;
    Ok(format!(
        "{} rows; rates {} the floor {}",
        sweep.report.rows.len(),
        if sweep.all_above_floor() {
            "stay above"
        } else {
            "fall below"
        },
        c.floor
    ))
}

#[derive(Serialize)]
struct DeltaRow {
    k: u32,
    replicates: u64,
    bad: u64,
    delta_k: f64,
    ci_lo: f64,
    ci_hi: f64,
    /// Exact `P[U(Lambda(K))]` and `P[W(Lambda(K), ceil(K/3))]` when enumerable.
    exact_u: Option<f64>,
    exact_w: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn lambda_box(d: usize, k: u32) -> VertexBox {
    let half = k as i64 / 2;
    VertexBox::new(vec![1 - half; d], vec![half; d])
}

fn run_blocks(c: &BlocksConfig, seed: u64, art: &mut Artifacts) -> Result<String, RunError> {
    let mut rows = Vec::new();
    for &k in &c.ks {
        let est = estimate_delta_k(
            c.d,
            k,
            c.p,
            c.replicates,
            SeedSpec::derive(seed, k as u64),
            c.confidence,
        )
        .map_err(runtime)?;
        let (mut exact_u, mut exact_w) = (None, None);
        if c.exact {
            let b = lambda_box(c.d, k);
            let edges = LatticeGraph::from_box(b.clone())
                .map_err(runtime)?
                .num_edges();
            if edges <= MAX_ENUMERATION_EDGES {
                let u = enumerate_event(&b, BoxEvent::U).map_err(runtime)?;
                let w = enumerate_event(&b, BoxEvent::W { m: w_threshold(k) }).map_err(runtime)?;
                exact_u = Some(u.probability(c.p));
                exact_w = Some(w.probability(c.p));
            }
        }
        rows.push(DeltaRow {
            k,
            replicates: est.trials,
            bad: est.successes,
            delta_k: est.estimate,
            ci_lo: est.ci.lo,
            ci_hi: est.ci.hi,
            exact_u,
            exact_w,
        });
    }
    art.csv("blocks.csv", |w| {
        writeln!(w, "k,replicates,bad,delta_k,ci_lo,ci_hi,exact_u,exact_w")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.k,
                r.replicates,
                r.bad,
                r.delta_k,
                r.ci_lo,
                r.ci_hi,
                opt(r.exact_u),
                opt(r.exact_w)
            )?;
        }
        Ok(())
    })?;
    let mut summary = json!({ "d": c.d, "p": c.p, "confidence": c.confidence, "delta": rows });
    let mut message = format!("delta_K for K in {:?}", c.ks);
    if let Some(pr) = &c.process {
        let k = c.ks[0];
        let d = c.d;
        let mut hi = vec![pr.n as i64; d];
        hi[d - 1] = pr.h as i64;
        let region = VertexBox::new(vec![0; d], hi);
        let cyl = rescale_region(&region, k).map_err(runtime)?;
        let g =
            LatticeGraph::from_box(support_region(&cyl, k).map_err(runtime)?).map_err(runtime)?;
        let dist = fpp_core::capacity::CapacityDistribution::Bernoulli { p: c.p };
        let field = sample_capacities(&g, &dist, SeedSpec::new(seed, pr.replicate));
        let bp = block_process(&g, &field, k, &cyl).map_err(runtime)?;
        art.csv("process.csv", |w| bp.write_csv(w))?;
        let packing = count_block_disjoint_paths(&bp, &cyl).map_err(runtime)?;
        let mut crossings = Vec::new();
        for path in &packing.paths {
            match construct_crossing_path(&g, &field, &bp, &cyl, path).map_err(runtime)? {
                CrossingOutcome::Found { path } => crossings.push(path),
                CrossingOutcome::Counterexample(cx) => {
                    let p = art.json("counterexample.json", &*cx)?;
                    return Err(RunError::Counterexample(p));
                }
            }
        }
        let union =
            LatticeGraph::from_box(block_union(&cyl, k).map_err(runtime)?).map_err(runtime)?;
        let sub = field
            .restrict(&g, &union)
            .ok_or_else(|| runtime("block union outside the sampled region"))?;
        let open = count_disjoint_open_paths(&union, &sub).map_err(runtime)?;
        verify_packing(&union, &sub, &open).map_err(runtime)?;
        if open.len() < packing.len() {
            let p = art.json(
                "counterexample.json",
                &json!({
                    "k": k,
                    "cylinder": cyl,
                    "block_paths": packing.paths,
                    "open_paths": open.len(),
                    "bounds": g.bounds(),
                    "field": field.values(),
                }),
            )?;
            return Err(RunError::Counterexample(p));
        }
        summary["process"] = json!({
            "k": k,
            "cylinder": cyl,
            "good_blocks": bp.count_good(),
            "blocks": bp.events.len(),
            "block_paths": packing.paths,
            "crossing_paths": crossings,
            "disjoint_open_paths": open.len(),
        });
        message.push_str(&format!(
            "; {} disjoint good block paths, {} disjoint open paths",
            packing.len(),
            open.len()
        ));
    }
    art.json("blocks.json", &summary)?;
    Ok(message)
}

/// A growth constant and where it came from.
#[derive(Serialize)]
struct Growth {
    value: f64,
    /// `given`, or the animal size it was counted at.
    source: String,
}

fn growth(
    given: Option<f64>,
    counted: impl FnOnce() -> Result<(f64, usize), RunError>,
) -> Result<Growth, RunError> {
    Ok(match given {
        Some(value) => Growth {
            value,
            source: "given".into(),
        },
        None => {
            let (value, s) = counted()?;
            Growth {
                value,
                source: format!("count(s)^(1/s) at s = {s}"),
            }
        }
    })
}

fn run_bounds(c: &BoundsConfig, art: &mut Artifacts) -> Result<String, RunError> {
    let cg = growth(c.c, || {
        let s = diamond_size_cap(c.d).expect("validated dimension");
        Ok((count_diamond_sets(s, c.d).map_err(runtime)?.growth(s), s))
    })?;
    let cp = growth(c.c_prime, || {
        let s = vertex_size_cap(c.d).expect("validated dimension");
        Ok((count_vertex_animals(s, c.d).map_err(runtime)?.growth(s), s))
    })?;
    let (lambda, p0) = choose_lambda_p0(c.epsilon, cg.value).map_err(runtime)?;
    let bp = BoundParams {
        p: c.p,
        epsilon: c.epsilon,
        d: c.d,
        lambda,
        c: cg.value,
        rho: c.rho,
    };
    bp.validate()
        .map_err(|e| RunError::Config(vec![e.to_string()]))?;
    let bracket = chebyshev_exponent(&bp);
    let eps0 =
        c.k.map(|k| epsilon0_renorm(k, c.d, c.eta))
            .transpose()
            .map_err(runtime)?;
    let zero = match (c.n, c.h) {
        (Some(n), Some(h)) => Some(zero_flow_bound(n, h, c.p, c.d).map_err(runtime)?),
        _ => None,
    };
    let mut table: Vec<(&str, String)> = vec![
        ("c", cg.value.to_string()),
        ("c_prime", cp.value.to_string()),
        ("lambda", lambda.to_string()),
        ("p0", p0.to_string()),
        ("bracket", bracket.to_string()),
        ("target", (cg.value.ln() - c.rho).to_string()),
        ("p_above_p0", (c.p >= p0).to_string()),
    ];
    if let Some(e) = eps0 {
        table.push(("epsilon0", e.to_string()));
    }
    if let Some(z) = &zero {
        table.push(("zero_flow_log10", z.log10_value.to_string()));
        table.push(("zero_flow_bound", z.value.to_string()));
    }
    art.csv("bounds.csv", |w| {
        writeln!(w, "quantity,value")?;
        for (q, v) in &table {
            writeln!(w, "{q},{v}")?;
        }
        Ok(())
    })?;
    art.json(
        "bounds.json",
        &json!({
            "params": bp,
            "c": cg,
            "c_prime": cp,
            "p0": p0,
            "bracket": bracket,
            "certifies_decay": bracket > 0.0,
            "epsilon0": eps0,
            "zero_flow": zero,
        }),
    )?;
    Ok(format!("lambda = {lambda}, p0 = {p0}, bracket = {bracket}"))
}

#[derive(Serialize)]
struct OracleRow {
    replicate: u64,
    fast: f64,
    oracle: f64,
    agree: bool,
}

fn run_oracle(c: &OracleConfig, seed: u64, art: &mut Artifacts) -> Result<String, RunError> {
    let g = cylinder(c.d, &c.k, c.m)?;
    let limit = match c.mode {
        OracleMode::MinCut => MAX_CUT_EDGES,
        OracleMode::Packing => MAX_PACKING_EDGES,
    };
    if g.num_edges() > limit {
        return Err(RunError::Refused(format!(
            "the cylinder has {} edges; the exhaustive oracle accepts at most {limit}",
            g.num_edges()
        )));
    }
    let mut rows = Vec::new();
    for r in 0..c.replicates {
        let field = sample_capacities(&g, &c.distribution, SeedSpec::new(seed, r));
        let (fast, oracle) = match c.mode {
            OracleMode::MinCut => {
                let fast = max_flow(&g, &field).map_err(runtime)?;
                let brute = brute_force_min_cut(&g, &field).map_err(runtime)?;
                let agree = match (fast.exact_value, brute.exact) {
                    (Some(a), Some(b)) => a == b,
                    _ => (fast.value - brute.value).abs() <= 1e-6 * brute.value.max(1.0),
                };
                rows.push(OracleRow {
                    replicate: r,
                    fast: fast.value,
                    oracle: brute.value,
                    agree,
                });
                continue;
            }
            OracleMode::Packing => {
                let packing = count_disjoint_open_paths(&g, &field).map_err(runtime)?;
                verify_packing(&g, &field, &packing).map_err(runtime)?;
                let brute = brute_force_path_packing(&g, &field).map_err(runtime)?;
                (packing.len() as f64, brute as f64)
            }
        };
        rows.push(OracleRow {
            replicate: r,
            fast,
            oracle,
            agree: fast == oracle,
        });
    }
    art.csv("oracle.csv", |w| {
        writeln!(w, "replicate,fast,oracle,agree")?;
        for r in &rows {
            writeln!(w, "{},{},{},{}", r.replicate, r.fast, r.oracle, r.agree)?;
        }
        Ok(())
    })?;
    let disagreements = rows.iter().filter(|r| !r.agree).count();
    art.json(
        "oracle.json",
        &json!({ "mode": c.mode, "edges": g.num_edges(), "disagreements": disagreements, "rows": rows }),
    )?;
    if disagreements > 0 {
        return Err(runtime(format!(
            "{disagreements} of {} instances disagree with the oracle",
            rows.len()
        )));
    }
    Ok(format!("{} instances agree with the oracle", rows.len()))
}

/// Reads a manifest from a file.
pub fn load(path: &Path) -> Result<RunManifest, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(vec![format!("{}: {e}", path.display())]))?;
    crate::config::parse_config(&text).map_err(RunError::Config)
}
