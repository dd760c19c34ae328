//! Subcommand implementations. Each writes its artifacts under the output
//! directory and returns a JSON summary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use pinchfold::canard::{
    find_secondary_canards, locate_primary_canards_pinched, AssemblyOptions, CanardSearchOptions,
};
use pinchfold::continuation::{
    branch_diagram, branch_plot_script, compute_slow_manifold, find_intersections, section_plot_script,
    write_sections_csv, BranchDiagramOptions, BranchOptions, ManifoldSide, RegularizedParams, SectionOptions,
};
use pinchfold::export::{fmt_f64, write_json, Provenance};
use pinchfold::filippov::{integrate, EventKind, FilippovOptions, PinchedSystem};
use pinchfold::models::{classify_singularity, eval_straight, strong_canard, weak_canard};
use pinchfold::pinch::classify_switch_point;
use pinchfold::FoldedNodeParams;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::acceptance;
use crate::config::{Command, RunConfig};
use crate::specfun_check::run_specfun_check;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: pinchfold::Error,
    },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    /// A check ran to completion and failed.
    #[error("{0}")]
    CheckFailed(String, Value),
}

impl CommandError {
    /// Diagnostic document printed on exit status 3.
    pub fn diagnostic(&self, command: Command) -> Value {
        let mut d = json!({ "command": command.name(), "error": self.to_string() });
        match self {
            CommandError::Numerical { context, source } => {
                d["context"] = json!(context);
                d["kind"] = json!(format!("{source:?}"));
            }
            CommandError::Output { path, .. } => d["path"] = json!(path.display().to_string()),
            CommandError::CheckFailed(_, report) => d["report"] = report.clone(),
        }
        d
    }
}

fn num<T>(context: impl Into<String>, r: pinchfold::Result<T>) -> Result<T, CommandError> {
    r.map_err(|source| CommandError::Numerical {
        context: context.into(),
        source,
    })
}

/// Output directory and shared provenance for one run.
pub struct Output {
    dir: PathBuf,
    prov: Provenance,
}

impl Output {
    pub fn new(cfg: &RunConfig, command: Command) -> Result<Self, CommandError> {
        fs::create_dir_all(&cfg.out_dir).map_err(|e| CommandError::Output {
            path: cfg.out_dir.clone(),
            message: e.to_string(),
        })?;
        let mut prov = Provenance::new();
        prov.push("command", command.name())
            .push_f64("mu", cfg.params.mu)
            .push_f64("eps", cfg.params.eps)
            .push("level", format!("{:?}", cfg.params.level));
        Ok(Self {
            dir: cfg.out_dir.clone(),
            prov,
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CommandError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CommandError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        Ok((path, BufWriter::new(f)))
    }

    fn write_with(
        &self,
        name: &str,
        prov: &Provenance,
        f: impl FnOnce(&Provenance, &mut BufWriter<File>) -> pinchfold::Result<()>,
    ) -> Result<String, CommandError> {
        let (path, mut w) = self.create(name)?;
        f(prov, &mut w).map_err(|e| CommandError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        Ok(name.to_string())
    }

    fn json(&self, name: &str, prov: &Provenance, v: &Value) -> Result<String, CommandError> {
        self.write_with(name, prov, |p, w| write_json(p, v, w))
    }

    fn text(&self, name: &str, body: &str) -> Result<String, CommandError> {
        let mut s = String::new();
        for (k, v) in &self.prov.entries {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(body);
        let path = self.dir.join(name);
        fs::write(&path, s).map_err(|e| CommandError::Output {
            path,
            message: e.to_string(),
        })?;
        Ok(name.to_string())
    }
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p").replace('-', "m")
}

pub fn simulate(cfg: &RunConfig, p: &FoldedNodeParams, out: &Output) -> Result<Value, CommandError> {
    let s = &cfg.simulate;
    let sys = PinchedSystem::new(cfg.params.level, *p);
    let fo = FilippovOptions {
        sample_dt: s.sample_dt,
        ..FilippovOptions::with_tol(s.tol)
    };
    let traj = num("filippov integration", integrate(&sys, s.state, s.t0, s.t1, &fo))?;
    let prov = out.provenance().clone().with_f64("tol", s.tol);
    let file = out.write_with("trajectory.csv", &prov, |p, w| traj.write_csv(p, w))?;
    let last = traj.last().map(|l| json!({ "t": l.t, "state": l.state, "mode": l.mode.label() }));
    let kinds = [
        EventKind::Cross,
        EventKind::SlideEntry,
        EventKind::SlideExitTangency,
        EventKind::Graze,
        EventKind::SingularFold,
        EventKind::Terminate,
    ];
    let events: serde_json::Map<String, Value> =
        kinds.iter().map(|k| (k.label().to_string(), json!(traj.count(*k)))).collect();
    let modes: Vec<&str> = traj.modes().iter().map(|m| m.label()).collect();
    Ok(json!({ "files": [file], "samples": traj.samples.len(), "events": events, "modes": modes, "final": last }))
}

pub fn classify(cfg: &RunConfig, p: &FoldedNodeParams, out: &Output) -> Result<Value, CommandError> {
    let points: Vec<Value> = cfg
        .classify
        .points
        .iter()
        .map(|&[y, z]| {
            let c = classify_switch_point(cfg.params.level, p, y, z);
            json!({ "y": y, "z": z, "class": format!("{c:?}") })
        })
        .collect();
    let mut v = json!({ "level": format!("{:?}", cfg.params.level), "points": points });
    if let Some([b, c]) = cfg.classify.singularity {
        let s = num("singularity classification", classify_singularity(b, c))?;
        v["singularity"] = json!({
            "b": b, "c": c, "tag": format!("{:?}", s.tag),
            "lambda1": [s.lambda1.re, s.lambda1.im],
            "lambda2": [s.lambda2.re, s.lambda2.im],
            "mu": [s.mu.re, s.mu.im],
        });
    }
    let file = out.json("classify.json", out.provenance(), &v)?;
    v["files"] = json!([file]);
    Ok(v)
}

pub fn canards(cfg: &RunConfig, out: &Output) -> Result<Value, CommandError> {
    let c = &cfg.canards;
    let mus = if c.mu.is_empty() { vec![cfg.params.mu] } else { c.mu.clone() };
    let search = CanardSearchOptions {
        scan_points: c.scan_points,
        ..CanardSearchOptions::default()
    };
    let mut assembly = AssemblyOptions {
        tail_time: c.tail_time,
        arc_points: c.arc_points,
        ..AssemblyOptions::default()
    };
    assembly.filippov.tol = c.tol;
    let runs = mus
        .par_iter()
        .map(|&mu| {
            let p = num("parameters", FoldedNodeParams::new(mu, cfg.params.eps))?;
            let s = num(format!("canard search at mu = {mu}"), find_secondary_canards(&p, &search, &assembly))?;
            Ok((mu, s))
        })
        .collect::<Result<Vec<_>, CommandError>>()?;
    let mut files = Vec::new();
    let mut results = Vec::new();
    for (mu, s) in runs {
        let mut list = Vec::new();
        for k in &s.canards {
            let prov = out
                .provenance()
                .clone()
                .with_f64("mu_run", mu)
                .with_f64("tol", c.tol)
                .with("rotation_number", k.rotation_number.to_string());
            let stem = format!("canard_mu{}_r{}", tag(mu), k.rotation_number);
            files.push(out.write_with(&format!("{stem}.csv"), &prov, |p, w| k.write_csv(p, w))?);
            files.push(out.write_with(&format!("{stem}.json"), &prov, |p, w| k.write_json(p, w))?);
            let defect = num("symmetry defect", k.symmetry_defect())?;
            list.push(json!({
                "rotation_number": k.rotation_number,
                "t_c": k.t_c,
                "zdot0": k.zdot0,
                "junction_error": k.junction_error,
                "symmetry_defect": defect,
                "max_arc_w": k.max_arc_w(),
            }));
        }
        let failures: Vec<Value> = s
            .failures
            .iter()
            .map(|f| json!({ "t_seed": f.t_seed, "reason": f.reason }))
            .collect();
        results.push(json!({
            "mu": mu,
            "count": s.canards.len(),
            "count_law": pinchfold::canard::canard_count_law(mu),
            "rotation_numbers": s.rotation_numbers(),
            "canards": list,
            "failures": failures,
        }));
    }
    let v = json!({ "eps": cfg.params.eps, "runs": results });
    files.push(out.json("canards.json", out.provenance(), &v)?);
    let mut v = v;
    v["files"] = json!(files);
    Ok(v)
}

pub fn primaries(p: &FoldedNodeParams, out: &Output) -> Result<Value, CommandError> {
    let ts: Vec<f64> = (0..=40).map(|i| -4.0 + 0.2 * i as f64).collect();
    let mut residual = 0.0f64;
    for &t in &ts {
        let pairs = [
            (weak_canard(p, t), [0.0, 1.0, p.mu() / 2.0]),
            (strong_canard(t), [0.0, 1.0, 0.5]),
        ];
        for (s, d) in pairs {
            let f = eval_straight(p, &s);
            for i in 0..3 {
                residual = residual.max((f[i] - d[i]).abs());
            }
        }
    }
    let pinched = num("primary canards in the second pinch", locate_primary_canards_pinched(p))?;
    let v = json!({
        "weak": { "u": p.mu() / 2.0, "slope_z_over_y": p.mu() / 2.0 },
        "strong": { "u": 0.5, "slope_z_over_y": 0.5 },
        "max_residual": residual,
        "second_pinch": pinched,
    });
    let file = out.json("primaries.json", out.provenance(), &v)?;
    let mut v = v;
    v["files"] = json!([file]);
    Ok(v)
}

pub fn specfun(out: &Output) -> Result<Value, CommandError> {
    let r = run_specfun_check();
    let v = serde_json::to_value(&r).unwrap_or(Value::Null);
    let file = out.json("specfun_check.json", out.provenance(), &v)?;
    if !r.passed() {
        return Err(CommandError::CheckFailed("special-function checks failed".into(), v));
    }
    let mut v = v;
    v["files"] = json!([file]);
    Ok(v)
}

fn section_options(cfg: &RunConfig) -> SectionOptions {
    let c = &cfg.continuation;
    let mut o = SectionOptions {
        y_far: c.y_far,
        offset: c.offset,
        intervals: c.intervals,
        ds_max: c.section_ds_max,
        ..SectionOptions::default()
    };
    o.bvp.tol = c.bvp_tol;
    o
}

pub fn manifolds(cfg: &RunConfig, p: &FoldedNodeParams, out: &Output) -> Result<Value, CommandError> {
    let so = section_options(cfg);
    let runs = cfg
        .continuation
        .k
        .par_iter()
        .map(|&k| {
            let rp = num("stiffness", RegularizedParams::new(*p, k))?;
            let a = num(format!("attracting section at k = {k}"), compute_slow_manifold(&rp, ManifoldSide::Attracting, &so))?;
            let r = num(format!("repelling section at k = {k}"), compute_slow_manifold(&rp, ManifoldSide::Repelling, &so))?;
            let x = num("intersections", find_intersections(&a, &r))?;
            Ok((k, a, r, x))
        })
        .collect::<Result<Vec<_>, CommandError>>()?;
    let mut files = Vec::new();
    let mut per_k = Vec::new();
    for (k, a, r, x) in &runs {
        let prov = out
            .provenance()
            .clone()
            .with_f64("k", *k)
            .with_f64("y_far", so.y_far)
            .with_f64("offset", so.offset)
            .with_f64("bvp_tol", so.bvp.tol);
        let stem = format!("sections_k{}", tag(*k));
        files.push(out.write_with(&format!("{stem}.csv"), &prov, |p, w| write_sections_csv(&[a, r], p, w))?);
        files.push(out.text(&format!("{stem}.gp"), &section_plot_script(&format!("{stem}.csv")))?);
        let v = json!({
            "k": k,
            "crossings": x.crossings,
            "tangencies": x.tangencies.len(),
            "weak_limit": x.weak_limit.len(),
            "attracting_points": a.curve.len(),
            "repelling_points": r.curve.len(),
            "max_residual": a.max_residual.max(r.max_residual),
        });
        files.push(out.json(&format!("intersections_k{}.json", tag(*k)), &prov, &v)?);
        per_k.push(json!({ "k": k, "crossings": x.crossings.len(), "weak_limit": x.weak_limit.len() }));
    }
    Ok(json!({ "sections": per_k, "files": files }))
}

pub fn branches(cfg: &RunConfig, p: &FoldedNodeParams, out: &Output) -> Result<Value, CommandError> {
    let c = &cfg.continuation;
    let o = BranchDiagramOptions {
        k_grid: c.k.clone(),
        k_low: c.k_low,
        section: section_options(cfg),
        branch: BranchOptions {
            ds_max: c.branch_ds_max,
            ..BranchOptions::default()
        },
    };
    let d = num("branch continuation", branch_diagram(p, &o))?;
    let ks: Vec<String> = c.k.iter().map(|k| fmt_f64(*k)).collect();
    let prov = out
        .provenance()
        .clone()
        .with("k_grid", ks.join(" "))
        .with_f64("k_low", c.k_low)
        .with_f64("bvp_tol", c.bvp_tol);
    let mut files = vec![out.write_with("branches.csv", &prov, |p, w| d.write_csv(p, w))?];
    let labels: Vec<_> = d.branches.iter().map(|b| b.label).collect();
    files.push(out.text("branches.gp", &branch_plot_script("branches.csv", &labels))?);
    files.push(out.write_with("branches.json", &prov, |p, w| write_json(p, &d, w))?);
    let summary: Vec<Value> = d
        .branches
        .iter()
        .map(|b| {
            let (lo, hi) = b.k_range();
            let grid: Vec<Value> = b.grid_samples().map(|s| json!({ "k": s.k, "max_x": s.max_x })).collect();
            json!({ "label": b.label.to_string(), "end": b.end, "k_min": lo, "k_max": hi, "grid": grid })
        })
        .collect();
    Ok(json!({ "counts": d.counts, "branches": summary, "weak_envelope": d.weak_envelope, "files": files }))
}

pub fn repro(out: &Output) -> Result<Value, CommandError> {
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    let v = serde_json::to_value(&outcomes).unwrap_or(Value::Null);
    let file = out.json("repro.json", out.provenance(), &v)?;
    if outcomes.iter().any(|o| !o.passed) {
        return Err(CommandError::CheckFailed("acceptance criteria failed".into(), v));
    }
    Ok(json!({ "criteria": v, "files": [file] }))
}

pub fn dispatch(cfg: &RunConfig, command: Command) -> Result<Value, CommandError> {
    let p = num("parameters", FoldedNodeParams::new(cfg.params.mu, cfg.params.eps))?;
    let out = Output::new(cfg, command)?;
    match command {
        Command::Simulate => simulate(cfg, &p, &out),
        Command::Classify => classify(cfg, &p, &out),
        Command::Canards => canards(cfg, &out),
        Command::Primaries => primaries(&p, &out),
        Command::SpecfunCheck => specfun(&out),
        Command::Manifolds => manifolds(cfg, &p, &out),
        Command::Branches => branches(cfg, &p, &out),
        Command::Repro => repro(&out),
    }
}

/// Path of `name` inside the run's output directory.
pub fn output_path(cfg: &RunConfig, name: &str) -> PathBuf {
    Path::new(&cfg.out_dir).join(name)
}
