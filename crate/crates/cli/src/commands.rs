use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hzreach::model::{load_model, ClosedLoopRnn};
use hzreach::plot::{emit_projection, render_svg, Polygon, SvgLayer};
use hzreach::reach::{brs, compute_series, frs, predict_complexity, ReachSeries};
use hzreach::verify::{verify_backward, verify_forward, SafetyVerdict, Status};
use hzreach::{ComplexityRecord, HybridZonotope};
use serde_json::Value;

use crate::{ProjectArgs, RunArgs};

const SVG_SIZE: f64 = 480.0;

/// Reads a set as hybrid-zonotope JSON, or as a box `{"lower": [..], "upper": [..]}`.
pub fn load_set(path: &Path) -> Result<HybridZonotope> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let (Some(lo), Some(hi)) = (v.get("lower"), v.get("upper")) {
        let lo: Vec<f64> = serde_json::from_value(lo.clone()).context("box `lower`")?;
        let hi: Vec<f64> = serde_json::from_value(hi.clone()).context("box `upper`")?;
        return HybridZonotope::from_box(&lo, &hi).with_context(|| format!("box in {}", path.display()));
    }
    HybridZonotope::from_json(&text).with_context(|| format!("hybrid zonotope in {}", path.display()))
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path> {
    match p {
        Some(p) => Ok(p),
        None => bail!("--{flag} is required for this command"),
    }
}

struct Setup {
    model: ClosedLoopRnn,
    domain: HybridZonotope,
    series: ReachSeries,
}

fn setup(a: &RunArgs, fallback_domain: Option<&HybridZonotope>) -> Result<Setup> {
    if a.horizon < 2 {
        bail!("-T must be at least 2, got {}", a.horizon);
    }
    let model = load_model(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let domain = match (&a.domain, fallback_domain) {
        (Some(p), _) => load_set(p)?,
        (None, Some(d)) => d.clone(),
        (None, None) => bail!("--domain is required for this command"),
    };
    let series = compute_series(&model, &domain, a.horizon, a.nb, a.hull.into()).context("building state-pair sets")?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    Ok(Setup { model, domain, series })
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn cx(c: ComplexityRecord) -> String {
    format!("{},{},{}", c.n_g, c.n_b, c.n_c)
}

/// Per-step counts: measured pair and derived set, and the closed-form
/// prediction for the derived set.
fn complexity_table(s: &Setup, side: &HybridZonotope, sets: &[(usize, HybridZonotope)], forward: bool) -> String {
    let n = s.domain.dim();
    let mut out = String::from("t,unstable,exact,pair_ng,pair_nb,pair_nc,set_ng,set_nb,set_nc,pred_ng,pred_nb,pred_nc\n");
    for (t, z) in sets {
        let p = s.series.pair(*t).expect("series covers every step");
        let pred = predict_complexity(s.domain.complexity(), side.complexity(), side.complexity(), n, p.unstable, p.exact);
        let want = if forward { pred.frs } else { pred.brs };
        let _ = writeln!(out, "{t},{},{},{},{},{}", p.unstable, p.exact, cx(p.complexity()), cx(z.complexity()), cx(want));
    }
    out
}

/// Polygons, sampled members and an SVG for a family of sets.
/// Sets in fewer than two dimensions get no figures.
fn emit_figures(prefix: &str, dir: &Path, sets: &[(usize, HybridZonotope)], dims: (usize, usize), dirs: usize, samples: usize, seed: u64) -> Result<()> {
    if sets.first().is_some_and(|(_, z)| z.dim() < 2) {
        eprintln!("note: {prefix} sets are one-dimensional; skipping projections");
        return Ok(());
    }
    let mut polys: Vec<(usize, Vec<Polygon>)> = Vec::new();
    let mut points: Vec<(usize, Vec<f64>)> = Vec::new();
    for (t, z) in sets {
        let p = match emit_projection(z, dims, dirs) {
            Ok(p) => p,
            Err(hzreach::Error::EmptySet) => continue,
            Err(e) => return Err(e).with_context(|| format!("projecting {prefix} at t={t}")),
        };
        polys.push((*t, p));
        let pts = z.sample_points(samples, seed.wrapping_add(*t as u64)).with_context(|| format!("sampling {prefix} at t={t}"))?;
        points.extend(pts.into_iter().map(|v| (*t, v.iter().copied().collect())));
    }

    let mut csv = String::from("t,polygon,vertex,x,y\n");
    for (t, ps) in &polys {
        for (k, p) in ps.iter().enumerate() {
            for (v, [x, y]) in p.vertices.iter().enumerate() {
                let _ = writeln!(csv, "{t},{k},{v},{x:e},{y:e}");
            }
        }
    }
    write(dir, &format!("{prefix}_polygons.csv"), &csv)?;

    let n = sets.first().map_or(0, |(_, z)| z.dim());
    let mut csv = String::from("t");
    for k in 0..n {
        let _ = write!(csv, ",x{k}");
    }
    csv.push('\n');
    for (t, p) in &points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(csv, "{t},{}", row.join(","));
    }
    write(dir, &format!("{prefix}_points.csv"), &csv)?;

    let layers: Vec<SvgLayer> = polys.iter().map(|(t, p)| SvgLayer { label: format!("{prefix} t={t}"), polygons: p }).collect();
    let scatter: Vec<[f64; 2]> = points.iter().map(|(_, p)| [p[dims.0], p[dims.1]]).collect();
    write(dir, &format!("{prefix}.svg"), &render_svg(&layers, &scatter, SVG_SIZE))
}

pub fn forward(a: &RunArgs) -> Result<()> {
    let x1 = load_set(required(&a.initial, "initial")?)?;
    let s = setup(a, Some(&x1))?;
    let sets: Vec<(usize, HybridZonotope)> =
        (2..=a.horizon).map(|t| Ok((t, frs(&s.series, &x1, t)?))).collect::<hzreach::Result<_>>().context("forward sets")?;
    for (t, z) in &sets {
        write(&a.out, &format!("frs_t{t}.json"), &z.to_json())?;
    }
    let table = complexity_table(&s, &x1, &sets, true);
    write(&a.out, "complexity.csv", &table)?;
    print!("{table}");
    emit_figures("frs", &a.out, &sets, a.dims, a.dirs, a.samples, a.seed)
}

pub fn backward(a: &RunArgs) -> Result<()> {
    let target = load_set(required(&a.target, "target")?)?;
    let s = setup(a, None)?;
    let sets: Vec<(usize, HybridZonotope)> =
        (2..=a.horizon).map(|t| Ok((t, brs(&s.series, &target, t)?))).collect::<hzreach::Result<_>>().context("backward sets")?;
    for (t, z) in &sets {
        write(&a.out, &format!("brs_t{t}.json"), &z.to_json())?;
    }
    let table = complexity_table(&s, &target, &sets, false);
    write(&a.out, "complexity.csv", &table)?;
    print!("{table}");
    if let Some(p) = &a.initial {
        // Which steps admit initial states that reach the target.
        let x1 = load_set(p)?;
        let mut csv = String::from("t,seed_nonempty\n");
        for (t, z) in &sets {
            let empty = z.intersect(&x1)?.is_empty()?;
            let _ = writeln!(csv, "{t},{}", !empty);
        }
        write(&a.out, "seeds.csv", &csv)?;
    }
    emit_figures("brs", &a.out, &sets, a.dims, a.dirs, a.samples, a.seed)
}

/// Combined verdict: a confirmed violation wins, then a safety proof from
/// either route; otherwise unknown.
fn combine(f: &SafetyVerdict, b: &SafetyVerdict) -> Status {
    if f.status == Status::Unsafe || b.status == Status::Unsafe {
        Status::Unsafe
    } else if f.status == Status::Safe || b.status == Status::Safe {
        Status::Safe
    } else {
        Status::Unknown
    }
}

pub fn verify(a: &RunArgs) -> Result<u8> {
    let x1 = load_set(required(&a.initial, "initial")?)?;
    let o = load_set(required(&a.unsafe_set, "unsafe")?)?;
    let back = setup(a, Some(&x1))?;
    let fwd_series = compute_series(&back.model, &x1, a.horizon, a.nb, a.hull.into()).context("forward state pairs")?;
    let f = verify_forward(&back.model, &fwd_series, &x1, &o, a.tol)?;
    let b = verify_backward(&back.model, &back.series, &o, &x1, a.tol)?;
    let status = combine(&f, &b);
    let report = serde_json::json!({ "status": status, "forward": f, "backward": b });
    write(&a.out, "verdict.json", &serde_json::to_string_pretty(&report)?)?;
    println!("{}", serde_json::to_string(&status)?.trim_matches('"'));
    Ok(match status {
        Status::Safe => 0,
        Status::Unsafe => 2,
        Status::Unknown => 3,
    })
}

pub fn project(a: &ProjectArgs) -> Result<()> {
    let z = load_set(&a.set)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    emit_figures("proj", &a.out, &[(0, z)], a.dims, a.dirs, a.samples, a.seed)
}
