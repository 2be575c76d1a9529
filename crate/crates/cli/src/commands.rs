//! The five subcommands. Each returns its rendered output and whether any row failed.

use std::f64::consts::PI;

use dynakernel::approx::{
    approx_residual_g1, approx_residual_u, default_data, default_g1_data, default_grids, default_u_times, script_g1, script_h1,
    tilde_gamma1, tilde_h1, ResidualReport, Stencil,
};
use dynakernel::ball_heat::{
    bound_h, bound_l, corrector_phi1, dirichlet_evolution, e1, f1, f1_profile, gamma1, h1, EigenBasis,
};
use dynakernel::ball_laplace::{green_ball, harmonic_extension, k1, poisson_ball, resolved_sphere_spec};
use dynakernel::dyn_eigen::{g1_dyn, G1DynSection, WentzellBasis};
use dynakernel::halfspace::{
    g_plus_heat, g_plus_mass, gamma_plus, green_halfspace_laplace, heat_kernel_free, k_plus, phi_laplace, poisson_halfspace,
};
use dynakernel::numerics::{integrate_sphere, BallRule, QuadratureSpec};
use dynakernel::par::{map_indexed, Execution};
use dynakernel::stochastic::{gamma1_mc_with, mean_exit_time_with, McOptions};
use dynakernel::{BoundaryFunction, InteriorFunction, KernelError, KernelValue, Point, Result};
use serde_json::json;

use crate::config::{Domain, EigenKind, Format, Kernel, RunConfig, Which};
use crate::output::{coord_header, coords, num, opt_num, text, Table};

pub struct Outcome {
    pub primary: String,
    /// `(file suffix, contents)` written next to the primary output.
    pub sidecars: Vec<(String, String)>,
    pub failed: bool,
}

impl Outcome {
    fn single(primary: String, failed: bool) -> Self {
        Outcome { primary, sidecars: vec![], failed }
    }
}

fn point(c: &[f64]) -> Result<Point> {
    Point::new(c)
}

fn sphere_spec(cfg: &RunConfig) -> QuadratureSpec {
    let order = match (cfg.quadrature.sphere, cfg.n) {
        (0, 2) => 256,
        (0, _) => 32,
        (o, _) => o,
    };
    QuadratureSpec::gauss(order)
}

fn time_spec(cfg: &RunConfig) -> QuadratureSpec {
    QuadratureSpec::graded_to_end(cfg.quadrature.time)
}

/// `count` boundary nodes: equal angles on the circle, a Fibonacci lattice on the sphere.
pub fn sphere_nodes(n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|j| {
            if n == 2 {
                let a = 2.0 * PI * j as f64 / count as f64;
                vec![a.cos(), a.sin()]
            } else {
                let z = 1.0 - (2.0 * j as f64 + 1.0) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let a = j as f64 * PI * (3.0 - 5f64.sqrt());
                vec![r * a.cos(), r * a.sin(), z]
            }
        })
        .collect()
}

fn error_code(e: &KernelError) -> String {
    e.code().to_string()
}

struct Bases {
    dirichlet: Option<EigenBasis>,
    wentzell: Option<WentzellBasis>,
}

impl Bases {
    fn for_kernel(cfg: &RunConfig) -> Result<Self> {
        let k = cfg.kernel;
        let needs_dirichlet = cfg.domain == Domain::Ball
            && matches!(
                k,
                Kernel::GammaD
                    | Kernel::E1
                    | Kernel::F1
                    | Kernel::H1
                    | Kernel::ScriptG1
                    | Kernel::ScriptH1
                    | Kernel::TildeGamma1
                    | Kernel::TildeH1
                    | Kernel::Corrector
            );
        Ok(Bases {
            dirichlet: if needs_dirichlet { Some(EigenBasis::new(cfg.n, cfg.truncation)?) } else { None },
            wentzell: if k == Kernel::G1dyn { Some(WentzellBasis::new(cfg.n, cfg.truncation)?) } else { None },
        })
    }
}

fn eval_one(cfg: &RunConfig, b: &Bases, x: &Point, y: &Point, t: Option<f64>) -> Result<KernelValue> {
    let t = t.unwrap_or(0.0);
    let exact = |v: Result<f64>| v.map(KernelValue::exact);
    let ball = cfg.domain == Domain::Ball;
    let db = || b.dirichlet.as_ref().expect("basis built for kernel");
    match cfg.kernel {
        Kernel::Phi => exact(phi_laplace(cfg.n, &x.sub(y))),
        Kernel::GLaplace if ball => exact(green_ball(x, y)),
        Kernel::GLaplace => exact(green_halfspace_laplace(x, y)),
        Kernel::P if ball => exact(poisson_ball(x, y)),
        Kernel::P => exact(poisson_halfspace(x, y)),
        Kernel::K if ball => exact(k1(x, y, t)),
        Kernel::K => exact(k_plus(x, y, t)),
        Kernel::Gamma => exact(heat_kernel_free(x, y, t)),
        Kernel::GammaD if ball => gamma1(db(), x, y, t),
        Kernel::GammaD => exact(gamma_plus(x, y, t)),
        Kernel::GHeat => g_plus_heat(x, y, t, &time_spec(cfg), cfg.g_plus_form),
        Kernel::E1 => e1(db(), x, y, t),
        Kernel::F1 => f1(db(), x, y, t),
        Kernel::H1 => h1(db(), x, y, t, &time_spec(cfg)),
        Kernel::ScriptG1 => script_g1(db(), x, y, t, &time_spec(cfg)),
        Kernel::ScriptH1 => script_h1(db(), x, y, t, &time_spec(cfg)),
        Kernel::TildeGamma1 => tilde_gamma1(db(), x, y, t),
        Kernel::TildeH1 => tilde_h1(db(), x, y, t),
        Kernel::G1dyn => g1_dyn(b.wentzell.as_ref().expect("basis built for kernel"), x, y, t),
        Kernel::Corrector => corrector_phi1(db(), x, y, t, &time_spec(cfg)),
        Kernel::BoundH => Ok(KernelValue::exact(bound_h(x, y, t))),
        Kernel::BoundL => Ok(KernelValue::exact(bound_l(x, y, t))),
    }
}

#[derive(serde::Serialize)]
struct EvalRecord {
    x: Vec<f64>,
    y: Vec<f64>,
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

pub fn eval(cfg: &RunConfig) -> Outcome {
    let mut ys = cfg.y.clone();
    ys.extend(sphere_nodes(cfg.n, cfg.y_sphere));
    let ts: Vec<Option<f64>> = if cfg.kernel.uses_time() { cfg.t.iter().map(|&t| Some(t)).collect() } else { vec![None] };
    let mut jobs = Vec::new();
    for x in &cfg.x {
        for y in &ys {
            for &t in &ts {
                jobs.push((x.clone(), y.clone(), t));
            }
        }
    }
    let bases = Bases::for_kernel(cfg);
    let results: Vec<Result<KernelValue>> = map_indexed(Execution::Parallel, jobs.len(), |i| {
        let (x, y, t) = &jobs[i];
        let b = bases.as_ref().map_err(Clone::clone)?;
        eval_one(cfg, b, &point(x)?, &point(y)?, *t)
    });
    let records: Vec<EvalRecord> = jobs
        .into_iter()
        .zip(results)
        .map(|((x, y, t), r)| match r {
            Ok(v) => EvalRecord { x, y, t, value: Some(v.value), error: Some(v.error), code: None, message: None },
            Err(e) => EvalRecord { x, y, t, value: None, error: None, code: Some(error_code(&e)), message: Some(e.to_string()) },
        })
        .collect();
    let failed = records.iter().any(|r| r.code.is_some());
    let primary = match cfg.format {
        Format::Json => {
            let v = if records.len() == 1 { json!(records[0]) } else { json!(records) };
            serde_json::to_string_pretty(&v).expect("records serialize") + "\n"
        }
        Format::Csv => {
            let mut h = coord_header("x", cfg.n);
            h.extend(coord_header("y", cfg.n));
            h.extend(["t", "value", "error", "code", "message"].map(String::from));
            let mut table = Table::new(h);
            for r in &records {
                let mut row = coords(&r.x);
                row.extend(coords(&r.y));
                row.push(opt_num(r.t));
                row.push(opt_num(r.value));
                row.push(opt_num(r.error));
                row.push(r.code.clone().unwrap_or_default());
                row.push(text(r.message.as_deref().unwrap_or("")));
                table.push(row);
            }
            table.to_csv()
        }
    };
    Outcome::single(primary, failed)
}

fn default_ball_points(n: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        vec![vec![0.0, 0.0], vec![0.3, 0.0], vec![-0.2, 0.5], vec![0.5, 0.5], vec![0.0, -0.9]]
    } else {
        vec![vec![0.0, 0.0, 0.0], vec![0.3, 0.0, 0.0], vec![-0.2, 0.5, 0.1], vec![0.4, 0.4, 0.4], vec![0.0, 0.0, -0.9]]
    }
}

fn default_halfspace_points(n: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        vec![vec![0.0, 0.5], vec![0.3, 0.2], vec![-1.0, 1.0]]
    } else {
        vec![vec![0.0, 0.0, 0.5], vec![0.3, -0.1, 0.2], vec![-1.0, 0.5, 1.0]]
    }
}

struct IdentityRow {
    name: &'static str,
    x: Vec<f64>,
    t: Option<f64>,
    outcome: Result<KernelValue>,
    tolerance: f64,
}

pub fn identities(cfg: &RunConfig) -> Outcome {
    let n = cfg.n;
    let ts = if cfg.t.is_empty() { vec![0.5] } else { cfg.t.clone() };
    let mut rows: Vec<IdentityRow> = Vec::new();
    let tol = &cfg.tolerances;
    if cfg.domain == Domain::Ball {
        let xs = if cfg.x.is_empty() { default_ball_points(n) } else { cfg.x.clone() };
        let dir = EigenBasis::new(n, cfg.truncation);
        let wen = WentzellBasis::new(n, cfg.truncation);
        let sphere = sphere_spec(cfg);
        let one_b = BoundaryFunction::constant(1.0);
        let one_i = InteriorFunction::constant(1.0);
        for xc in &xs {
            let x = point(xc);
            let o = x.clone().and_then(|x| harmonic_extension(&one_b, &x, &sphere));
            rows.push(IdentityRow { name: "poisson", x: xc.clone(), t: None, outcome: o, tolerance: tol.poisson });
            for &t in &ts {
                let k = x.clone().and_then(|x| {
                    let q = x.scale((-t).exp());
                    let spec = resolved_sphere_spec(&q, &sphere);
                    let v = integrate_sphere(n, &spec, |y| k1(&x, y, t).unwrap_or(f64::NAN))?;
                    Ok(KernelValue::new(v.value, v.abs_error))
                });
                rows.push(IdentityRow { name: "k1", x: xc.clone(), t: Some(t), outcome: k, tolerance: tol.k1 });
                let m = x.clone().and_then(|x| {
                    let b = dir.as_ref().map_err(Clone::clone)?;
                    let surf = f1_profile(b, &x, t)?.integrate(&one_b, &sphere)?;
                    let vol = dirichlet_evolution(b, &one_i, &x, t)?;
                    Ok(KernelValue::new(surf.value + vol.value, surf.error + vol.error))
                });
                rows.push(IdentityRow { name: "f1_gamma1_mass", x: xc.clone(), t: Some(t), outcome: m, tolerance: tol.f1_mass });
                let g = x.clone().and_then(|x| {
                    let w = wen.as_ref().map_err(Clone::clone)?;
                    let sec = G1DynSection::new(w, &x, t)?;
                    let (vol, surf) = sec.integrate(&BallRule::new(n, cfg.quadrature.radial, sphere.order)?);
                    Ok(KernelValue::new(vol + surf, w.tail(t)))
                });
                rows.push(IdentityRow { name: "g1dyn_mass", x: xc.clone(), t: Some(t), outcome: g, tolerance: tol.g1dyn_mass });
            }
        }
    } else {
        let xs = if cfg.x.is_empty() { default_halfspace_points(n) } else { cfg.x.clone() };
        for xc in &xs {
            for &t in &ts {
                let o = point(xc).and_then(|x| g_plus_mass(&x, t, &time_spec(cfg), cfg.g_plus_form, 64));
                rows.push(IdentityRow { name: "g_plus_mass", x: xc.clone(), t: Some(t), outcome: o, tolerance: tol.gplus_mass });
            }
        }
    }
    let mut h = vec!["identity".to_string()];
    h.extend(coord_header("x", n));
    h.extend(["t", "value", "deviation", "error", "tolerance", "pass", "code"].map(String::from));
    let mut table = Table::new(h);
    let mut failed = false;
    let mut json_rows = Vec::new();
    for r in &rows {
        let mut row = vec![r.name.to_string()];
        row.extend(coords(&r.x));
        row.push(opt_num(r.t));
        match &r.outcome {
            Ok(v) => {
                let dev = (v.value - 1.0).abs();
                let pass = dev <= r.tolerance;
                failed |= !pass;
                row.extend([num(v.value), num(dev), num(v.error), num(r.tolerance), pass.to_string(), String::new()]);
                json_rows.push(json!({"identity": r.name, "x": r.x, "t": r.t, "value": v.value, "deviation": dev,
                    "error": v.error, "tolerance": r.tolerance, "pass": pass}));
            }
            Err(e) => {
                failed = true;
                row.extend([String::new(), String::new(), String::new(), num(r.tolerance), "false".into(), error_code(e)]);
                json_rows.push(json!({"identity": r.name, "x": r.x, "t": r.t, "code": error_code(e), "pass": false}));
            }
        }
        table.push(row);
    }
    let primary = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => serde_json::to_string_pretty(&json_rows).expect("serialize") + "\n",
    };
    Outcome::single(primary, failed)
}

pub fn eigen(cfg: &RunConfig) -> Outcome {
    let n = cfg.n;
    let (csv, js, failed) = match cfg.eigen {
        EigenKind::Dirichlet => match EigenBasis::new(n, cfg.truncation) {
            Ok(b) => {
                let mut rows = b.rows();
                rows.sort_by(|a, c| a.lambda.total_cmp(&c.lambda).then(a.l.cmp(&c.l)).then(a.k.cmp(&c.k)));
                let monotone = rows.windows(2).all(|w| w[0].lambda <= w[1].lambda);
                let mut t = Table::new(["l", "k", "lambda", "norm_constant", "boundary_flux", "residual", "code"]);
                for r in &rows {
                    let res = b.radial(r.l, r.k, 1.0).abs();
                    t.push(vec![
                        r.l.to_string(),
                        r.k.to_string(),
                        num(r.lambda),
                        num(r.norm_constant),
                        num(r.boundary_flux),
                        num(res),
                        String::new(),
                    ]);
                }
                (t.to_csv(), b.to_json(), !monotone)
            }
            Err(e) => failed_table(&["l", "k", "lambda", "norm_constant", "boundary_flux", "residual", "code"], &e),
        },
        EigenKind::Wentzell => match WentzellBasis::new(n, cfg.truncation) {
            Ok(b) => {
                let rows = b.rows();
                let monotone = rows.windows(2).all(|w| w[0].lambda <= w[1].lambda);
                let mut t = Table::new(["l", "k", "lambda", "norm_constant", "boundary_value", "boundary_flux", "residual", "code"]);
                for r in &rows {
                    let res = (r.boundary_flux - r.lambda * r.boundary_value).abs();
                    t.push(vec![
                        r.l.to_string(),
                        r.k.to_string(),
                        num(r.lambda),
                        num(r.norm_constant),
                        num(r.boundary_value),
                        num(r.boundary_flux),
                        num(res),
                        String::new(),
                    ]);
                }
                (t.to_csv(), b.to_json(), !monotone)
            }
            Err(e) => failed_table(
                &["l", "k", "lambda", "norm_constant", "boundary_value", "boundary_flux", "residual", "code"],
                &e,
            ),
        },
    };
    let js = serde_json::to_string_pretty(&js).expect("serialize") + "\n";
    let (primary, other) = match cfg.format {
        Format::Csv => (csv, (".json".to_string(), js)),
        Format::Json => (js, (".csv".to_string(), csv)),
    };
    Outcome { primary, sidecars: vec![other], failed }
}

fn failed_table(header: &[&str], e: &KernelError) -> (String, serde_json::Value, bool) {
    let mut t = Table::new(header.iter().copied());
    let mut row = vec![String::new(); header.len()];
    *row.last_mut().expect("nonempty header") = error_code(e);
    t.push(row);
    (t.to_csv(), json!({"code": error_code(e), "message": e.to_string()}), true)
}

pub fn mc(cfg: &RunConfig) -> Outcome {
    let n = cfg.n;
    let mut h = vec!["quantity".to_string()];
    h.extend(coord_header("x", n));
    h.extend(coord_header("y", n));
    h.extend(["t", "mc_mean", "mc_stderr", "series", "z", "pass", "code"].map(String::from));
    let mut table = Table::new(h);
    let mut failed = false;
    let mut json_rows = Vec::new();
    let basis = EigenBasis::new(n, cfg.truncation);
    let mut row_id = 0u64;
    let opts = |row: u64| {
        let mut o = McOptions::new(cfg.mc.dt, cfg.mc.seed.wrapping_add(row));
        o.scheme = cfg.mc.scheme;
        o
    };
    let blank = vec![String::new(); n];
    for xc in &cfg.x {
        let mut jobs: Vec<(String, Option<Vec<f64>>, Option<f64>)> = Vec::new();
        for yc in &cfg.y {
            for &t in &cfg.t {
                jobs.push(("gamma1".into(), Some(yc.clone()), Some(t)));
            }
        }
        if cfg.mc.exit_time {
            jobs.push(("exit_time".into(), None, None));
        }
        for (q, yc, t) in jobs {
            let o = opts(row_id);
            row_id += 1;
            let r: Result<(f64, f64, f64)> = (|| {
                let x = point(xc)?;
                match (&yc, t) {
                    (Some(yc), Some(t)) => {
                        let y = point(yc)?;
                        let b = basis.as_ref().map_err(Clone::clone)?;
                        let series = gamma1(b, &x, &y, t)?.value;
                        let est = gamma1_mc_with(&x, &y, t, cfg.mc.paths, &o)?;
                        Ok((est.mean, est.std_error, series))
                    }
                    _ => {
                        let est = mean_exit_time_with(&x, cfg.mc.paths, &o)?;
                        Ok((est.mean, est.std_error, (1.0 - x.norm_sq()) / (2.0 * n as f64)))
                    }
                }
            })();
            let mut row = vec![q.clone()];
            row.extend(coords(xc));
            row.extend(yc.as_deref().map(coords).unwrap_or_else(|| blank.clone()));
            row.push(opt_num(t));
            match r {
                Ok((mean, se, series)) => {
                    let z = (mean - series) / se;
                    let allowance = if q == "gamma1" { 0.02 * series.abs() } else { 0.0 };
                    let pass = (mean - series).abs() <= 3.0 * se + allowance;
                    failed |= !pass;
                    row.extend([num(mean), num(se), num(series), num(z), pass.to_string(), String::new()]);
                    json_rows.push(json!({"quantity": q, "x": xc, "y": yc, "t": t, "mc_mean": mean, "mc_stderr": se,
                        "series": series, "z": z, "pass": pass}));
                }
                Err(e) => {
                    failed = true;
                    row.extend([String::new(), String::new(), String::new(), String::new(), "false".into(), error_code(&e)]);
                    json_rows.push(json!({"quantity": q, "x": xc, "y": yc, "t": t, "code": error_code(&e), "pass": false}));
                }
            }
            table.push(row);
        }
    }
    let primary = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => serde_json::to_string_pretty(&json_rows).expect("serialize") + "\n",
    };
    Outcome::single(primary, failed)
}

pub fn residual(cfg: &RunConfig) -> Outcome {
    let n = cfg.n;
    let stencil = Stencil { h: cfg.residual.h, k: cfg.residual.k };
    let (dx, dt) = default_grids(n);
    let xs: Result<Vec<Point>> = if cfg.x.is_empty() { Ok(dx) } else { cfg.x.iter().map(|c| point(c)).collect() };
    let run = || -> Result<Vec<(&'static str, ResidualReport)>> {
        let xs = xs?;
        let basis = EigenBasis::new(n, cfg.truncation)?;
        let mut out = Vec::new();
        if matches!(cfg.residual.which, Which::Both | Which::G1) {
            let tg = if cfg.t.is_empty() { dt.clone() } else { cfg.t.clone() };
            let (pb, pi) = default_g1_data(n)?;
            out.push(("g1", approx_residual_g1(&basis, &pb, &pi, &xs, &tg, stencil)?));
        }
        if matches!(cfg.residual.which, Which::Both | Which::U) {
            let tg = if cfg.t.is_empty() { default_u_times() } else { cfg.t.clone() };
            let (pb, pi) = default_data();
            out.push(("u", approx_residual_u(&basis, &pb, &pi, &xs, &tg, stencil, &sphere_spec(cfg))?));
        }
        Ok(out)
    };
    match run() {
        Ok(reports) => {
            let failed = !reports.iter().all(|(_, r)| r.all_verdicts());
            let mut verdicts = Table::new(["report", "component", "verdict"]);
            for (name, r) in &reports {
                for (c, v) in &r.verdicts {
                    verdicts.push(vec![name.to_string(), c.clone(), v.to_string()]);
                }
            }
            match cfg.format {
                Format::Json => {
                    let v: Vec<_> = reports.iter().map(|(name, r)| json!({"report": name, "result": r})).collect();
                    Outcome::single(serde_json::to_string_pretty(&v).expect("serialize") + "\n", failed)
                }
                Format::Csv => {
                    let mut rows = String::new();
                    for (i, (_, r)) in reports.iter().enumerate() {
                        let csv = r.to_csv();
                        rows.push_str(if i == 0 { &csv } else { csv.split_once('\n').map_or("", |(_, b)| b) });
                    }
                    Outcome { primary: rows, sidecars: vec![("_verdicts.csv".into(), verdicts.to_csv())], failed }
                }
            }
        }
        Err(e) => {
            let mut t = Table::new(["code", "message"]);
            t.push(vec![error_code(&e), text(&e.to_string())]);
            Outcome::single(t.to_csv(), true)
        }
    }
}
