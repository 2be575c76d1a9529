//! Monte Carlo for Brownian motion killed on the unit sphere.
//!
//! The heat kernel here solves `u_t = Laplace u`, so paths use Euler steps of variance
//! `2 dt` per coordinate (generator `Laplace`). Every path owns a ChaCha
//! stream keyed by `(seed, path_id)`, so results do not depend on scheduling.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{KernelError, Result};
use crate::geometry::{check_dims, check_n, require_positive_t, BallClass, Point};
use crate::halfspace::heat_kernel_free;
use crate::par::{map_indexed, Execution};

/// Hard cap on steps per path.
pub const MAX_STEPS: u64 = 10_000_000;

/// How crossings between grid times are detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exit only when a grid point lands outside.
    #[default]
    Euler,
    /// Also exits inside a step with the local Brownian bridge crossing probability.
    Bridge,
}

/// First exit from the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitSample {
    pub tau: f64,
    /// Crossing point, normalized onto the sphere.
    pub position: Point,
    pub dt: f64,
    /// Norm of the first outside step before interpolation.
    pub overshoot: f64,
}

/// Sample mean with standard error `sd / sqrt(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub dt: f64,
}

impl MCEstimate {
    /// Mean and standard error of `values`, summed in index order.
    pub fn from_values(values: &[f64], dt: f64) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MCEstimate { mean, std_error: (var / n as f64).sqrt(), paths: n, dt }
    }
}

/// Independent stream for one path.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(KernelError::InvalidParameter(format!("dt must lie in (0, 1e-3], got {dt}")));
    }
    Ok(())
}

/// `s` in (0, 1] with `|a + s (b - a)| = 1`, for `|a| < 1 <= |b|`.
fn crossing_fraction(a: &Point, b: &Point) -> f64 {
    let d = b.sub(a);
    let (qa, qb, qc) = (d.norm_sq(), 2.0 * a.dot(&d), a.norm_sq() - 1.0);
    // qc < 0 so the positive root is well conditioned in this form
    let s = -2.0 * qc / (qb + (qb * qb - 4.0 * qa * qc).sqrt());
    s.clamp(0.0, 1.0)
}

/// Runs one path until it leaves the ball or time `horizon` passes; `None` if it survives.
fn walk<R: Rng>(start: &Point, dt: f64, horizon: f64, scheme: Scheme, rng: &mut R) -> Result<Option<ExitSample>> {
    let n = start.dim();
    let sd = (2.0 * dt).sqrt();
    let mut p = *start;
    let mut steps: u64 = 0;
    loop {
        if steps as f64 * dt >= horizon {
            return Ok(None);
        }
        if steps >= MAX_STEPS {
            return Err(KernelError::RunawayPath { steps });
        }
        let mut next = p;
        for k in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            next = next.with(k, next.get(k) + sd * z);
        }
        steps += 1;
        if next.norm_sq() >= 1.0 {
            let s = crossing_fraction(&p, &next);
            let hit = p.add(&next.sub(&p).scale(s));
            return Ok(Some(ExitSample {
                tau: (steps as f64 - 1.0 + s) * dt,
                position: hit.scale(1.0 / hit.norm()),
                dt,
                overshoot: next.norm(),
            }));
        }
        if scheme == Scheme::Bridge {
            // flat-wall bridge: P(cross) = exp(-2 d0 d1 / (2 dt))
            let (d0, d1) = (1.0 - p.norm(), 1.0 - next.norm());
            let u: f64 = rng.gen();
            if u < (-d0 * d1 / dt).exp() {
                let s = d0 / (d0 + d1);
                let mid = p.add(&next.sub(&p).scale(s));
                return Ok(Some(ExitSample {
                    tau: (steps as f64 - 1.0 + s) * dt,
                    position: mid.scale(1.0 / mid.norm()),
                    dt,
                    overshoot: 1.0,
                }));
            }
        }
        p = next;
    }
}

/// Samples the first exit from the ball of a path started at interior `start`.
pub fn sample_exit<R: Rng>(start: &Point, dt: f64, rng: &mut R) -> Result<ExitSample> {
    sample_exit_with(start, dt, Scheme::Euler, rng)
}

pub fn sample_exit_with<R: Rng>(start: &Point, dt: f64, scheme: Scheme, rng: &mut R) -> Result<ExitSample> {
    check_n(start.dim())?;
    check_dt(dt)?;
    if start.ball_class() != BallClass::Interior {
        return Err(KernelError::Domain(format!("start must be interior, |x| = {}", start.norm())));
    }
    walk(start, dt, f64::INFINITY, scheme, rng)?.ok_or(KernelError::RunawayPath { steps: MAX_STEPS })
}

/// Mean exit time from `start` over `paths` paths.
pub fn mean_exit_time(start: &Point, paths: usize, dt: f64, seed: u64, exec: Execution) -> Result<MCEstimate> {
    mean_exit_time_with(start, paths, &McOptions { dt, seed, exec, scheme: Scheme::Euler })
}

/// Knobs shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub dt: f64,
    pub seed: u64,
    pub exec: Execution,
    pub scheme: Scheme,
}

impl McOptions {
    pub fn new(dt: f64, seed: u64) -> Self {
        McOptions { dt, seed, exec: Execution::default(), scheme: Scheme::Euler }
    }
}

pub fn mean_exit_time_with(start: &Point, paths: usize, opts: &McOptions) -> Result<MCEstimate> {
    let dt = opts.dt;
    let taus: Result<Vec<f64>> = map_indexed(opts.exec, paths, |i| {
        sample_exit_with(start, dt, opts.scheme, &mut path_rng(opts.seed, i as u64)).map(|s| s.tau)
    })
    .into_iter()
    .collect();
    Ok(MCEstimate::from_values(&taus?, dt))
}

/// One path of the killed-kernel estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub path_id: u64,
    /// Exit before `t`, if any.
    pub exit: Option<ExitSample>,
    pub contrib: f64,
}

/// Per-path values of `Gamma(x, y, t) - 1[tau < t] Gamma(W_tau, y, t - tau)`.
pub fn gamma1_mc_paths(x: &Point, y: &Point, t: f64, paths: usize, opts: &McOptions) -> Result<Vec<PathRecord>> {
    let (dt, seed) = (opts.dt, opts.seed);
    check_dims(x, y)?;
    require_positive_t(t)?;
    check_dt(dt)?;
    for p in [x, y] {
        if p.ball_class() != BallClass::Interior {
            return Err(KernelError::Domain(format!("points must be interior, |p| = {}", p.norm())));
        }
    }
    if paths == 0 {
        return Err(KernelError::InvalidParameter("path count must be positive".into()));
    }
    let free = heat_kernel_free(x, y, t)?;
    map_indexed(opts.exec, paths, |i| {
        let exit = walk(x, dt, t, opts.scheme, &mut path_rng(seed, i as u64))?.filter(|e| e.tau < t);
        let sub = match &exit {
            Some(e) => heat_kernel_free(&e.position, y, t - e.tau)?,
            None => 0.0,
        };
        Ok(PathRecord { path_id: i as u64, exit, contrib: free - sub })
    })
    .into_iter()
    .collect()
}

/// Estimates the killed heat kernel at `(x, y, t)` from the exit law.
pub fn gamma1_mc(x: &Point, y: &Point, t: f64, paths: usize, dt: f64, seed: u64) -> Result<MCEstimate> {
    gamma1_mc_with(x, y, t, paths, &McOptions::new(dt, seed))
}

pub fn gamma1_mc_with(x: &Point, y: &Point, t: f64, paths: usize, opts: &McOptions) -> Result<MCEstimate> {
    let recs = gamma1_mc_paths(x, y, t, paths, opts)?;
    let v: Vec<f64> = recs.iter().map(|r| r.contrib).collect();
    Ok(MCEstimate::from_values(&v, opts.dt))
}

/// Raw samples as CSV: `path_id,tau,exit_x...,contrib`; surviving paths leave `tau` and the exit empty.
pub fn write_paths_csv<W: Write>(out: &mut W, n: usize, recs: &[PathRecord]) -> std::io::Result<()> {
    let coords: Vec<String> = (0..n).map(|k| format!("exit_x{k}")).collect();
    writeln!(out, "path_id,tau,{},contrib", coords.join(","))?;
    for r in recs {
        let (tau, pos) = match &r.exit {
            Some(e) => (
                format!("{:.16e}", e.tau),
                e.position.coords().iter().map(|c| format!("{c:.16e}")).collect::<Vec<_>>(),
            ),
            None => (String::new(), vec![String::new(); n]),
        };
        writeln!(out, "{},{},{},{:.16e}", r.path_id, tau, pos.join(","), r.contrib)?;
    }
    Ok(())
}
