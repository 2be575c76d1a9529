//! Dirichlet eigenbasis of the Laplacian on the unit ball.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{KernelError, Result};
use crate::geometry::check_n;
use crate::numerics::bessel::{z, z_and_dz, Kind};
use crate::numerics::harmonics::pair_factors;
use crate::numerics::zeros::zero_table;
use crate::numerics::QuadratureSpec;
use crate::par::Execution;

/// Absolute size of the dropped series mass that a truncation must stay below.
pub const TAIL_TARGET: f64 = 1e-8;

/// Cutoffs of the eigen-series: degrees `l <= lmax`, radial indices `k <= kmax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    pub lmax: usize,
    pub kmax: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { lmax: 40, kmax: 60 }
    }
}

/// One eigenpair `-Delta phi = lambda phi`, `phi = R(r) Y_l`, `R(r) = c Z_l(mu r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub l: usize,
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    /// `c > 0`.
    pub norm: f64,
    /// `-R'(1)`.
    pub flux: f64,
}

/// One row of the exported table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenRow {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub lambda: f64,
    pub norm_constant: f64,
    pub boundary_flux: f64,
}

/// Radial profile values `R_lk(r)` for every mode at one radius, index `l * kmax + k - 1`.
#[derive(Debug, Clone)]
pub struct RadialTable {
    pub r: f64,
    pub values: Vec<f64>,
}

/// All Dirichlet eigenpairs with `l <= lmax`, `k <= kmax`.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    n: usize,
    kind: Kind,
    trunc: Truncation,
    mu: Vec<f64>,
    lambda: Vec<f64>,
    norm: Vec<f64>,
    flux: Vec<f64>,
    lambda_cut: f64,
    t_min: f64,
    exec: Execution,
    rings: Arc<Mutex<HashMap<usize, Arc<RadialRings>>>>,
}

/// Radial tables at the Gauss-Legendre nodes of `[0, 1]`, shared by every projection of that order.
#[derive(Debug)]
pub struct RadialRings {
    pub radii: Vec<f64>,
    /// Weights including the Jacobian `r^(n-1)`.
    pub weights: Vec<f64>,
    pub tables: Vec<RadialTable>,
}

fn radial_mass(kind: Kind, n: usize, l: usize, mu: f64, c: f64) -> f64 {
    let m = (mu.ceil() as usize) + 48;
    QuadratureSpec::gauss(m).rule(0.0, 1.0).apply(|r| {
        let v = c * z(kind, l, mu * r);
        v * v * r.powi(n as i32 - 1)
    })
}

impl EigenBasis {
    pub fn new(n: usize, trunc: Truncation) -> Result<Self> {
        check_n(n)?;
        if trunc.lmax > 100 || trunc.kmax > 200 || trunc.kmax == 0 {
            return Err(KernelError::InvalidParameter(format!(
                "truncation needs lmax <= 100 and 1 <= kmax <= 200, got {} and {}",
                trunc.lmax, trunc.kmax
            )));
        }
        let kind = Kind::for_dim(n);
        let table = zero_table(kind, trunc.lmax + 1, trunc.kmax + 1)?;
        let size = (trunc.lmax + 1) * trunc.kmax;
        let (mut mu, mut lambda, mut norm, mut flux) =
            (Vec::with_capacity(size), Vec::with_capacity(size), Vec::with_capacity(size), Vec::with_capacity(size));
        for l in 0..=trunc.lmax {
            for k in 0..trunc.kmax {
                let m = table[l][k];
                let up = z(kind, l + 1, m);
                if up == 0.0 {
                    return Err(KernelError::RootFindFailure { lo: m, hi: m });
                }
                let c = SQRT_2 / up.abs();
                mu.push(m);
                lambda.push(m * m);
                norm.push(c);
                // Z_l'(mu) = -Z_{l+1}(mu) at a zero of Z_l
                flux.push(c * m * up);
            }
        }
        let lambda_cut = table[trunc.lmax + 1][0].powi(2).min(table[0][trunc.kmax].powi(2));
        let mut basis = EigenBasis {
            n,
            kind,
            trunc,
            mu,
            lambda,
            norm,
            flux,
            lambda_cut,
            t_min: 0.0,
            exec: Execution::default(),
            rings: Arc::new(Mutex::new(HashMap::new())),
        };
        basis.t_min = basis.solve_t_min();
        basis.cross_check()?;
        Ok(basis)
    }

    /// Same basis, with a different execution mode for data-parallel loops.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    // The closed-form constants are checked against radial quadrature on
    // the corners of the table; a mismatch fails construction.
    fn cross_check(&self) -> Result<()> {
        let Truncation { lmax, kmax } = self.trunc;
        let mut ls = vec![0, lmax / 2, lmax];
        ls.dedup();
        let mut ks = vec![1, kmax.div_ceil(2), kmax];
        ks.dedup();
        for &l in &ls {
            for &k in &ks {
                let i = self.index(l, k);
                let mass = radial_mass(self.kind, self.n, l, self.mu[i], self.norm[i]);
                if (mass - 1.0).abs() > 1e-8 {
                    return Err(KernelError::Contract(format!(
                        "normalization of mode (l={l}, k={k}) off by {:e}",
                        mass - 1.0
                    )));
                }
            }
        }
        Ok(())
    }

    fn solve_t_min(&self) -> f64 {
        let (mut lo, mut hi) = (1e-10f64, 1e3f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if self.tail(mid) < TAIL_TARGET {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn lmax(&self) -> usize {
        self.trunc.lmax
    }

    pub fn kmax(&self) -> usize {
        self.trunc.kmax
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    #[inline]
    pub fn index(&self, l: usize, k: usize) -> usize {
        l * self.trunc.kmax + k - 1
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn norms(&self) -> &[f64] {
        &self.norm
    }

    pub fn fluxes(&self) -> &[f64] {
        &self.flux
    }

    /// Smallest eigenvalue left out of the truncation.
    pub fn lambda_cut(&self) -> f64 {
        self.lambda_cut
    }

    /// Smallest `t` at which [`Self::tail`] is below `1e-8`.
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Bound on the dropped part of `sum e^{-lambda t} |phi(x) phi(y)|`:
    /// `e^{-lambda_cut t / 2} (2 pi t)^{-n/2}`, from Cauchy-Schwarz and
    /// `Gamma_1(x, x, t/2) <= (2 pi t)^{-n/2}`.
    pub fn tail(&self, t: f64) -> f64 {
        (-0.5 * self.lambda_cut * t).exp() * (2.0 * PI * t).powf(-0.5 * self.n as f64)
    }

    /// Estimate of the dropped part of the flux series `sum e^{-lambda t} |phi(x)| |d_nu phi(y)|`.
    pub fn flux_tail(&self, t: f64) -> f64 {
        self.tail(t) * (2.0 * self.lambda_cut).sqrt()
    }

    /// Rejects `t < t_min` with the cutoffs that would be needed.
    pub fn check_t(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(KernelError::Domain(format!("t must be positive, got {t}")));
        }
        if t >= self.t_min {
            return Ok(());
        }
        let nf = self.n as f64;
        let need = (2.0 / t) * (1.0 / TAIL_TARGET).ln() - nf / t * (2.0 * PI * t).ln();
        let root = need.max(0.0).sqrt();
        // j_{nu,1} > nu and j_{nu,k} > (k - 1/4) pi
        Err(KernelError::TruncationInsufficient {
            t,
            t_min: self.t_min,
            required_lmax: root.ceil() as usize,
            required_kmax: (root / PI + 0.25).ceil() as usize,
        })
    }

    /// `R_lk(r)`.
    pub fn radial(&self, l: usize, k: usize, r: f64) -> f64 {
        let i = self.index(l, k);
        self.norm[i] * z(self.kind, l, self.mu[i] * r)
    }

    /// `R_lk(r)` and `R_lk'(r)`.
    pub fn radial_with_derivative(&self, l: usize, k: usize, r: f64) -> (f64, f64) {
        let i = self.index(l, k);
        let (v, d) = z_and_dz(self.kind, l, self.mu[i] * r);
        (self.norm[i] * v, self.norm[i] * self.mu[i] * d)
    }

    /// `R_lk(r)` for every mode. Exact zeros on the sphere.
    pub fn radial_all(&self, r: f64) -> RadialTable {
        let kmax = self.trunc.kmax;
        let mut values = vec![0.0; self.len()];
        if r >= 1.0 {
            return RadialTable { r, values };
        }
        for l in 0..=self.trunc.lmax {
            if r == 0.0 && l > 0 {
                break;
            }
            for k in 1..=kmax {
                let i = self.index(l, k);
                values[i] = self.norm[i] * z(self.kind, l, self.mu[i] * r);
            }
        }
        RadialTable { r, values }
    }

    /// Radial tables on `order` Gauss-Legendre rings, computed once per order.
    pub fn rings(&self, order: usize) -> Arc<RadialRings> {
        if let Some(r) = self.rings.lock().unwrap().get(&order) {
            return r.clone();
        }
        let rule = QuadratureSpec::gauss(order).rule(0.0, 1.0);
        let tables = crate::par::map_indexed(self.exec, order, |j| self.radial_all(rule.nodes[j]));
        let weights = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&r, &w)| w * r.powi(self.n as i32 - 1))
            .collect();
        let rings = Arc::new(RadialRings { radii: rule.nodes, weights, tables });
        self.rings.lock().unwrap().insert(order, rings.clone());
        rings
    }

    /// Radial order that resolves the most oscillatory profile.
    pub fn resolving_radial_order(&self) -> usize {
        let mu_max = self.mu.iter().cloned().fold(0.0, f64::max);
        48usize.max((0.6 * mu_max).ceil() as usize + 16)
    }

    /// Sphere order that integrates products of harmonics up to degree `lmax` exactly.
    pub fn resolving_sphere_order(&self) -> usize {
        if self.n == 2 {
            2 * self.trunc.lmax + 2
        } else {
            self.trunc.lmax + 2
        }
    }

    /// `R_lk'(r)` for every mode.
    pub fn radial_derivative_all(&self, r: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for l in 0..=self.trunc.lmax {
            for k in 1..=self.trunc.kmax {
                out[self.index(l, k)] = self.radial_with_derivative(l, k, r).1;
            }
        }
        out
    }

    /// `A_l(c)` for `l <= lmax`.
    pub fn angular(&self, c: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.trunc.lmax + 1];
        pair_factors(self.n, c.clamp(-1.0, 1.0), &mut out);
        out
    }

    /// All pairs sorted by `(lambda, l, k)`.
    pub fn pairs(&self) -> Vec<EigenPair> {
        let mut out = Vec::with_capacity(self.len());
        for l in 0..=self.trunc.lmax {
            for k in 1..=self.trunc.kmax {
                let i = self.index(l, k);
                out.push(EigenPair {
                    l,
                    k,
                    lambda: self.lambda[i],
                    mu: self.mu[i],
                    norm: self.norm[i],
                    flux: self.flux[i],
                });
            }
        }
        out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.l.cmp(&b.l)).then(a.k.cmp(&b.k)));
        out
    }

    pub fn rows(&self) -> Vec<EigenRow> {
        self.pairs()
            .into_iter()
            .map(|p| EigenRow {
                n: self.n,
                l: p.l,
                k: p.k,
                lambda: p.lambda,
                norm_constant: p.norm,
                boundary_flux: p.flux,
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "lmax": self.trunc.lmax,
            "kmax": self.trunc.kmax,
            "t_min": self.t_min,
            "modes": self.rows(),
        })
    }
}
