//! Analytic well-in-island potentials: Gaussian-term sums evaluable at complex
//! arguments, saddle location and normalization, sublevel classification, and
//! the saddle bump.
//!
//! The potential is `V(x) = -asymptotic_depth - energy_shift + sum(terms)`.
//! A normalized spec has `V(saddle) = 0`, `grad V(saddle) = 0`, and the saddle
//! Hessian has signature `(n-1, 1)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FieldGrid;

/// One Gaussian building block.
///
/// With `radial = false` the term is `amplitude * exp(-|x - center|^2 / width)`.
/// With `radial = true` it is a spherical shell around `center`:
/// `amplitude * exp(-(|x - center| - ring_radius)^2 / width)`; `ring_radius = 0`
/// reduces to the plain Gaussian. Shell terms use the principal square root of
/// `sum (z_i - c_i)^2` at complex arguments, which is well defined on dilation
/// contours `x -> exp(i theta) x` for `|theta| < pi/4`; plain terms are entire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: Vec<f64>,
    /// Squared length scale of the Gaussian.
    pub width: f64,
    pub radial: bool,
    #[serde(default)]
    pub ring_radius: f64,
}

impl GaussianTerm {
    pub fn gaussian(amplitude: f64, center: Vec<f64>, width: f64) -> Self {
        GaussianTerm {
            amplitude,
            center,
            width,
            radial: false,
            ring_radius: 0.0,
        }
    }

    pub fn shell(amplitude: f64, center: Vec<f64>, ring_radius: f64, width: f64) -> Self {
        GaussianTerm {
            amplitude,
            center,
            width,
            radial: true,
            ring_radius,
        }
    }
}

/// Sum-of-Gaussians potential with a constant sea floor at depth
/// `asymptotic_depth + energy_shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub terms: Vec<GaussianTerm>,
    /// Base depth: `V -> -(asymptotic_depth + energy_shift)` at infinity.
    pub asymptotic_depth: f64,
    pub dimension: usize,
    /// Calibration constant subtracted so that `V(saddle) = 0`.
    pub energy_shift: f64,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl PotentialSpec {
    /// Effective sea depth `E_0` after normalization, so `V + E_0 -> 0`.
    pub fn e0(&self) -> f64 {
        self.asymptotic_depth + self.energy_shift
    }

    pub fn value(&self, z: &[Complex64]) -> Complex64 {
        let mut v = Complex64::new(-self.asymptotic_depth - self.energy_shift, 0.0);
        for t in &self.terms {
            v += term_value(t, z);
        }
        v
    }

    pub fn gradient(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut g = vec![ZERO; self.dimension];
        for t in &self.terms {
            term_gradient(t, z, &mut g);
        }
        g
    }

    pub fn hessian(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.dimension;
        let mut h = vec![ZERO; n * n];
        for t in &self.terms {
            term_hessian(t, z, n, &mut h);
        }
        h
    }

    pub fn value_real(&self, x: &[f64]) -> f64 {
        let z: Vec<Complex64> = x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.value(&z).re
    }

    pub fn gradient_real(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<Complex64> = x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.gradient(&z).iter().map(|c| c.re).collect()
    }

    pub fn hessian_real(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<Complex64> = x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.hessian(&z).iter().map(|c| c.re).collect()
    }

    /// Value on the dilation contour `x -> exp(i theta) x`.
    pub fn value_dilated(&self, x: &[f64], theta: f64) -> Complex64 {
        let rot = Complex64::new(0.0, theta).exp();
        let z: Vec<Complex64> = x.iter().map(|&a| rot * a).collect();
        self.value(&z)
    }

    /// Narrowest Gaussian length scale `sqrt(width)` over all terms.
    pub fn narrowest_width(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.width.sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Evaluation of value/gradient/Hessian in one call, order 0..=2.
pub fn eval_potential(
    spec: &PotentialSpec,
    point: &[Complex64],
    order: u8,
) -> (Complex64, Option<Vec<Complex64>>, Option<Vec<Complex64>>) {
    assert!(order <= 2, "order must be 0, 1 or 2");
    let v = spec.value(point);
    let g = (order >= 1).then(|| spec.gradient(point));
    let h = (order >= 2).then(|| spec.hessian(point));
    (v, g, h)
}

fn term_value(t: &GaussianTerm, z: &[Complex64]) -> Complex64 {
    let q: Complex64 = z
        .iter()
        .zip(&t.center)
        .map(|(zi, ci)| (zi - ci) * (zi - ci))
        .sum();
    if !t.radial || t.ring_radius == 0.0 {
        return t.amplitude * (-q / t.width).exp();
    }
    let r = q.sqrt();
    let d = r - t.ring_radius;
    t.amplitude * (-d * d / t.width).exp()
}

fn term_gradient(t: &GaussianTerm, z: &[Complex64], out: &mut [Complex64]) {
    let u: Vec<Complex64> = z.iter().zip(&t.center).map(|(zi, ci)| zi - ci).collect();
    let q: Complex64 = u.iter().map(|ui| ui * ui).sum();
    if !t.radial || t.ring_radius == 0.0 {
        let val = t.amplitude * (-q / t.width).exp();
        for (o, ui) in out.iter_mut().zip(&u) {
            *o += val * (-2.0 / t.width) * ui;
        }
        return;
    }
    let r = q.sqrt();
    if r.norm() < 1e-12 {
        // shell term is stationary on its axis point
        return;
    }
    let d = r - t.ring_radius;
    let val = t.amplitude * (-d * d / t.width).exp();
    for (o, ui) in out.iter_mut().zip(&u) {
        *o += val * (-2.0 * d / t.width) * (ui / r);
    }
}

fn term_hessian(t: &GaussianTerm, z: &[Complex64], n: usize, out: &mut [Complex64]) {
    let u: Vec<Complex64> = z.iter().zip(&t.center).map(|(zi, ci)| zi - ci).collect();
    let q: Complex64 = u.iter().map(|ui| ui * ui).sum();
    if !t.radial || t.ring_radius == 0.0 {
        let val = t.amplitude * (-q / t.width).exp();
        for i in 0..n {
            for j in 0..n {
                let mut hij = 4.0 / (t.width * t.width) * u[i] * u[j];
                if i == j {
                    hij -= 2.0 / t.width;
                }
                out[i * n + j] += val * hij;
            }
        }
        return;
    }
    let r = q.sqrt();
    if r.norm() < 1e-12 {
        return;
    }
    let d = r - t.ring_radius;
    let val = t.amplitude * (-d * d / t.width).exp();
    let w = t.width;
    for i in 0..n {
        for j in 0..n {
            let uu = u[i] * u[j] / (r * r);
            let mut hij = (4.0 * d * d / (w * w) - 2.0 / w + 2.0 * d / (w * r)) * uu;
            if i == j {
                hij -= 2.0 * d / (w * r);
            }
            out[i * n + j] += val * hij;
        }
    }
}

/// Saddle data: location, Hessian eigenbasis and the dilation of the unstable
/// axis that normalizes the quadratic model.
///
/// Columns of `basis` are Hessian eigenvectors; the last column is the
/// unstable direction, oriented so it points from the well toward the sea.
/// `scale = (2/|lambda_n|)^(1/4)` is the symplectic stretch of the unstable
/// pair; `scale^2` is the coordinate unit in which the transversal potential
/// model is `-u^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleFrame {
    pub saddle: Vec<f64>,
    /// Row-major `n x n` orthogonal matrix, eigenvectors as columns.
    pub basis: Vec<f64>,
    pub scale: f64,
    /// Ascending-stable-first; last entry is the negative eigenvalue.
    pub hessian_eigenvalues: Vec<f64>,
}

impl SaddleFrame {
    pub fn dim(&self) -> usize {
        self.saddle.len()
    }

    /// Energy normalizer `kappa = sqrt(2 |lambda_n|)` of the quadratic model.
    pub fn kappa(&self) -> f64 {
        (2.0 * self.hessian_eigenvalues[self.dim() - 1].abs()).sqrt()
    }

    /// Unstable axis direction (unit vector, ambient coordinates).
    pub fn unstable_axis(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.basis[i * n + (n - 1)]).collect()
    }

    /// Ambient point of frame coordinates: `x = saddle + B S xt`.
    pub fn to_ambient(&self, xt: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = self.saddle.clone();
        for i in 0..n {
            for j in 0..n {
                let s = if j == n - 1 { self.scale } else { 1.0 };
                x[i] += self.basis[i * n + j] * s * xt[j];
            }
        }
        x
    }

    /// Ambient momentum of frame momentum: `xi = B S^{-1} xit`.
    pub fn momentum_to_ambient(&self, xit: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut xi = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let s = if j == n - 1 { 1.0 / self.scale } else { 1.0 };
                xi[i] += self.basis[i * n + j] * s * xit[j];
            }
        }
        xi
    }
}

/// Newton search for a signature-(n-1,1) critical point, then normalization:
/// sets `energy_shift` so the critical value is zero and builds the frame.
pub fn find_saddle_and_normalize(
    spec: &PotentialSpec,
    guess: &[f64],
) -> Result<(PotentialSpec, SaddleFrame)> {
    let n = spec.dimension;
    let mut x = guess.to_vec();
    for _ in 0..100 {
        let g = spec.gradient_real(&x);
        let r = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r < 1e-12 {
            break;
        }
        let h = spec.hessian_real(&x);
        let step = solve_small(&h, &g, n).ok_or(Error::NoConvergence {
            residual: r,
            iterations: 100,
        })?;
        for i in 0..n {
            x[i] -= step[i];
        }
    }
    let g = spec.gradient_real(&x);
    let residual = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    if residual > 1e-10 {
        return Err(Error::NoConvergence {
            residual,
            iterations: 100,
        });
    }

    let h = spec.hessian_real(&x);
    let (mut eigvals, mut eigvecs) = sym_eig_small(&h, n);
    // stable directions first, unstable last
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap());
    eigvals = order.iter().map(|&i| eigvals[i]).collect();
    eigvecs = {
        let mut v = vec![0.0; n * n];
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..n {
                v[i * n + newj] = eigvecs[i * n + oldj];
            }
        }
        v
    };
    let neg = eigvals.iter().filter(|&&l| l < 0.0).count();
    let pos = n - neg;
    if neg != 1 {
        return Err(Error::WrongSignature {
            pos,
            neg,
            expected_pos: n - 1,
        });
    }

    // Orient the unstable axis toward the sea: descend from both sides and
    // keep the side that escapes farthest from the saddle.
    let mut axis: Vec<f64> = (0..n).map(|i| eigvecs[i * n + (n - 1)]).collect();
    if descent_escape(spec, &x, &axis) < descent_escape(spec, &x, &axis.iter().map(|a| -a).collect::<Vec<_>>()) {
        for a in axis.iter_mut() {
            *a = -*a;
        }
        for i in 0..n {
            eigvecs[i * n + (n - 1)] = axis[i];
        }
    }
    // keep the basis right-handed
    if n == 2 {
        let det = eigvecs[0] * eigvecs[3] - eigvecs[1] * eigvecs[2];
        if det < 0.0 {
            eigvecs[0] = -eigvecs[0];
            eigvecs[2] = -eigvecs[2];
        }
    }

    let lambda_n = eigvals[n - 1];
    let frame = SaddleFrame {
        saddle: x.clone(),
        basis: eigvecs,
        scale: (2.0 / lambda_n.abs()).powf(0.25),
        hessian_eigenvalues: eigvals,
    };
    let mut normalized = spec.clone();
    normalized.energy_shift += spec.value_real(&x);
    Ok((normalized, frame))
}

/// How far gradient descent from `saddle + 0.05*dir` gets from the saddle.
fn descent_escape(spec: &PotentialSpec, saddle: &[f64], dir: &[f64]) -> f64 {
    let n = saddle.len();
    let mut x: Vec<f64> = (0..n).map(|i| saddle[i] + 0.05 * dir[i]).collect();
    let mut best = 0.0f64;
    for _ in 0..400 {
        let g = spec.gradient_real(&x);
        let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if gn < 1e-9 {
            break;
        }
        let step = 0.05 / gn.max(0.05);
        for i in 0..n {
            x[i] -= step * g[i];
        }
        let d = (0..n).map(|i| (x[i] - saddle[i]).powi(2)).sum::<f64>().sqrt();
        best = best.max(d);
        if best > 40.0 {
            break;
        }
    }
    best
}

fn solve_small(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    match n {
        1 => {
            if a[0].abs() < 1e-300 {
                None
            } else {
                Some(vec![b[0] / a[0]])
            }
        }
        2 => {
            let det = a[0] * a[3] - a[1] * a[2];
            if det.abs() < 1e-300 {
                None
            } else {
                Some(vec![(b[0] * a[3] - b[1] * a[1]) / det, (a[0] * b[1] - a[2] * b[0]) / det])
            }
        }
        _ => None,
    }
}

/// Eigendecomposition of a small (n <= 2) symmetric matrix; returns
/// (eigenvalues, column eigenvectors row-major).
fn sym_eig_small(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![a[0]], vec![1.0]),
        2 => {
            let (a11, a12, a22) = (a[0], 0.5 * (a[1] + a[2]), a[3]);
            let tr = a11 + a22;
            let disc = ((a11 - a22) * 0.5).hypot(a12);
            let l1 = 0.5 * tr + disc;
            let l2 = 0.5 * tr - disc;
            // eigenvector of l1 via the well-conditioned component:
            // (l1 - a22, a12) has first entry >= disc when a11 >= a22
            let (mut c, mut s) = if a11 >= a22 {
                (l1 - a22, a12)
            } else {
                (a12, l1 - a11)
            };
            let norm = c.hypot(s);
            if norm < 1e-300 {
                (c, s) = (1.0, 0.0);
            } else {
                c /= norm;
                s /= norm;
            }
            // columns: (c,s) for l1, (-s,c) for l2
            (vec![l1, l2], vec![c, -s, s, c])
        }
        _ => unreachable!(),
    }
}

/// Saddle bump `chi_eps(x, xi) = eps * exp(-alpha^2 (|x-saddle|^2 + |xi|^2)/eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub eps: f64,
    /// Bump dilation; "small enough" in the comparability sense, default 0.5.
    pub alpha: f64,
}

impl Bump {
    pub fn new(frame: &SaddleFrame, eps: f64, alpha: f64) -> Self {
        Bump {
            center: frame.saddle.clone(),
            eps,
            alpha,
        }
    }

    /// `chi_eps(x, 0)` at a real point.
    pub fn at_x(&self, x: &[f64]) -> f64 {
        if self.eps == 0.0 {
            return 0.0;
        }
        let q: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        self.eps * (-self.alpha * self.alpha * q / self.eps).exp()
    }

    /// Full phase-space symbol at real `(x, xi)`.
    pub fn at(&self, x: &[f64], xi: &[f64]) -> f64 {
        if self.eps == 0.0 {
            return 0.0;
        }
        let q: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            + xi.iter().map(|a| a * a).sum::<f64>();
        self.eps * (-self.alpha * self.alpha * q / self.eps).exp()
    }

    /// Critical value `E_eps = V_eps(saddle) - V(saddle) = eps * chi(0)`.
    pub fn e_eps(&self) -> f64 {
        self.eps
    }
}

/// `V_eps(x) = V(x) + chi_eps(x, 0)`.
pub fn v_eps(spec: &PotentialSpec, bump: &Bump, x: &[f64]) -> f64 {
    spec.value_real(x) + bump.at_x(x)
}

/// Region label of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Well,
    Sea,
    Island,
    /// Sublevel cells in bounded components other than the well.
    Boundary,
}

/// Sublevel-set classification of a potential (optionally bumped) at energy E.
#[derive(Debug, Clone)]
pub struct RegionLabels {
    pub grid: FieldGrid,
    pub energy: f64,
    pub labels: Vec<Label>,
    /// Flat index of the deepest well cell, if a well exists.
    pub well_seed: Option<usize>,
}

impl RegionLabels {
    pub fn count(&self, l: Label) -> usize {
        self.labels.iter().filter(|&&x| x == l).count()
    }

    pub fn well_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == Label::Well)
            .map(|(i, _)| i)
    }

    pub fn sea_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == Label::Sea)
            .map(|(i, _)| i)
    }

    /// CSV rows `x,y,label` (or `x,label` in 1D).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.grid.dim == 2 {
            out.push_str("x,y,label\n");
        } else {
            out.push_str("x,label\n");
        }
        for idx in 0..self.grid.len() {
            let p = self.grid.point(idx);
            let name = match self.labels[idx] {
                Label::Well => "well",
                Label::Sea => "sea",
                Label::Island => "island",
                Label::Boundary => "boundary",
            };
            for c in &p {
                out.push_str(&format!("{c:.6},"));
            }
            out.push_str(name);
            out.push('\n');
        }
        out
    }
}

/// Flood-fill classification of `{V_eff < E}` with 4-connectivity.
///
/// Components touching the grid boundary are sea; among bounded components the
/// one with the deepest minimum is the well; remaining bounded components are
/// labelled `Boundary`. Cells with `V_eff >= E` (ties included) are island.
pub fn classify_sublevel_of(
    values: &[f64],
    grid: &FieldGrid,
    energy: f64,
) -> Result<RegionLabels> {
    let len = grid.len();
    assert_eq!(values.len(), len);
    let sub: Vec<bool> = values.iter().map(|&v| v < energy).collect();

    let mut comp = vec![usize::MAX; len];
    let mut comp_info: Vec<(bool, f64, usize)> = Vec::new(); // (touches_boundary, min_v, seed)
    let mut stack = Vec::new();
    let mut nbuf = Vec::new();
    for start in 0..len {
        if !sub[start] || comp[start] != usize::MAX {
            continue;
        }
        let id = comp_info.len();
        let mut touches = false;
        let mut min_v = f64::INFINITY;
        let mut seed = start;
        stack.push(start);
        comp[start] = id;
        while let Some(c) = stack.pop() {
            if grid.on_boundary(c) {
                touches = true;
            }
            if values[c] < min_v {
                min_v = values[c];
                seed = c;
            }
            grid.neighbors(c, &mut nbuf);
            for k in 0..nbuf.len() {
                let nb = nbuf[k];
                if sub[nb] && comp[nb] == usize::MAX {
                    comp[nb] = id;
                    stack.push(nb);
                }
            }
        }
        comp_info.push((touches, min_v, seed));
    }

    let well_id = comp_info
        .iter()
        .enumerate()
        .filter(|(_, (touches, _, _))| !touches)
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(id, _)| id);

    let any_sublevel = comp_info.len() > 0;
    let any_sea = comp_info.iter().any(|(t, _, _)| *t);
    if any_sublevel && well_id.is_none() && any_sea {
        return Err(Error::SingleComponent { energy });
    }

    let mut labels = vec![Label::Island; len];
    for i in 0..len {
        if !sub[i] {
            continue;
        }
        let id = comp[i];
        labels[i] = if Some(id) == well_id {
            Label::Well
        } else if comp_info[id].0 {
            Label::Sea
        } else {
            Label::Boundary
        };
    }
    Ok(RegionLabels {
        grid: *grid,
        energy,
        labels,
        well_seed: well_id.map(|id| comp_info[id].2),
    })
}

/// Classification of the plain potential.
pub fn classify_sublevel(spec: &PotentialSpec, energy: f64, grid: &FieldGrid) -> Result<RegionLabels> {
    let values: Vec<f64> = (0..grid.len())
        .map(|i| spec.value_real(&grid.point(i)))
        .collect();
    classify_sublevel_of(&values, grid, energy)
}

/// Classification of the bumped potential `V_eps`.
pub fn classify_sublevel_bumped(
    spec: &PotentialSpec,
    bump: &Bump,
    energy: f64,
    grid: &FieldGrid,
) -> Result<RegionLabels> {
    let values: Vec<f64> = (0..grid.len())
        .map(|i| v_eps(spec, bump, &grid.point(i)))
        .collect();
    classify_sublevel_of(&values, grid, energy)
}

/// The scale functions attached to a saddle at `center`.
#[derive(Debug, Clone)]
pub struct ScaleFunctions {
    pub eps: f64,
    pub center: Vec<f64>,
}

impl ScaleFunctions {
    pub fn new(eps: f64, center: Vec<f64>) -> Self {
        ScaleFunctions { eps, center }
    }

    fn dist2(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum()
    }

    /// `R_eps(x) = (eps + x^2)^(1/2)` with `x` measured from the saddle.
    pub fn r_big(&self, x: &[f64]) -> f64 {
        (self.eps + self.dist2(x)).sqrt()
    }

    /// `r_eps(x) = ((eps + x^2)/(1 + x^2))^(1/2)`.
    pub fn r_small(&self, x: &[f64]) -> f64 {
        let d2 = self.dist2(x);
        ((self.eps + d2) / (1.0 + d2)).sqrt()
    }

    /// `rt_eps(x, xi)^2 = r_eps(x)^2 + xi^2`.
    pub fn r_tilde(&self, x: &[f64], xi: &[f64]) -> f64 {
        let xi2: f64 = xi.iter().map(|a| a * a).sum();
        (self.r_small(x).powi(2) + xi2).sqrt()
    }
}

/// Width of the channel between well and sea of `V_eps` at `E = E_eps - eps*F`,
/// measured along the unstable axis in the coordinate unit `scale^2` that
/// normalizes the transversal model to `-u^2` (so the quadratic model gives
/// exactly `2 sqrt(eps F)`).
pub fn neck_gap(
    spec: &PotentialSpec,
    frame: &SaddleFrame,
    eps: f64,
    alpha: f64,
    f_level: f64,
) -> Result<f64> {
    let bump = Bump::new(frame, eps, alpha);
    let energy = bump.e_eps() - eps * f_level;
    let unit = frame.scale * frame.scale;
    let axis = frame.unstable_axis();
    let n = frame.dim();

    // offsets along the stable directions, in ambient units
    let offsets: Vec<Vec<f64>> = if n == 1 {
        vec![vec![0.0; 1]]
    } else {
        let stable: Vec<f64> = (0..n).map(|i| frame.basis[i * n]).collect();
        [-0.5f64, -0.25, 0.0, 0.25, 0.5]
            .iter()
            .map(|&c| {
                let d = c * (eps * f_level.max(1e-30)).sqrt();
                (0..n).map(|i| d * stable[i]).collect()
            })
            .collect()
    };

    let eval = |t: f64, off: &[f64]| -> f64 {
        let x: Vec<f64> = (0..n)
            .map(|i| frame.saddle[i] + off[i] + t * axis[i])
            .collect();
        v_eps(spec, &bump, &x) - energy
    };

    let t_max = 1.0 + 4.0 * (eps * f_level.abs().max(eps)).sqrt();
    let mut inf_sea = f64::INFINITY;
    let mut sup_well = f64::NEG_INFINITY;
    for off in &offsets {
        if eval(0.0, off) <= 1e-14 {
            // already at/below the level on the axis: touching neck
            inf_sea = inf_sea.min(0.0);
            sup_well = sup_well.max(0.0);
            continue;
        }
        for sign in [1.0f64, -1.0] {
            let mut found = None;
            let steps = 4000;
            let dt = t_max / steps as f64;
            let mut prev = eval(0.0, off);
            for k in 1..=steps {
                let t = sign * dt * k as f64;
                let cur = eval(t, off);
                if prev > 0.0 && cur <= 0.0 {
                    // bisect
                    let (mut lo, mut hi) = (t - sign * dt, t);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if eval(mid, off) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    found = Some(0.5 * (lo + hi));
                    break;
                }
                prev = cur;
            }
            match (sign > 0.0, found) {
                (true, Some(t)) => inf_sea = inf_sea.min(t),
                (false, Some(t)) => sup_well = sup_well.max(t),
                (_, None) => return Err(Error::NoRoot { energy }),
            }
        }
    }
    Ok((inf_sea - sup_well) / unit)
}

/// The canonical 2D island: ring barrier around a shallow basin, a channel
/// notch through the ridge, and a Gaussian pedestal shaping the sea floor.
/// Returned normalized, with its saddle frame.
pub fn canonical_2d() -> (PotentialSpec, SaddleFrame) {
    let ring_radius = 2.2;
    let spec = PotentialSpec {
        terms: vec![
            // island pedestal
            GaussianTerm::gaussian(0.22, vec![0.0, 0.0], 1.7),
            // ring barrier
            GaussianTerm::shell(0.35, vec![0.0, 0.0], ring_radius, 0.20),
            // central depression
            GaussianTerm::gaussian(-0.07, vec![0.0, 0.0], 0.9),
            // channel notch through the ridge
            GaussianTerm::gaussian(-0.135, vec![0.0, ring_radius], 0.20),
        ],
        asymptotic_depth: 0.22,
        dimension: 2,
        energy_shift: 0.0,
    };
    find_saddle_and_normalize(&spec, &[0.0, ring_radius])
        .expect("canonical 2d potential has a saddle near the channel")
}

/// 1D validation potential: asymmetric double barrier, the lower (right)
/// barrier top is the saddle.
pub fn canonical_1d() -> (PotentialSpec, SaddleFrame) {
    let rho = 1.6;
    let spec = PotentialSpec {
        terms: vec![
            GaussianTerm::gaussian(0.22, vec![0.0], 1.0),
            GaussianTerm::gaussian(0.55, vec![-rho], 0.16),
            GaussianTerm::gaussian(0.21, vec![rho], 0.16),
            GaussianTerm::gaussian(-0.05, vec![0.0], 0.5),
        ],
        asymptotic_depth: 0.22,
        dimension: 1,
        energy_shift: 0.0,
    };
    find_saddle_and_normalize(&spec, &[rho]).expect("1d double barrier has a saddle at the right top")
}
