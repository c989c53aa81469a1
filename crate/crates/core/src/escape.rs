//! Escape function near the saddle, Hamilton brackets, deformed symbols, and
//! sampling-based certification of the comparability implications.
//!
//! Everything here works in saddle-frame coordinates, where the symbol is
//! `p = (xi_n^2 - x_n^2)/2 + q(x', xi')/2 + O(|rho|^3)` with `q` positive
//! definite, and the escape function is a cutoff of `G_0 = x_n xi_n`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Bump, PotentialSpec, SaddleFrame};

/// Smooth monotone step: 1 on `(-inf, 1/2]`, 0 on `[1, inf)`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.5 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    sigma(2.0 * (1.0 - s))
}

/// Derivative of the smooth step (nonpositive, supported in (1/2, 1)).
pub fn smooth_step_deriv(s: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        return 0.0;
    }
    -2.0 * sigma_deriv(2.0 * (1.0 - s))
}

fn bump_exp(t: f64) -> f64 {
    (-1.0 / t).exp()
}

/// `sigma(t) = f(t)/(f(t)+f(1-t))`, `f(t) = exp(-1/t)`: smooth, 0 at 0, 1 at 1.
fn sigma(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = bump_exp(t);
    let g = bump_exp(1.0 - t);
    f / (f + g)
}

fn sigma_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let f = bump_exp(t);
    let g = bump_exp(1.0 - t);
    let fp = f / (t * t);
    let gp = g / ((1.0 - t) * (1.0 - t));
    (fp * g + f * gp) / ((f + g) * (f + g))
}

/// A phase point in frame coordinates, `rho = (x, xi)` with `2n` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint(pub Vec<f64>);

impl PhasePoint {
    pub fn dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn x(&self) -> &[f64] {
        &self.0[..self.dim()]
    }

    pub fn xi(&self) -> &[f64] {
        &self.0[self.dim()..]
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }
}

/// The truncated escape function
/// `G(x, xi) = (1 - step(lambda x_n / sqrt(eps + x'^2 + xi^2))) x_n xi_n`,
/// or the untruncated `G_0 = x_n xi_n` when `pure` is set.
#[derive(Debug, Clone, Copy)]
pub struct EscapeFunction {
    pub eps: f64,
    pub lambda: f64,
    pub pure_g0: bool,
}

impl EscapeFunction {
    pub fn cutoff(eps: f64, lambda: f64) -> Self {
        EscapeFunction {
            eps,
            lambda,
            pure_g0: false,
        }
    }

    pub fn pure() -> Self {
        EscapeFunction {
            eps: 0.0,
            lambda: 1.0,
            pure_g0: true,
        }
    }

    /// `eps + x'^2 + xi^2` (everything except `x_n`).
    fn base(&self, rho: &PhasePoint) -> f64 {
        let n = rho.dim();
        let mut b = self.eps;
        for i in 0..n - 1 {
            b += rho.x()[i] * rho.x()[i];
        }
        for v in rho.xi() {
            b += v * v;
        }
        b
    }

    pub fn value(&self, rho: &PhasePoint) -> f64 {
        let n = rho.dim();
        let xn = rho.x()[n - 1];
        let xin = rho.xi()[n - 1];
        if self.pure_g0 {
            return xn * xin;
        }
        if xn <= 0.0 {
            return 0.0;
        }
        let s = self.lambda * xn / self.base(rho).sqrt();
        (1.0 - smooth_step(s)) * xn * xin
    }

    /// Gradient `(d_x G, d_xi G)`, closed form.
    pub fn gradient(&self, rho: &PhasePoint) -> Vec<f64> {
        let n = rho.dim();
        let xn = rho.x()[n - 1];
        let xin = rho.xi()[n - 1];
        let mut g = vec![0.0; 2 * n];
        if self.pure_g0 {
            g[n - 1] = xin;
            g[2 * n - 1] = xn;
            return g;
        }
        if xn <= 0.0 {
            return g;
        }
        let base = self.base(rho);
        let root = base.sqrt();
        let s = self.lambda * xn / root;
        let pref = 1.0 - smooth_step(s);
        let dstep = smooth_step_deriv(s);
        // ds/dxn = lambda / root; ds/dv = -lambda xn v / root^3 for v in base
        let g0 = xn * xin;
        g[n - 1] = pref * xin - dstep * (self.lambda / root) * g0;
        g[2 * n - 1] = pref * xn;
        for i in 0..n - 1 {
            let v = rho.x()[i];
            g[i] = -dstep * (-self.lambda * xn * v / (root * base)) * g0;
        }
        for i in 0..n {
            let v = rho.xi()[i];
            g[n + i] += -dstep * (-self.lambda * xn * v / (root * base)) * g0;
        }
        g
    }

    /// Hamilton vector field `H_G = (d_xi G, -d_x G)`.
    pub fn hamilton_field(&self, rho: &PhasePoint) -> Vec<f64> {
        let n = rho.dim();
        let g = self.gradient(rho);
        let mut h = vec![0.0; 2 * n];
        for i in 0..n {
            h[i] = g[n + i];
            h[n + i] = -g[i];
        }
        h
    }
}

/// Evaluate `G` and optionally its gradient.
pub fn escape_value(esc: &EscapeFunction, rho: &PhasePoint, order: u8) -> (f64, Option<Vec<f64>>) {
    assert!(order <= 1);
    let v = esc.value(rho);
    let g = (order == 1).then(|| esc.gradient(rho));
    (v, g)
}

/// Symbols evaluable in frame coordinates, at real and complex phase points.
#[derive(Clone)]
pub enum Symbol<'a> {
    /// `p0 = (xi_n^2 - x_n^2)/2 + sum_i (cx[i] x_i^2 + cxi[i] xi_i^2)/2`.
    ModelQuadratic { cx: Vec<f64>, cxi: Vec<f64> },
    /// Free symbol `xi^2` in ambient = frame coordinates.
    Free { dim: usize },
    /// Full potential symbol `(|xi|^2 + V)/kappa` in the saddle frame.
    Potential {
        spec: &'a PotentialSpec,
        frame: &'a SaddleFrame,
    },
    /// Bumped symbol `(|xi|^2 + V + chi_eps)/kappa`.
    Bumped {
        spec: &'a PotentialSpec,
        frame: &'a SaddleFrame,
        bump: &'a Bump,
    },
}

impl Symbol<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Symbol::ModelQuadratic { cx, .. } => cx.len() + 1,
            Symbol::Free { dim } => *dim,
            Symbol::Potential { frame, .. } | Symbol::Bumped { frame, .. } => frame.dim(),
        }
    }

    pub fn value(&self, rho: &PhasePoint) -> f64 {
        let z: Vec<Complex64> = rho.0.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.value_complex(&z).re
    }

    /// Value at a complex phase point `(zx, zxi)` of `2n` complex entries.
    pub fn value_complex(&self, zeta: &[Complex64]) -> Complex64 {
        let n = self.dim();
        let (zx, zxi) = zeta.split_at(n);
        match self {
            Symbol::ModelQuadratic { cx, cxi } => {
                let mut v = 0.5 * (zxi[n - 1] * zxi[n - 1] - zx[n - 1] * zx[n - 1]);
                for i in 0..n - 1 {
                    v += 0.5 * (cx[i] * zx[i] * zx[i] + cxi[i] * zxi[i] * zxi[i]);
                }
                v
            }
            Symbol::Free { .. } => zxi.iter().map(|a| a * a).sum(),
            Symbol::Potential { spec, frame } => {
                let (x, xi2) = frame_to_ambient_complex(frame, zx, zxi);
                (spec.value(&x) + xi2) / frame.kappa()
            }
            Symbol::Bumped { spec, frame, bump } => {
                let (x, xi2) = frame_to_ambient_complex(frame, zx, zxi);
                let chi = bump_complex(bump, frame, zx, zxi);
                (spec.value(&x) + xi2 + chi) / frame.kappa()
            }
        }
    }

    /// Gradient `(d_x p, d_xi p)` at a real phase point, closed form.
    pub fn gradient(&self, rho: &PhasePoint) -> Vec<f64> {
        let n = self.dim();
        let mut g = vec![0.0; 2 * n];
        match self {
            Symbol::ModelQuadratic { cx, cxi } => {
                g[n - 1] = -rho.x()[n - 1];
                g[2 * n - 1] = rho.xi()[n - 1];
                for i in 0..n - 1 {
                    g[i] = cx[i] * rho.x()[i];
                    g[n + i] = cxi[i] * rho.xi()[i];
                }
            }
            Symbol::Free { .. } => {
                for i in 0..n {
                    g[n + i] = 2.0 * rho.xi()[i];
                }
            }
            Symbol::Potential { spec, frame } => {
                potential_gradient_frame(spec, frame, rho, &mut g);
            }
            Symbol::Bumped { spec, frame, bump } => {
                potential_gradient_frame(spec, frame, rho, &mut g);
                bump_gradient_frame(bump, frame, rho, &mut g);
            }
        }
        g
    }
}

fn frame_to_ambient_complex(
    frame: &SaddleFrame,
    zx: &[Complex64],
    zxi: &[Complex64],
) -> (Vec<Complex64>, Complex64) {
    let n = frame.dim();
    let mut x: Vec<Complex64> = frame
        .saddle
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    for i in 0..n {
        for j in 0..n {
            let s = if j == n - 1 { frame.scale } else { 1.0 };
            x[i] += frame.basis[i * n + j] * s * zx[j];
        }
    }
    // |xi|^2 = xi'^2 + xi_n^2 / s^2 in frame momenta (basis is orthogonal)
    let mut xi2 = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let s = if j == n - 1 { frame.scale } else { 1.0 };
        xi2 += zxi[j] * zxi[j] / (s * s);
    }
    (x, xi2)
}

fn bump_complex(
    bump: &Bump,
    frame: &SaddleFrame,
    zx: &[Complex64],
    zxi: &[Complex64],
) -> Complex64 {
    if bump.eps == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let n = frame.dim();
    let (x, _) = frame_to_ambient_complex(frame, zx, zxi);
    let mut q = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let d = x[i] - bump.center[i];
        q += d * d;
    }
    // ambient momentum: xi = B S^{-1} zxi, |xi|^2 = sum (zxi_j / s_j)^2
    for j in 0..n {
        let s = if j == n - 1 { frame.scale } else { 1.0 };
        q += (zxi[j] / s) * (zxi[j] / s);
    }
    bump.eps * (-bump.alpha * bump.alpha * q / bump.eps).exp()
}

fn potential_gradient_frame(
    spec: &PotentialSpec,
    frame: &SaddleFrame,
    rho: &PhasePoint,
    g: &mut [f64],
) {
    let n = frame.dim();
    let kappa = frame.kappa();
    let x = frame.to_ambient(rho.x());
    let gv = spec.gradient_real(&x);
    // d/dxt_j = sum_i dV/dx_i * (B S)_{ij}
    for j in 0..n {
        let s = if j == n - 1 { frame.scale } else { 1.0 };
        let mut acc = 0.0;
        for i in 0..n {
            acc += gv[i] * frame.basis[i * n + j] * s;
        }
        g[j] += acc / kappa;
    }
    for j in 0..n {
        let s = if j == n - 1 { frame.scale } else { 1.0 };
        g[n + j] += 2.0 * rho.xi()[j] / (s * s) / kappa;
    }
}

fn bump_gradient_frame(bump: &Bump, frame: &SaddleFrame, rho: &PhasePoint, g: &mut [f64]) {
    if bump.eps == 0.0 {
        return;
    }
    let n = frame.dim();
    let kappa = frame.kappa();
    let x = frame.to_ambient(rho.x());
    let xi = frame.momentum_to_ambient(rho.xi());
    let mut q = 0.0;
    for i in 0..n {
        q += (x[i] - bump.center[i]).powi(2) + xi[i] * xi[i];
    }
    let val = bump.eps * (-bump.alpha * bump.alpha * q / bump.eps).exp();
    let fac = -2.0 * bump.alpha * bump.alpha / bump.eps * val / kappa;
    // chain through x = saddle + B S xt and xi = B S^{-1} xit
    for j in 0..n {
        let s = if j == n - 1 { frame.scale } else { 1.0 };
        let mut accx = 0.0;
        let mut accxi = 0.0;
        for i in 0..n {
            accx += (x[i] - bump.center[i]) * frame.basis[i * n + j] * s;
            accxi += xi[i] * frame.basis[i * n + j] / s;
        }
        g[j] += fac * accx;
        g[n + j] += fac * accxi;
    }
}

/// Poisson bracket `H_p G = d_xi p . d_x G - d_x p . d_xi G` at `rho`.
pub fn hamilton_bracket(symbol: &Symbol, esc: &EscapeFunction, rho: &PhasePoint) -> f64 {
    let n = symbol.dim();
    let gp = symbol.gradient(rho);
    let gg = esc.gradient(rho);
    let mut v = 0.0;
    for i in 0..n {
        v += gp[n + i] * gg[i] - gp[i] * gg[n + i];
    }
    v
}

/// `p(rho + i t H_G(rho))` by direct complex evaluation.
pub fn deformed_symbol(symbol: &Symbol, esc: &EscapeFunction, rho: &PhasePoint, t: f64) -> Complex64 {
    let field = esc.hamilton_field(rho);
    let zeta: Vec<Complex64> = rho
        .0
        .iter()
        .zip(&field)
        .map(|(&r, &f)| Complex64::new(r, t * f))
        .collect();
    symbol.value_complex(&zeta)
}

/// Constants and knobs for the comparability checks. All constants are
/// computed from the frame and recorded, not assumed.
#[derive(Debug, Clone, Serialize)]
pub struct EscapeConfig {
    pub eps: f64,
    /// Cutoff steepness, fixed from the positive-definite part: `lambda^2 > 4 C_q`.
    pub lambda: f64,
    /// Bump dilation.
    pub alpha: f64,
    /// Deformation parameter.
    pub t: f64,
    /// `q >= |rho'|^2 / c_q`.
    pub c_q: f64,
    /// Constant of the cutoff-region lower bound `p >= -eps/C + rho^2/C`.
    pub c_big: f64,
    /// Enlarged constant with `b - a <= -1/C~`.
    pub c_tilde: f64,
    pub r0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Sampling radius in frame units.
    pub rho_max: f64,
    pub samples: usize,
    /// Acceptance bound on the comparability spread max/min.
    pub spread_bound: f64,
}

impl EscapeConfig {
    /// Derive the constant chain from the frame for a given `eps`.
    ///
    /// The quadratic-model value `C = 4 C_q` is enlarged by a measured
    /// cubic-remainder allowance: the cutoff region of the actual symbol is
    /// sampled and `C` grows until `p >= -eps/C + rho^2/C` holds there with a
    /// 25% safety margin.
    pub fn from_frame(spec: &PotentialSpec, frame: &SaddleFrame, eps: f64, alpha: f64) -> Self {
        let n = frame.dim();
        let kappa = frame.kappa();
        // q(x', xi') = sum (lambda_i / kappa) x_i^2 + (2/kappa) xi'^2
        let mut min_coeff = 2.0 / kappa;
        for i in 0..n.saturating_sub(1) {
            min_coeff = min_coeff.min(frame.hessian_eigenvalues[i] / kappa);
        }
        let c_q = (1.0 / min_coeff).max(1.0);
        let lambda = 2.1 * c_q.sqrt();
        let rho_max = 0.4;

        // calibrate C over the cutoff region
        let mut c_big = 4.0 * c_q;
        {
            let sym = Symbol::Potential { spec, frame };
            let mut sampler = BallSampler::new(2 * n, rho_max, 0xCA11B7);
            for _ in 0..20_000 {
                let rho = sampler.next_point();
                let xn = rho.x()[n - 1];
                if xn <= 0.0 {
                    continue;
                }
                let mut base = eps;
                for i in 0..n - 1 {
                    base += rho.x()[i] * rho.x()[i];
                }
                for v in rho.xi() {
                    base += v * v;
                }
                if lambda * xn / base.sqrt() >= 1.0 {
                    continue; // outside the cutoff region
                }
                let p = sym.value(&rho);
                let rho2 = rho.norm_sq();
                if rho2 > eps && p > 0.0 {
                    c_big = c_big.max(1.25 * (rho2 - eps) / p);
                }
            }
        }

        let r0 = 1.0;
        let smax = frame.scale.max(1.0 / frame.scale);
        let a0 = (-alpha * alpha * r0 * r0 * smax * smax).exp() / kappa;
        let a = a0.min(r0 * r0 / (2.0 * c_big));
        let b = 0.5 * a;
        let c = 1.0 / (2.0 * c_big);
        let c_tilde = c_big.max(2.0 / a) * 1.5;
        EscapeConfig {
            eps,
            lambda,
            alpha,
            t: 0.05,
            c_q,
            c_big,
            c_tilde,
            r0,
            a,
            b,
            c,
            rho_max,
            samples: 100_000,
            spread_bound: 50.0,
        }
    }

    /// Escape function at scale `eps` (for the plain implication).
    pub fn g_eps(&self) -> EscapeFunction {
        EscapeFunction::cutoff(self.eps, self.lambda)
    }

    /// Escape function at the dilated scale `C eps / C~` used with the bump.
    pub fn g_eps_tilde(&self) -> EscapeFunction {
        EscapeFunction::cutoff(self.c_big * self.eps / self.c_tilde, self.lambda)
    }
}

/// Which implication to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Implication {
    /// `p < -eps/C + rho^2/C` implies `H_p G ~ eps + rho^2`.
    Esc1,
    /// `p_eps <= b eps + c rho^2` implies `H_{p_eps} G ~ eps + rho^2`.
    Bp1,
    /// `Re p(rho + itH_G) <= -eps/C~ + rho^2/(2C)` implies
    /// `Im p(rho + itH_G) ~ -t(eps + rho^2)`.
    Ltg1,
    /// Same with `p_eps` and the bump thresholds.
    Ltg2,
}

/// Outcome of a sampled comparability check.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub which: Implication,
    pub eps: f64,
    pub t: f64,
    pub total_samples: usize,
    pub hypothesis_count: usize,
    pub violations: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub spread: f64,
    pub pass: bool,
    /// A few offending points, if any.
    pub violating_samples: Vec<Vec<f64>>,
}

/// Low-discrepancy Kronecker sequence in the `2n`-ball intersected with
/// `x_n >= 0`, with a seeded Cranley-Patterson rotation.
struct BallSampler {
    dim2n: usize,
    rho_max: f64,
    alphas: Vec<f64>,
    shift: Vec<f64>,
    k: u64,
}

impl BallSampler {
    fn new(dim2n: usize, rho_max: f64, seed: u64) -> Self {
        // generalized golden ratio directions
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim2n as f64 + 1.0));
        }
        let alphas: Vec<f64> = (1..=dim2n).map(|i| (1.0 / phi.powi(i as i32)) % 1.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..dim2n).map(|_| rng.gen_range(0.0..1.0)).collect();
        BallSampler {
            dim2n,
            rho_max,
            alphas,
            shift,
            k: 0,
        }
    }

    fn next_point(&mut self) -> PhasePoint {
        loop {
            self.k += 1;
            let mut p = vec![0.0; self.dim2n];
            let mut norm2 = 0.0;
            for i in 0..self.dim2n {
                let u = (self.shift[i] + self.k as f64 * self.alphas[i]).fract();
                p[i] = self.rho_max * (2.0 * u - 1.0);
                norm2 += p[i] * p[i];
            }
            if norm2 <= self.rho_max * self.rho_max {
                let n = self.dim2n / 2;
                p[n - 1] = p[n - 1].abs(); // fold to x_n >= 0
                return PhasePoint(p);
            }
        }
    }
}

/// Certify one comparability implication by dense sampling with
/// boundary-of-hypothesis oversampling.
pub fn check_comparability(
    cfg: &EscapeConfig,
    which: Implication,
    spec: &PotentialSpec,
    frame: &SaddleFrame,
    seed: u64,
) -> Result<ConstantsReport> {
    let n = frame.dim();
    let bump = Bump::new(frame, cfg.eps, cfg.alpha);
    let plain = Symbol::Potential { spec, frame };
    let bumped = Symbol::Bumped {
        spec,
        frame,
        bump: &bump,
    };

    // hypothesis margin and conclusion ratio at a sample
    let eval = |rho: &PhasePoint| -> (f64, f64) {
        let rho2 = rho.norm_sq();
        let eps = cfg.eps;
        match which {
            Implication::Esc1 => {
                let g = cfg.g_eps();
                let margin = (-eps / cfg.c_big + rho2 / cfg.c_big) - plain.value(rho);
                let ratio = hamilton_bracket(&plain, &g, rho) / (eps + rho2);
                (margin, ratio)
            }
            Implication::Bp1 => {
                let g = cfg.g_eps_tilde();
                let margin = (cfg.b * eps + cfg.c * rho2) - bumped.value(rho);
                let ratio = hamilton_bracket(&bumped, &g, rho) / (eps + rho2);
                (margin, ratio)
            }
            Implication::Ltg1 => {
                let g = cfg.g_eps_tilde();
                let d = deformed_symbol(&plain, &g, rho, cfg.t);
                let margin = (-eps / cfg.c_tilde + rho2 / (2.0 * cfg.c_big)) - d.re;
                let ratio = -d.im / (cfg.t * (eps + rho2));
                (margin, ratio)
            }
            Implication::Ltg2 => {
                let g = cfg.g_eps_tilde();
                let d = deformed_symbol(&bumped, &g, rho, cfg.t);
                let margin = (cfg.b * eps + 0.5 * cfg.c * rho2) - d.re;
                let ratio = -d.im / (cfg.t * (eps + rho2));
                (margin, ratio)
            }
        }
    };

    if matches!(which, Implication::Ltg1 | Implication::Ltg2) && cfg.t <= 0.0 {
        return Err(Error::InvalidConfig(
            "deformation checks need t > 0".into(),
        ));
    }

    let mut sampler = BallSampler::new(2 * n, cfg.rho_max, seed);
    let mut jitter = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut hypothesis_count = 0usize;
    let mut violations = 0usize;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    let mut bad: Vec<Vec<f64>> = Vec::new();
    let mut total = 0usize;

    let consider = |rho: &PhasePoint,
                        hypothesis_count: &mut usize,
                        violations: &mut usize,
                        ratio_min: &mut f64,
                        ratio_max: &mut f64,
                        bad: &mut Vec<Vec<f64>>| {
        let (margin, ratio) = eval(rho);
        if margin <= 0.0 {
            return false;
        }
        *hypothesis_count += 1;
        if ratio <= 0.0 {
            *violations += 1;
            if bad.len() < 8 {
                bad.push(rho.0.clone());
            }
        }
        *ratio_min = ratio_min.min(ratio);
        *ratio_max = ratio_max.max(ratio);
        true
    };

    for _ in 0..cfg.samples {
        let rho = sampler.next_point();
        total += 1;
        let (margin, _) = eval(&rho);
        let scale = cfg.eps + rho.norm_sq();
        let in_hyp = consider(
            &rho,
            &mut hypothesis_count,
            &mut violations,
            &mut ratio_min,
            &mut ratio_max,
            &mut bad,
        );
        // oversample near the hypothesis boundary, where implications fail first
        if in_hyp && margin < 0.1 * scale {
            for _ in 0..4 {
                let mut p = rho.0.clone();
                for v in p.iter_mut() {
                    *v += 0.02 * cfg.rho_max * jitter.gen_range(-1.0..1.0);
                }
                p[n - 1] = p[n - 1].abs();
                let q = PhasePoint(p);
                if q.norm_sq() <= cfg.rho_max * cfg.rho_max {
                    total += 1;
                    consider(
                        &q,
                        &mut hypothesis_count,
                        &mut violations,
                        &mut ratio_min,
                        &mut ratio_max,
                        &mut bad,
                    );
                }
            }
        }
    }

    if hypothesis_count == 0 {
        return Err(Error::NoHypothesisSamples);
    }
    let spread = if ratio_min > 0.0 {
        ratio_max / ratio_min
    } else {
        f64::INFINITY
    };
    let pass = violations == 0 && ratio_min > 0.0 && spread <= cfg.spread_bound;
    Ok(ConstantsReport {
        which,
        eps: cfg.eps,
        t: cfg.t,
        total_samples: total,
        hypothesis_count,
        violations,
        ratio_min,
        ratio_max,
        spread,
        pass,
        violating_samples: bad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::canonical_2d;

    #[test]
    fn smooth_step_plateau_support() {
        assert_eq!(smooth_step(0.4), 1.0);
        assert_eq!(smooth_step(-3.0), 1.0);
        assert_eq!(smooth_step(1.5), 0.0);
        assert_eq!(smooth_step(1.0), 0.0);
        let v = smooth_step(0.75);
        assert!(v > 0.0 && v < 1.0);
        assert!(smooth_step_deriv(0.75) < 0.0);
        // monotone on a fine grid
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = smooth_step(0.4 + 0.7 * k as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn escape_vanishes_on_well_side() {
        let esc = EscapeFunction::cutoff(0.05, 3.0);
        let rho = PhasePoint(vec![0.2, -0.1, 0.05, 0.3]);
        assert_eq!(esc.value(&rho), 0.0);
        assert_eq!(esc.gradient(&rho), vec![0.0; 4]);
    }

    #[test]
    fn escape_support_inequality() {
        // G != 0 forces x_n^2 >= (eps + (x',xi')^2 + xi_n^2)/(4 lambda^2)
        let eps = 0.05;
        let lambda = 3.0;
        let esc = EscapeFunction::cutoff(eps, lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5000 {
            let rho = PhasePoint((0..4).map(|_| rng.gen_range(-0.6..0.6)).collect());
            if esc.value(&rho).abs() > 0.0 {
                let base: f64 = eps + rho.x()[0].powi(2) + rho.xi().iter().map(|a| a * a).sum::<f64>();
                assert!(
                    rho.x()[1].powi(2) >= base / (4.0 * lambda * lambda) - 1e-12,
                    "support violated at {:?}",
                    rho.0
                );
            }
        }
    }

    #[test]
    fn escape_equals_g0_outside_cutoff() {
        let eps = 0.02;
        let lambda = 3.0;
        let esc = EscapeFunction::cutoff(eps, lambda);
        // deep outside: lambda x_n >> sqrt(eps + ...)
        let rho = PhasePoint(vec![0.01, 0.4, 0.02, 0.05]);
        let s = lambda * 0.4 / (eps + 0.01f64.powi(2) + 0.02f64.powi(2) + 0.05f64.powi(2)).sqrt();
        assert!(s >= 1.0);
        assert!((esc.value(&rho) - 0.4 * 0.05).abs() < 1e-15);
    }

    #[test]
    fn escape_gradient_matches_finite_differences() {
        let esc = EscapeFunction::cutoff(0.05, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rho = PhasePoint((0..4).map(|_| rng.gen_range(-0.5..0.5)).collect());
            let g = esc.gradient(&rho);
            for i in 0..4 {
                let e = 1e-7;
                let mut p = rho.clone();
                let mut m = rho.clone();
                p.0[i] += e;
                m.0[i] -= e;
                let fd = (esc.value(&p) - esc.value(&m)) / (2.0 * e);
                assert!(
                    (g[i] - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                    "grad[{i}] {} vs {} at {:?}",
                    g[i],
                    fd,
                    rho.0
                );
            }
        }
    }

    #[test]
    fn model_bracket_value() {
        // H_{p0} G0 = x_n^2 + xi_n^2 = 5 at (x_n, xi_n) = (1, 2)
        let sym = Symbol::ModelQuadratic {
            cx: vec![1.0],
            cxi: vec![1.0],
        };
        let esc = EscapeFunction::pure();
        let rho = PhasePoint(vec![0.0, 1.0, 0.0, 2.0]);
        let v = hamilton_bracket(&sym, &esc, &rho);
        assert!((v - 5.0).abs() < 1e-14);
    }

    #[test]
    fn bracket_zero_when_g_zero() {
        let (spec, frame) = canonical_2d();
        let sym = Symbol::Potential {
            spec: &spec,
            frame: &frame,
        };
        let esc = EscapeFunction::cutoff(0.05, 3.0);
        // x_n < 0: G identically zero nearby
        let rho = PhasePoint(vec![0.1, -0.2, 0.3, 0.1]);
        assert_eq!(hamilton_bracket(&sym, &esc, &rho), 0.0);
    }

    #[test]
    fn bracket_matches_finite_difference_chain() {
        // FD oracle: H_p G = sum dp/dxi dG/dx - dp/dx dG/dxi with all four
        // gradients from central differences of the closed-form values.
        let (spec, frame) = canonical_2d();
        let sym = Symbol::Potential {
            spec: &spec,
            frame: &frame,
        };
        let esc = EscapeFunction::cutoff(0.05, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        for _ in 0..100 {
            let rho = PhasePoint((0..4).map(|_| rng.gen_range(-0.4..0.4)).collect());
            let v = hamilton_bracket(&sym, &esc, &rho);
            let e = 1e-6;
            let mut fd = 0.0;
            for i in 0..2 {
                let dgi = {
                    let mut p = rho.clone();
                    let mut m = rho.clone();
                    p.0[i] += e;
                    m.0[i] -= e;
                    (esc.value(&p) - esc.value(&m)) / (2.0 * e)
                };
                let dpxi = {
                    let mut p = rho.clone();
                    let mut m = rho.clone();
                    p.0[2 + i] += e;
                    m.0[2 + i] -= e;
                    (sym.value(&p) - sym.value(&m)) / (2.0 * e)
                };
                let dgxi = {
                    let mut p = rho.clone();
                    let mut m = rho.clone();
                    p.0[2 + i] += e;
                    m.0[2 + i] -= e;
                    (esc.value(&p) - esc.value(&m)) / (2.0 * e)
                };
                let dpx = {
                    let mut p = rho.clone();
                    let mut m = rho.clone();
                    p.0[i] += e;
                    m.0[i] -= e;
                    (sym.value(&p) - sym.value(&m)) / (2.0 * e)
                };
                fd += dpxi * dgi - dpx * dgxi;
            }
            if v.abs() > 1e-8 {
                checked += 1;
                assert!(
                    ((v - fd) / v).abs() < 1e-4,
                    "bracket {v} vs fd {fd} at {:?}",
                    rho.0
                );
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn deformed_symbol_at_t_zero_is_real() {
        let (spec, frame) = canonical_2d();
        let sym = Symbol::Potential {
            spec: &spec,
            frame: &frame,
        };
        let esc = EscapeFunction::cutoff(0.05, 3.0);
        let rho = PhasePoint(vec![0.1, 0.2, -0.1, 0.3]);
        let d = deformed_symbol(&sym, &esc, &rho, 0.0);
        assert_eq!(d.im, 0.0);
        assert!((d.re - sym.value(&rho)).abs() < 1e-15);
    }

    #[test]
    fn deformed_free_symbol_closed_form() {
        // p = xi^2, G = G0 off cutoff: Im p(rho + itH_G) = -2 t xi_n^2 exactly
        let sym = Symbol::Free { dim: 2 };
        let esc = EscapeFunction::pure();
        let t = 0.04;
        let rho = PhasePoint(vec![0.0, 0.5, 0.3, 0.2]);
        let d = deformed_symbol(&sym, &esc, &rho, t);
        let xin = 0.2;
        assert!((d.im + 2.0 * t * xin * xin).abs() < 1e-14);
        let expect_re = 0.3f64.powi(2) + xin * xin * (1.0 - t * t);
        assert!((d.re - expect_re).abs() < 1e-14);
    }

    #[test]
    fn deformed_model_symbol_exact_imaginary_part() {
        // p0 = (xi_n^2 - x_n^2)/2: Im p0(rho + itH_{G0}) = -t(x_n^2 + xi_n^2)
        let sym = Symbol::ModelQuadratic {
            cx: vec![0.0],
            cxi: vec![0.0],
        };
        let esc = EscapeFunction::pure();
        let t = 0.03;
        let rho = PhasePoint(vec![0.0, 0.7, 0.0, -0.4]);
        let d = deformed_symbol(&sym, &esc, &rho, t);
        assert!((d.im + t * (0.49 + 0.16)).abs() < 1e-14);
    }

    #[test]
    fn deformed_real_part_quadratic_in_t() {
        // |Re p(rho + itH_G) - p(rho)| <= C t^2 rho^2 over samples
        let (spec, frame) = canonical_2d();
        let sym = Symbol::Potential {
            spec: &spec,
            frame: &frame,
        };
        let esc = EscapeFunction::cutoff(0.05, 3.0);
        let t = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cmax = 0.0f64;
        for _ in 0..2000 {
            let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.4..0.4)).collect();
            p[1] = p[1].abs();
            let rho = PhasePoint(p);
            let rho2 = rho.norm_sq();
            if rho2 < 1e-4 {
                continue;
            }
            let d = deformed_symbol(&sym, &esc, &rho, t);
            cmax = cmax.max((d.re - sym.value(&rho)).abs() / (t * t * rho2));
        }
        assert!(cmax < 50.0, "Re deviation constant {cmax}");
    }

    #[test]
    fn derivative_scaling_of_escape() {
        // |d^a G| = O((eps + rho^2)^(1 - |a|/2)) for |a| <= 2, with the O(1)
        // uniform over eps: per-eps maxima must agree up to a modest factor.
        let mut by_eps: Vec<[f64; 3]> = Vec::new();
        for eps in [0.1, 0.05, 0.025] {
            let esc = EscapeFunction::cutoff(eps, 3.0);
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let mut c = [0.0f64; 3];
            for _ in 0..2000 {
                let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
                p[1] = p[1].abs();
                let rho = PhasePoint(p);
                let w = eps + rho.norm_sq();
                c[0] = c[0].max(esc.value(&rho).abs() / w);
                let g = esc.gradient(&rho);
                for i in 0..4 {
                    c[1] = c[1].max(g[i].abs() / w.sqrt());
                    // second derivatives by FD of the closed-form gradient
                    let e = 1e-6;
                    let mut pp = rho.clone();
                    let mut pm = rho.clone();
                    pp.0[i] += e;
                    pm.0[i] -= e;
                    let gp = esc.gradient(&pp);
                    let gm = esc.gradient(&pm);
                    for j in 0..4 {
                        c[2] = c[2].max(((gp[j] - gm[j]) / (2.0 * e)).abs());
                    }
                }
            }
            by_eps.push(c);
        }
        for order in 0..3 {
            let hi = by_eps.iter().map(|c| c[order]).fold(0.0, f64::max);
            let lo = by_eps.iter().map(|c| c[order]).fold(f64::INFINITY, f64::min);
            assert!(hi.is_finite() && hi < 500.0, "order-{order} blow-up: {by_eps:?}");
            assert!(hi / lo < 2.0, "order-{order} not eps-uniform: {by_eps:?}");
        }
    }

    #[test]
    fn cutoff_region_p_lower_bound() {
        // wherever the prefactor is active, p >= -eps/C + rho^2/C
        let (spec, frame) = canonical_2d();
        let cfg = EscapeConfig::from_frame(&spec, &frame, 0.05, 0.5);
        let sym = Symbol::Potential {
            spec: &spec,
            frame: &frame,
        };
        let esc = cfg.g_eps();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tested = 0;
        for _ in 0..20000 {
            let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            p[1] = p[1].abs();
            let rho = PhasePoint(p);
            if rho.norm_sq() > cfg.rho_max * cfg.rho_max {
                continue;
            }
            let base = esc.base(&rho).sqrt();
            let s = esc.lambda * rho.x()[1] / base;
            if s < 1.0 && rho.x()[1] > 0.0 {
                // cutoff region: prefactor != 1
                tested += 1;
                let lhs = sym.value(&rho);
                let rhs = -cfg.eps / cfg.c_big + rho.norm_sq() / cfg.c_big;
                assert!(
                    lhs >= rhs - 1e-12,
                    "cutoff-region bound fails at {:?}: {lhs} < {rhs}",
                    rho.0
                );
            }
        }
        assert!(tested > 100);
    }

    #[test]
    fn bump_lower_bound_bp7() {
        // chi_eps(rho) >= a (eps - rho^2/r0^2) at all samples
        let (spec, frame) = canonical_2d();
        let cfg = EscapeConfig::from_frame(&spec, &frame, 0.05, 0.5);
        let bump = Bump::new(&frame, cfg.eps, cfg.alpha);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20000 {
            let xt: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let xit: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let x = frame.to_ambient(&xt);
            let xi = frame.momentum_to_ambient(&xit);
            let chi = bump.at(&x, &xi);
            let rho2: f64 = xt.iter().chain(&xit).map(|a| a * a).sum();
            let rhs = cfg.a * frame.kappa() * (cfg.eps - rho2 / (cfg.r0 * cfg.r0));
            assert!(chi >= rhs - 1e-12, "bp7 fails: chi {chi} < {rhs}");
        }
    }

    #[test]
    fn bracket_perturbation_by_bump() {
        // |H_{p_eps} G - H_p G| <= C alpha (eps + rho^2)
        let (spec, frame) = canonical_2d();
        let cfg = EscapeConfig::from_frame(&spec, &frame, 0.05, 0.5);
        let bump = Bump::new(&frame, cfg.eps, cfg.alpha);
        let plain = Symbol::Potential {
            spec: &spec,
            frame: &frame,
        };
        let bumped = Symbol::Bumped {
            spec: &spec,
            frame: &frame,
            bump: &bump,
        };
        let esc = cfg.g_eps_tilde();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut cmax = 0.0f64;
        for _ in 0..5000 {
            let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            p[1] = p[1].abs();
            let rho = PhasePoint(p);
            let d = (hamilton_bracket(&bumped, &esc, &rho) - hamilton_bracket(&plain, &esc, &rho)).abs();
            cmax = cmax.max(d / (cfg.alpha * (cfg.eps + rho.norm_sq())));
        }
        assert!(cmax < 50.0, "bracket perturbation constant {cmax}");
    }

    #[test]
    fn comparability_esc1_on_model() {
        // model symbol with q = identity; hypotheses generated from a frame
        let (spec, frame) = canonical_2d();
        let cfg = EscapeConfig {
            samples: 20_000,
            ..EscapeConfig::from_frame(&spec, &frame, 0.05, 0.5)
        };
        let rep = check_comparability(&cfg, Implication::Esc1, &spec, &frame, 42).unwrap();
        assert!(rep.pass, "esc1 report: {rep:?}");
        assert!(rep.spread <= 50.0);
    }

    #[test]
    fn comparability_ltg1_requires_positive_t() {
        let (spec, frame) = canonical_2d();
        let mut cfg = EscapeConfig::from_frame(&spec, &frame, 0.05, 0.5);
        cfg.t = 0.0;
        let err = check_comparability(&cfg, Implication::Ltg1, &spec, &frame, 1).unwrap_err();
        match err {
            Error::InvalidConfig(_) => {}
            e => panic!("expected InvalidConfig, got {e}"),
        }
    }
}
