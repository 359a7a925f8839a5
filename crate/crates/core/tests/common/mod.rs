//! Reference implementations written independently of the library code.
#![allow(dead_code)]

use mfd_glht::dataset::{FunctionalDataset, GroupSample};
use mfd_glht::grid::{Grid, QuadWeights};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Random dataset with group-specific offsets so means are far from zero.
pub fn random_dataset(r: &mut impl Rng, sizes: &[usize], p: usize, m: usize) -> FunctionalDataset {
    let grid = if r.random_bool(0.5) {
        Grid::uniform(m, 0.0, 1.0).unwrap()
    } else {
        let mut pts: Vec<f64> = (0..m).map(|_| r.random::<f64>() * 3.0).collect();
        pts.sort_by(f64::total_cmp);
        for j in 1..m {
            if pts[j] <= pts[j - 1] {
                pts[j] = pts[j - 1] + 1e-3;
            }
        }
        Grid::from_points(pts).unwrap()
    };
    let groups = sizes
        .iter()
        .map(|&n| {
            let off: Vec<f64> = (0..p).map(|_| r.random_range(-3.0..3.0)).collect();
            GroupSample::from_fn(n, p, m, |_, l, _| off[l] + r.random_range(-1.0..1.0))
        })
        .collect();
    FunctionalDataset::new(grid, groups).unwrap()
}

pub fn random_spd(r: &mut impl Rng, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(p, p) * 0.5
}

pub fn random_nonsingular(r: &mut impl Rng, p: usize) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(p, p, |_, _| r.random_range(-2.0..2.0));
        let sv = a.clone().svd(false, false).singular_values;
        if sv.min() > 0.2 * sv.max() {
            return a;
        }
    }
}

fn bil(g: &GroupSample, w: &DMatrix<f64>, a: usize, s: usize, b: usize, t: usize, sub: Option<(usize, usize)>) -> f64 {
    // (y_a − y_a')(s)ᵀ W (y_b − y_b')(t) where `sub` gives (a', b').
    let p = g.p();
    let mut acc = 0.0;
    for l in 0..p {
        for r in 0..p {
            let (mut x, mut y) = (g.value(a, l, s), g.value(b, r, t));
            if let Some((a2, b2)) = sub {
                x -= g.value(a2, l, s);
                y -= g.value(b2, r, t);
            }
            acc += x * w[(l, r)] * y;
        }
    }
    acc
}

/// Î, T̂ and tr-hat as averages over ordered distinct 4-tuples of the
/// translation-invariant kernels built from u = y_a − y_b and v = y_c − y_d:
/// ¼·u(t)ᵀWu(s)·v(t)ᵀWv(s), ¼·u(t)ᵀWv(s)·v(t)ᵀWu(s), ¼·(u(s)ᵀWv(t))².
pub fn kernel_ustats(g: &GroupSample, w_inv: &DMatrix<f64>, q: &QuadWeights) -> (f64, f64, f64) {
    let (n, m) = (g.n(), g.m());
    let (mut i_sum, mut t_sum, mut r_sum) = (0.0, 0.0, 0.0);
    let mut count = 0usize;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let distinct = a != b && a != c && a != d && b != c && b != d && c != d;
                    if !distinct {
                        continue;
                    }
                    count += 1;
                    for s in 0..m {
                        for t in 0..m {
                            let ww = q[s] * q[t];
                            let uu = bil(g, w_inv, a, t, a, s, Some((b, b)));
                            let vv = bil(g, w_inv, c, t, c, s, Some((d, d)));
                            let uv = bil(g, w_inv, a, t, c, s, Some((b, d)));
                            let vu = bil(g, w_inv, c, t, a, s, Some((d, b)));
                            let uv_st = bil(g, w_inv, a, s, c, t, Some((b, d)));
                            i_sum += ww * 0.25 * uu * vv;
                            t_sum += ww * 0.25 * uv * vu;
                            r_sum += ww * 0.25 * uv_st * uv_st;
                        }
                    }
                }
            }
        }
    }
    let c = count as f64;
    (i_sum / c, t_sum / c, r_sum / c)
}

/// Γ̂(s,t) for every grid pair, as p × p matrices indexed `[s * M + t]`.
pub fn dense_gamma_hat(g: &GroupSample) -> Vec<DMatrix<f64>> {
    let (n, p, m) = (g.n(), g.p(), g.m());
    let mean = |l: usize, t: usize| (0..n).map(|j| g.value(j, l, t)).sum::<f64>() / n as f64;
    let mut out = Vec::with_capacity(m * m);
    for s in 0..m {
        for t in 0..m {
            let mut acc = DMatrix::zeros(p, p);
            for j in 0..n {
                for a in 0..p {
                    for b in 0..p {
                        acc[(a, b)] += (g.value(j, a, s) - mean(a, s)) * (g.value(j, b, t) - mean(b, t));
                    }
                }
            }
            out.push(acc / (n - 1) as f64);
        }
    }
    out
}

/// (∫∫ tr(WΓ̂₁) tr(WΓ̂₂), ∫∫ tr(WΓ̂₁WΓ̂₂)) from materialized covariance functions.
pub fn dense_cross(g1: &GroupSample, g2: &GroupSample, w_inv: &DMatrix<f64>, q: &QuadWeights) -> (f64, f64) {
    let (a, b) = (dense_gamma_hat(g1), dense_gamma_hat(g2));
    let m = g1.m();
    let (mut ii, mut tt) = (0.0, 0.0);
    for s in 0..m {
        for t in 0..m {
            let (x, y) = (w_inv * &a[s * m + t], w_inv * &b[s * m + t]);
            ii += q[s] * q[t] * x.trace() * y.trace();
            tt += q[s] * q[t] * (x * y).trace();
        }
    }
    (ii, tt)
}

/// First term of K̂₄: (n−1)⁻¹ Σ_j ∫∫ {x̂_j(s)ᵀ W x̂_j(t)}².
pub fn k4_first_term(g: &GroupSample, w_inv: &DMatrix<f64>, q: &QuadWeights) -> f64 {
    let (n, p, m) = (g.n(), g.p(), g.m());
    let mean = |l: usize, t: usize| (0..n).map(|j| g.value(j, l, t)).sum::<f64>() / n as f64;
    let mut acc = 0.0;
    for j in 0..n {
        for s in 0..m {
            for t in 0..m {
                let mut d = 0.0;
                for a in 0..p {
                    for b in 0..p {
                        d += (g.value(j, a, s) - mean(a, s)) * w_inv[(a, b)] * (g.value(j, b, t) - mean(b, t));
                    }
                }
                acc += q[s] * q[t] * d * d;
            }
        }
    }
    acc / (n - 1) as f64
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// ∫₀^u t^{a−1}(1−t)^{b−1} dt / B(a,b) by adaptive quadrature, u ≤ 1/2.
fn beta_lower_quad(a: f64, b: f64, u: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let ln_b = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    // Tolerance relative to B(a,b), i.e. absolute on the normalized scale.
    let tol = 1e-14 * ln_b.exp();
    let integral = if a < 1.0 {
        // t = v^{1/a} removes the singularity at 0.
        let f = move |v: f64| (1.0 - v.powf(1.0 / a)).powf(b - 1.0) / a;
        adaptive_simpson(&f, 0.0, u.powf(a), tol)
    } else {
        let f = move |t: f64| if t == 0.0 { if a == 1.0 { 1.0 } else { 0.0 } } else { t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0) };
        adaptive_simpson(&f, 0.0, u, tol)
    };
    integral * (-ln_b).exp()
}

/// P[F(d1,d2) ≤ x] via quadrature of the beta density.
pub fn f_cdf_quadrature(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let u = d1 * x / (d1 * x + d2);
    let v = d2 / (d1 * x + d2);
    if u <= 0.5 {
        beta_lower_quad(d1 / 2.0, d2 / 2.0, u)
    } else {
        1.0 - beta_lower_quad(d2 / 2.0, d1 / 2.0, v)
    }
}

/// Largest relative discrepancy across statistics, DoF and p-values.
pub fn report_discrepancy(a: &mfd_glht::stats::TestReport, b: &mfd_glht::stats::TestReport) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
    let sa = &a.statistics;
    let sb = &b.statistics;
    let mut pairs = vec![
        (sa.mfw, sb.mfw),
        (sa.mflh, sb.mflh),
        (sa.mfp, sb.mfp),
        (a.dof.d_b, b.dof.d_b),
        (a.dof.d_e, b.dof.d_e),
    ];
    pairs.extend(a.p_values.as_array().into_iter().zip(b.p_values.as_array()));
    pairs.into_iter().map(|(x, y)| rel(x, y)).fold(0.0, f64::max)
}

/// (x, df1, df2) lattice with integer and fractional degrees of freedom.
pub fn f_lattice() -> Vec<(f64, f64, f64)> {
    let xs = [0.01, 0.2, 0.5, 0.9, 1.0, 1.6, 2.5, 4.0, 9.0, 30.0];
    let dfs = [
        (1.0, 1.0),
        (2.0, 10.0),
        (0.7, 2.5),
        (3.3, 17.9),
        (12.4, 5.5),
        (6.0, 38.0),
        (0.5, 0.5),
        (1.0, 120.0),
        (50.5, 120.25),
        (4.0, 4.0),
        (9.75, 1.25),
        (21.0, 63.64),
        (2.0, 2.0),
        (15.5, 300.0),
        (100.0, 7.0),
        (5.0, 0.8),
        (7.3, 11.1),
        (1.5, 45.0),
        (36.0, 36.0),
        (3.0, 250.5),
    ];
    let mut out = Vec::with_capacity(xs.len() * dfs.len());
    for &(d1, d2) in &dfs {
        for &x in &xs {
            out.push((x, d1, d2));
        }
    }
    out
}
