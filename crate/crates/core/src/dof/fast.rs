//! Quadratic-time evaluation of the within-group U-statistics and the
//! between-group cross terms.
//!
//! Every estimator here is invariant to adding a fixed curve to all
//! observations of a group, so it can be evaluated on group-centered,
//! standardized curves z_j = Ω̂^{-1/2}(y_j − ȳ). For fixed (s,t), let
//! K_ab = z_a(t)·z_b(s). Centering makes every row and column sum of K
//! vanish, and the distinct-index sums collapse to four aggregates:
//!
//! - τ  = tr K = tr H, with H = Σ_j z_j(s) z_j(t)ᵀ
//! - σ₂ = Σ_a K_aa²
//! - F  = ‖K‖²_F = ⟨G_s, G_t⟩, with G_t = Σ_j z_j(t) z_j(t)ᵀ
//! - R  = tr K² = tr H²
//!
//! All four are symmetric in (s,t), so only s ≤ t is visited. Cost is
//! O(M² n p²) per group and memory is O(M p²).

use super::kernels::Standardized;
use super::UStatTriple;
use crate::grid::QuadWeights;

/// Quadrature-weighted sums of τ², σ₂, F and R over T².
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PairSums {
    pub tau2: f64,
    pub sigma2: f64,
    pub frob: f64,
    pub trsq: f64,
}

impl PairSums {
    pub fn triple(&self, n: usize) -> UStatTriple {
        let nf = n as f64;
        let p2 = nf * (nf - 1.0);
        let p3 = p2 * (nf - 2.0);
        let p4 = p3 * (nf - 3.0);
        let PairSums { tau2, sigma2, frob, trsq } = *self;
        let q4 = tau2 - 6.0 * sigma2 + frob + trsq;
        let u = |x: f64| (x - sigma2) / p2 - 2.0 * (2.0 * sigma2 - x) / p3 + q4 / p4;
        UStatTriple { i_hat: u(tau2), t_hat: u(trsq), tr_sigma2_hat: u(frob) }
    }
}

/// Cross-group integrals ∫∫ τ₁τ₂ and ∫∫ tr(H₁H₂) for one group pair (unscaled).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CrossSums {
    pub tau_tau: f64,
    pub tr_hh: f64,
}

/// One pass over s ≤ t for all groups at once. Returns per-group sums and,
/// when `cross` is set, sums for each pair (a, b) with a < b in row order.
pub(crate) fn sweep(groups: &[&Standardized], w: &QuadWeights, cross: bool) -> (Vec<PairSums>, Vec<CrossSums>) {
    let k = groups.len();
    let mut sums = vec![PairSums::default(); k];
    let mut xs = vec![CrossSums::default(); if cross { k * k.saturating_sub(1) / 2 } else { 0 }];
    if k == 0 {
        return (sums, xs);
    }
    let (p, m) = (groups[0].p, groups[0].m);
    let pp = p * p;

    let grams: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let mut out = vec![0.0; m * pp];
            for t in 0..m {
                let gt = &mut out[t * pp..(t + 1) * pp];
                for z in g.block(t).chunks_exact(p) {
                    for a in 0..p {
                        for b in 0..p {
                            gt[a * p + b] += z[a] * z[b];
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut h = vec![0.0; k * pp];
    let mut tau = vec![0.0; k];
    for t in 0..m {
        for s in 0..=t {
            let f = w[s] * w[t] * if s == t { 1.0 } else { 2.0 };
            for (gi, g) in groups.iter().enumerate() {
                let hg = &mut h[gi * pp..(gi + 1) * pp];
                hg.iter_mut().for_each(|v| *v = 0.0);
                let mut sig2 = 0.0;
                for (zs, zt) in g.block(s).chunks_exact(p).zip(g.block(t).chunks_exact(p)) {
                    let mut d = 0.0;
                    for a in 0..p {
                        let za = zs[a];
                        d += za * zt[a];
                        let row = &mut hg[a * p..(a + 1) * p];
                        for (r, zb) in row.iter_mut().zip(zt) {
                            *r += za * zb;
                        }
                    }
                    sig2 += d * d;
                }
                let mut tr = 0.0;
                let mut trsq = 0.0;
                for a in 0..p {
                    tr += hg[a * p + a];
                    for b in 0..p {
                        trsq += hg[a * p + b] * hg[b * p + a];
                    }
                }
                let gs = &grams[gi][s * pp..(s + 1) * pp];
                let gt = &grams[gi][t * pp..(t + 1) * pp];
                let frob: f64 = gs.iter().zip(gt).map(|(x, y)| x * y).sum();
                tau[gi] = tr;
                let acc = &mut sums[gi];
                acc.tau2 += f * tr * tr;
                acc.sigma2 += f * sig2;
                acc.frob += f * frob;
                acc.trsq += f * trsq;
            }
            if cross {
                let mut idx = 0;
                for a in 0..k {
                    for b in a + 1..k {
                        let ha = &h[a * pp..(a + 1) * pp];
                        let hb = &h[b * pp..(b + 1) * pp];
                        let mut tr = 0.0;
                        for r in 0..p {
                            for c in 0..p {
                                tr += ha[r * p + c] * hb[c * p + r];
                            }
                        }
                        xs[idx].tau_tau += f * tau[a] * tau[b];
                        xs[idx].tr_hh += f * tr;
                        idx += 1;
                    }
                }
            }
        }
    }
    (sums, xs)
}
