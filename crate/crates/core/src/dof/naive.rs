//! Literal distinct-index enumeration of the three U-statistics. Quartic in
//! n; kept as the reference the fast path is checked against.

use super::kernels::DeltaKernels;
use super::UStatTriple;
use crate::dataset::FunctionalDataset;
use crate::error::{GlhtError, Result};
use crate::grid::QuadWeights;
use crate::moments::OmegaHat;

pub fn ustat_within_naive(ds: &FunctionalDataset, i: usize, omega: &OmegaHat, w: &QuadWeights) -> Result<UStatTriple> {
    let g = ds.group(i);
    let n = g.n();
    if n < 4 {
        return Err(GlhtError::InsufficientReplication { group: i + 1, n, required: 4 });
    }
    let d = DeltaKernels::new(g, &omega.inv)?;
    let m = ds.m();
    let nf = n as f64;
    let p2 = nf * (nf - 1.0);
    let p3 = p2 * (nf - 2.0);
    let p4 = p3 * (nf - 3.0);

    let (mut i_hat, mut t_hat, mut tr_hat) = (0.0, 0.0, 0.0);
    for s in 0..m {
        for t in 0..m {
            let wt = w[s] * w[t];
            // δ(t,s) and δ(s,t) as closures over observation indices.
            let ts = |a: usize, b: usize| d.delta(a, b, t, s);
            let st = |a: usize, b: usize| d.delta(a, b, s, t);
            let (mut i2, mut i3, mut i4) = (0.0, 0.0, 0.0);
            let (mut t2, mut t3, mut t4) = (0.0, 0.0, 0.0);
            let (mut r2, mut r3, mut r4) = (0.0, 0.0, 0.0);
            for j1 in 0..n {
                for j2 in 0..n {
                    if j2 == j1 {
                        continue;
                    }
                    i2 += ts(j1, j1) * ts(j2, j2);
                    t2 += ts(j1, j2) * ts(j2, j1);
                    r2 += st(j1, j2) * ts(j2, j1);
                    for j3 in 0..n {
                        if j3 == j1 || j3 == j2 {
                            continue;
                        }
                        i3 += ts(j1, j1) * ts(j2, j3);
                        t3 += ts(j1, j2) * ts(j3, j1);
                        r3 += st(j1, j2) * ts(j3, j1);
                        for j4 in 0..n {
                            if j4 == j1 || j4 == j2 || j4 == j3 {
                                continue;
                            }
                            i4 += ts(j1, j2) * ts(j3, j4);
                            t4 += ts(j2, j3) * ts(j4, j1);
                            r4 += st(j2, j3) * ts(j4, j1);
                        }
                    }
                }
            }
            i_hat += wt * (i2 / p2 - 2.0 * i3 / p3 + i4 / p4);
            t_hat += wt * (t2 / p2 - 2.0 * t3 / p3 + t4 / p4);
            tr_hat += wt * (r2 / p2 - 2.0 * r3 / p3 + r4 / p4);
        }
    }
    Ok(UStatTriple { i_hat, t_hat, tr_sigma2_hat: tr_hat })
}
