use crate::dd::Dd;
use crate::par::{map_indexed, Execution};
use crate::scalar::Scalar;

/// Relative slack for `product ≤ bound`. The ℓ = 1, ε = 0 case is an equality.
const REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelescopeResult {
    pub product: f64,
    pub bound: f64,
    pub ln_product: f64,
    pub ln_bound: f64,
    pub holds: bool,
}

fn ln_eta_dd(ell: u32, t: usize) -> Dd {
    let l = Dd::from(ell as f64);
    l.ln() - (Dd::from(t as f64) + l).ln()
}

/// `∏_{i=S}^{t} (1 − (1 − ε/ℓ)η_i)` against `(η_t/η_{S−1})^{ℓ−ε}·exp(εℓ/S)`.
///
/// Each factor equals `(i + ε)/(i + ℓ)`, so the product is accumulated as a
/// sum of `ln(1 + (ε − ℓ)/(i + ℓ))` in double-double.
pub fn telescope_check(ell: u32, s: usize, t: usize, epsilon: f64) -> TelescopeResult {
    assert!(ell >= 1 && s >= 1 && s <= t, "need ell >= 1 and 1 <= S <= t");
    let l = Dd::from(ell as f64);
    let d = Dd::from(epsilon) - l;
    let mut ln_p = Dd::ZERO;
    for i in s..=t {
        ln_p += (d / (Dd::from(i as f64) + l)).ln_1p();
    }
    let ln_b = (l - Dd::from(epsilon)) * (ln_eta_dd(ell, t) - ln_eta_dd(ell, s - 1))
        + Dd::from(epsilon * ell as f64) / Dd::from(s as f64);
    finish(ln_p, ln_b)
}

fn finish(ln_p: Dd, ln_b: Dd) -> TelescopeResult {
    let holds = (ln_p - ln_b).to_f64() <= REL_TOL.ln_1p();
    TelescopeResult {
        product: ln_p.to_f64().exp(),
        bound: ln_b.to_f64().exp(),
        ln_product: ln_p.to_f64(),
        ln_bound: ln_b.to_f64(),
        holds,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TelescopeGrid {
    pub checked: usize,
    /// `(ℓ, S, t, ε)`
    pub violations: Vec<(u32, usize, usize, f64)>,
    /// Largest `ln product − ln bound`.
    pub max_log_excess: f64,
}

/// Every `(ℓ, S, t, ε)` with `ℓ ∈ ells`, `1 ≤ S ≤ s_max`, `S ≤ t ≤ t_max` and
/// `ε = f·ℓ` for `f ∈ eps_fracs`. Rows `(ℓ, ε, S)` are independent and run
/// through `exec`; the running product makes each row linear in `t_max`.
pub fn telescope_grid(
    ells: &[u32],
    s_max: usize,
    t_max: usize,
    eps_fracs: &[f64],
    exec: Execution,
) -> TelescopeGrid {
    let ln_k: Vec<Dd> = (0..=t_max + ells.iter().copied().max().unwrap_or(1) as usize)
        .map(|k| if k == 0 { Dd::ZERO } else { Dd::from(k as f64).ln() })
        .collect();
    let mut rows = Vec::new();
    for &ell in ells {
        for &f in eps_fracs {
            for s in 1..=s_max.min(t_max) {
                rows.push((ell, f * ell as f64, s));
            }
        }
    }
    let per_row = map_indexed(exec, rows.len(), |k| {
        let (ell, eps, s) = rows[k];
        let l = Dd::from(ell as f64);
        let ln_l = l.ln();
        let ln_eta = |t: usize| ln_l - ln_k[t + ell as usize];
        let d = Dd::from(eps) - l;
        let expo = l - Dd::from(eps);
        let shift = Dd::from(eps * ell as f64) / Dd::from(s as f64) - expo * ln_eta(s - 1);
        let mut ln_p = Dd::ZERO;
        let mut checked = 0usize;
        let mut bad = Vec::new();
        let mut worst = f64::NEG_INFINITY;
        for t in s..=t_max {
            ln_p += (d / (Dd::from(t as f64) + l)).ln_1p();
            let ln_b = expo * ln_eta(t) + shift;
            let r = finish(ln_p, ln_b);
            checked += 1;
            worst = worst.max(r.ln_product - r.ln_bound);
            if !r.holds {
                bad.push((ell, s, t, eps));
            }
        }
        (checked, bad, worst)
    });
    let mut out = TelescopeGrid {
        checked: 0,
        violations: Vec::new(),
        max_log_excess: f64::NEG_INFINITY,
    };
    for (c, b, w) in per_row {
        out.checked += c;
        out.violations.extend(b);
        out.max_log_excess = out.max_log_excess.max(w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_factor_example() {
        let r = telescope_check(2, 1, 2, 0.0);
        assert!((r.product - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.bound - 0.25).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn single_factor() {
        for ell in 1..=10 {
            for s in 1..=100 {
                let r = telescope_check(ell, s, s, 0.0);
                let eta = ell as f64 / (s as f64 + ell as f64);
                assert!((r.product - (1.0 - eta)).abs() < 1e-14);
                assert!(r.holds, "ell={ell} S={s}");
            }
        }
    }

    #[test]
    fn degenerate_epsilon() {
        let r = telescope_check(3, 4, 50, 3.0);
        assert!((r.product - 1.0).abs() < 1e-15);
        assert!((r.bound - (9.0f64 / 4.0).exp()).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn ell_one_is_tight() {
        // ∏ i/(i+1) = S/(t+1) = η_t/η_{S−1}
        let r = telescope_check(1, 7, 300, 0.0);
        assert!((r.ln_product - r.ln_bound).abs() < 1e-28 + 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn grid_matches_pointwise() {
        let g = telescope_grid(&[1, 3], 5, 60, &[0.0, 0.5, 1.0], Execution::Sequential);
        assert!(g.violations.is_empty());
        let p = telescope_grid(&[1, 3], 5, 60, &[0.0, 0.5, 1.0], Execution::Parallel);
        assert_eq!(g, p);
        let direct = telescope_check(3, 4, 37, 1.5);
        assert!(direct.holds);
    }
}
