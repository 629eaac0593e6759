//! Schur and skew Schur function evaluation at finite lists and
//! principal-type specializations.
//!
//! Everything is evaluated through complete homogeneous functions h_k and the
//! Jacobi-Trudi determinant s_{λ/μ} = det(h_{λ_i − μ_j − i + j}); that route is
//! exact for finite lists and costs a determinant of size ℓ(λ).

use crate::dense::det_scaled;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::real::Real;

/// Argument of a (skew) Schur function.
///
/// `Principal` denotes the infinite sequence x_i = Q · q^{−β_i + i − 1/2}
/// (β_i = 0 past ℓ(β)); with 0 < q < 1 the tail decays geometrically and is
/// truncated once factors drop below `eps`.
#[derive(Clone, Debug)]
pub enum Specialization<R> {
    Finite(Vec<R>),
    Principal {
        beta: Partition,
        prefactor: R,
        q: R,
        eps: f64,
    },
}

impl<R: Real> Specialization<R> {
    /// The plain principal specialization q^{−ρ} = (q^{1/2}, q^{3/2}, ...).
    pub fn principal(q: R, eps: f64) -> Self {
        Specialization::Principal {
            beta: Partition::empty(),
            prefactor: R::one(),
            q,
            eps,
        }
    }

    /// q^{−β−ρ} scaled by a prefactor.
    pub fn principal_shifted(beta: Partition, prefactor: R, q: R, eps: f64) -> Self {
        Specialization::Principal {
            beta,
            prefactor,
            q,
            eps,
        }
    }

    /// Materialize the (truncated) value list.
    pub fn values(&self) -> Result<Vec<R>> {
        match self {
            Specialization::Finite(v) => Ok(v.clone()),
            Specialization::Principal {
                beta,
                prefactor,
                q,
                eps,
            } => {
                let qf = q.to_f64();
                if !(0.0 < qf && qf < 1.0) {
                    return Err(Error::NonConvergentTail { q: qf });
                }
                let pf = prefactor.to_f64().abs().max(f64::MIN_POSITIVE);
                let i_max = tail_length(pf, qf, *eps).max(beta.len() + 1);
                let sqrt_q = q.sqrt();
                let mut vals = Vec::with_capacity(i_max);
                for i in 1..=i_max {
                    // q^{−β_i + i − 1/2}
                    let e2 = 2 * (i as i64 - beta.part(i) as i64) - 1;
                    vals.push(prefactor.clone() * sqrt_q.powi(e2));
                }
                Ok(vals)
            }
        }
    }
}

/// Number of principal factors to keep: smallest m with Q·q^{m−1/2} < eps.
pub fn tail_length(prefactor: f64, q: f64, eps: f64) -> usize {
    let r = (eps / prefactor).ln() / q.ln();
    (r.ceil().max(1.0)) as usize
}

/// h_0..h_kmax of a finite value list, by the product-of-geometric-series
/// recurrence: after absorbing x, h_k += x · h_{k−1}.
pub fn complete_homogeneous<R: Real>(values: &[R], kmax: usize) -> Vec<R> {
    let mut h = vec![R::zero(); kmax + 1];
    h[0] = R::one();
    for x in values {
        for k in 1..=kmax {
            let add = x.clone() * h[k - 1].clone();
            h[k] = h[k].clone() + add;
        }
    }
    h
}

/// Skew Schur function s_{λ/μ} at a specialization; 0 unless μ ⊆ λ.
pub fn skew_schur<R: Real>(
    lam: &Partition,
    mu: &Partition,
    x: &Specialization<R>,
) -> Result<R> {
    if !lam.contains(mu) {
        return Ok(R::zero());
    }
    if lam == mu {
        return Ok(R::one());
    }
    let values = x.values()?;
    let n = lam.len();
    let kmax = lam.part(1) as usize + n;
    let h = complete_homogeneous(&values, kmax);
    let at = |k: i64| -> R {
        if k < 0 {
            R::zero()
        } else {
            h[k as usize].clone()
        }
    };
    let m: Vec<Vec<R>> = (1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| {
                    at(lam.part(i) as i64 - mu.part(j) as i64 - i as i64 + j as i64)
                })
                .collect()
        })
        .collect();
    Ok(det_scaled(m).value())
}

/// Schur function s_λ = s_{λ/∅}.
pub fn schur<R: Real>(lam: &Partition, x: &Specialization<R>) -> Result<R> {
    skew_schur(lam, &Partition::empty(), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions;

    fn p(parts: &[u32]) -> Partition {
        Partition::new(parts.iter().copied())
    }

    fn finite(xs: &[f64]) -> Specialization<f64> {
        Specialization::Finite(xs.to_vec())
    }

    /// Brute-force sum over skew semistandard tableaux with entries 1..m.
    fn skew_schur_tableaux(lam: &Partition, mu: &Partition, xs: &[f64]) -> f64 {
        if !lam.contains(mu) {
            return 0.0;
        }
        let rows = lam.len();
        if rows == 0 {
            return 1.0;
        }
        let m = xs.len();
        // fill[r][c] for μ_r < c ≤ λ_r (1-based columns), values 1..m
        let mut fill: Vec<Vec<usize>> = (0..rows)
            .map(|r| vec![0; lam.part(r + 1) as usize])
            .collect();
        fn rec(
            lam: &Partition,
            mu: &Partition,
            xs: &[f64],
            m: usize,
            fill: &mut Vec<Vec<usize>>,
            r: usize,
            c: usize,
            weight: f64,
            total: &mut f64,
        ) {
            let rows = lam.len();
            if r == rows {
                *total += weight;
                return;
            }
            let (lo, hi) = (mu.part(r + 1) as usize, lam.part(r + 1) as usize);
            if c >= hi {
                rec(lam, mu, xs, m, fill, r + 1, mu.part(r + 2) as usize, weight, total);
                return;
            }
            if c < lo {
                rec(lam, mu, xs, m, fill, r, lo, weight, total);
                return;
            }
            let mut min_v = 1;
            if c > lo {
                min_v = min_v.max(fill[r][c - 1]); // weakly increasing along rows
            }
            if r > 0 && c < lam.part(r) as usize && c >= mu.part(r) as usize {
                min_v = min_v.max(fill[r - 1][c] + 1); // strictly increasing down columns
            }
            for v in min_v.max(1)..=m {
                fill[r][c] = v;
                rec(lam, mu, xs, m, fill, r, c + 1, weight * xs[v - 1], total);
            }
            fill[r][c] = 0;
        }
        let mut total = 0.0;
        rec(lam, mu, xs, m, &mut fill, 0, mu.part(1) as usize, 1.0, &mut total);
        total
    }

    #[test]
    fn skew_trivial_cases() {
        let any = finite(&[0.3, 0.7]);
        assert_eq!(skew_schur(&p(&[2, 1]), &p(&[2, 1]), &any).unwrap(), 1.0);
        assert_eq!(skew_schur(&p(&[1]), &p(&[2]), &any).unwrap(), 0.0);
    }

    #[test]
    fn principal_h1_geometric() {
        // s_{(1)}(q^{-ρ}) = q^{1/2}/(1-q) = 2/3 at q = 1/4
        let x = Specialization::principal(0.25f64, 1e-15);
        let v = skew_schur(&p(&[1]), &Partition::empty(), &x).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn finite_list_examples() {
        assert_eq!(schur(&Partition::empty(), &finite(&[1.0, 2.0])).unwrap(), 1.0);
        assert!((schur(&p(&[1]), &finite(&[1.0, 2.0])).unwrap() - 3.0).abs() < 1e-14);
        assert!((schur(&p(&[1, 1]), &finite(&[1.0, 2.0])).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn branching_rule() {
        // s_λ(x ∪ y) = Σ_μ s_{λ/μ}(x) s_μ(y), relative 1e-12 for weight ≤ 6
        let xs = [0.4, -0.2, 0.7];
        let ys = [0.15, 0.5];
        let joint = finite(&[0.4, -0.2, 0.7, 0.15, 0.5]);
        for lam in enumerate_partitions(6) {
            let lhs = schur(&lam, &joint).unwrap();
            let mut rhs = 0.0;
            for mu in enumerate_partitions(lam.weight()) {
                if !lam.contains(&mu) {
                    continue;
                }
                rhs += skew_schur(&lam, &mu, &finite(&xs)).unwrap()
                    * schur(&mu, &finite(&ys)).unwrap();
            }
            let denom = lhs.abs().max(1.0);
            assert!(
                (lhs - rhs).abs() / denom < 1e-12,
                "λ = {lam}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn principal_skew_matches_tableau_oracle() {
        let q = 0.35f64;
        let eps = 1e-13;
        let x = Specialization::principal(q, eps);
        let xs = x.values().unwrap();
        for lam in enumerate_partitions(5) {
            for mu in enumerate_partitions(lam.weight()) {
                if !lam.contains(&mu) {
                    continue;
                }
                let jt = skew_schur(&lam, &mu, &x).unwrap();
                let oracle = skew_schur_tableaux(&lam, &mu, &xs);
                let denom = oracle.abs().max(1e-30);
                assert!(
                    (jt - oracle).abs() / denom < 1e-10,
                    "λ={lam} μ={mu}: jt={jt} oracle={oracle}"
                );
            }
        }
    }

    #[test]
    fn shifted_principal_values() {
        // q^{-β-ρ} with β = (2,1): x_1 = q^{-2+1/2}, x_2 = q^{-1+3/2}, x_3 = q^{5/2}
        let q: f64 = 0.5;
        let x = Specialization::principal_shifted(p(&[2, 1]), 1.0, q, 1e-12);
        let v = x.values().unwrap();
        assert!((v[0] - q.powf(-1.5)).abs() < 1e-14);
        assert!((v[1] - q.powf(0.5)).abs() < 1e-14);
        assert!((v[2] - q.powf(2.5)).abs() < 1e-14);
    }

    #[test]
    fn divergent_tail_rejected() {
        let x = Specialization::principal(1.2f64, 1e-12);
        assert!(matches!(
            skew_schur(&p(&[1]), &Partition::empty(), &x),
            Err(crate::error::Error::NonConvergentTail { .. })
        ));
    }
}
