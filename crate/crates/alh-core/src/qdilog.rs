//! Matrix-valued quantum dilogarithms and the quantum-torus identity suite.
//!
//! The vertex-operator matrices Γ_±(x) = Π(1 − x_iΛ^{±1})^{-1} and
//! Γ'_±(x) = Π(1 + x_iΛ^{±1}) are triangular Toeplitz; their Laurent
//! coefficients are assembled exactly in coefficient space, so the resulting
//! banded operators carry no window margin of their own.

use std::collections::BTreeMap;

use crate::banded::{BandedOperator, OpConfig, Window};
use crate::error::{Error, Result};
use crate::real::Real;

/// Γ-operator direction on the lattice (the ± in Λ^{±1}).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn dir(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// The principal value list Q·q^{1/2}, Q·q^{3/2}, ..., truncated once terms
/// drop below eps (i_max = ⌈log(eps/Q)/log q⌉ factors).
pub fn principal_values<R: Real>(prefactor: &R, q: &R, eps: f64) -> Result<Vec<R>> {
    let qf = q.to_f64();
    if !(0.0 < qf && qf < 1.0) {
        return Err(Error::NonConvergentTail { q: qf });
    }
    let pf = prefactor.to_f64().abs().max(f64::MIN_POSITIVE);
    let i_max = crate::schur::tail_length(pf, qf, eps);
    let sq = q.sqrt();
    Ok((1..=i_max)
        .map(|i| prefactor.clone() * sq.powi(2 * i as i64 - 1))
        .collect())
}

/// Coefficients of Π_i (1 − x_i z)^{-1} up to z^cutoff (complete homogeneous).
fn coeffs_prod_inv_linear<R: Real>(values: &[R], cutoff: usize) -> Vec<R> {
    crate::schur::complete_homogeneous(values, cutoff)
}

/// Coefficients of Π_i (1 + x_i z) up to z^cutoff (elementary symmetric).
fn coeffs_prod_linear<R: Real>(values: &[R], cutoff: usize) -> Vec<R> {
    let mut e = vec![R::zero(); cutoff + 1];
    e[0] = R::one();
    for x in values {
        let top = cutoff.min(values.len());
        for k in (1..=top).rev() {
            let add = x.clone() * e[k - 1].clone();
            e[k] = e[k].clone() + add;
        }
    }
    e
}

fn toeplitz_one_sided<R: Real>(dir: i64, coeffs: Vec<R>, w: Window) -> BandedOperator<R> {
    let mut map = BTreeMap::new();
    for (m, c) in coeffs.into_iter().enumerate() {
        map.insert(dir * m as i64, c);
    }
    BandedOperator::from_toeplitz(w, &map)
}

/// Γ_±(Qq^{−ρ}) (primed = false) or Γ'_±(Qq^{−ρ}) (primed = true) as a
/// banded operator; unit diagonal, bands on the `sign` side only.
pub fn gamma_op<R: Real>(
    sign: Sign,
    primed: bool,
    prefactor: &R,
    q: &R,
    w: Window,
    eps: f64,
    cfg: &OpConfig,
) -> Result<BandedOperator<R>> {
    let values = principal_values(prefactor, q, eps)?;
    Ok(gamma_op_from_values(sign, primed, &values, w, cfg))
}

/// Γ or Γ' at an explicit value list (used for stitched specializations).
pub fn gamma_op_from_values<R: Real>(
    sign: Sign,
    primed: bool,
    values: &[R],
    w: Window,
    cfg: &OpConfig,
) -> BandedOperator<R> {
    let cutoff = cfg.band_cutoff as usize;
    let coeffs = if primed {
        coeffs_prod_linear(values, cutoff)
    } else {
        coeffs_prod_inv_linear(values, cutoff)
    };
    toeplitz_one_sided(sign.dir(), coeffs, w)
}

/// Exact inverse of [`gamma_op`]: Γ^{-1} is a finite product of linear
/// factors, Γ'^{-1} a product of geometric series.
pub fn gamma_op_inv<R: Real>(
    sign: Sign,
    primed: bool,
    prefactor: &R,
    q: &R,
    w: Window,
    eps: f64,
    cfg: &OpConfig,
) -> Result<BandedOperator<R>> {
    let values = principal_values(prefactor, q, eps)?;
    Ok(gamma_op_inv_from_values(sign, primed, &values, w, cfg))
}

pub fn gamma_op_inv_from_values<R: Real>(
    sign: Sign,
    primed: bool,
    values: &[R],
    w: Window,
    cfg: &OpConfig,
) -> BandedOperator<R> {
    let cutoff = cfg.band_cutoff as usize;
    let coeffs = if primed {
        // Π(1 + x z)^{-1} = Π(1 − (−x) z)^{-1}
        let neg: Vec<R> = values.iter().map(|x| -x.clone()).collect();
        coeffs_prod_inv_linear(&neg, cutoff)
    } else {
        // Π(1 − x z): alternating elementary symmetric
        let neg: Vec<R> = values.iter().map(|x| -x.clone()).collect();
        coeffs_prod_linear(&neg, cutoff)
    };
    toeplitz_one_sided(sign.dir(), coeffs, w)
}

/// The four s-dependent bidiagonal building blocks of the initial Lax forms.
#[derive(Clone, Copy, Debug)]
pub enum QShift {
    /// q^Δ Λ^{-1}: entry (s, s−1) = q^s
    QdLamInv,
    /// Λ^{-1} q^Δ: entry (s, s−1) = q^{s−1}
    LamInvQd,
    /// q^{-Δ} Λ: entry (s, s+1) = q^{-s}
    QdInvLam,
    /// Λ q^{-Δ}: entry (s, s+1) = q^{-(s+1)}
    LamQdInv,
}

impl QShift {
    fn dir(self) -> i64 {
        match self {
            QShift::QdLamInv | QShift::LamInvQd => -1,
            QShift::QdInvLam | QShift::LamQdInv => 1,
        }
    }

    /// Exponent of q in the j-th power's band entry at row s.
    fn exponent(self, j: i64, s: i64) -> i64 {
        match self {
            QShift::QdLamInv => j * s - j * (j - 1) / 2,
            QShift::LamInvQd => j * s - j * (j + 1) / 2,
            QShift::QdInvLam => -j * s - j * (j - 1) / 2,
            QShift::LamQdInv => -j * s - j * (j + 1) / 2,
        }
    }
}

/// 1 + c·G for one of the [`QShift`] blocks G.
pub fn one_plus_qshift<R: Real>(c: &R, q: &R, kind: QShift, w: Window) -> BandedOperator<R> {
    let band: Vec<R> = w
        .sites()
        .map(|s| c.clone() * q.powi(kind.exponent(1, s)))
        .collect();
    BandedOperator::identity(w).add(&BandedOperator::from_bands(w, [(kind.dir(), band)]))
}

/// (1 + c·G)^{-1} = Σ_j (−c)^j G^j, with G^j evaluated in closed form.
pub fn one_plus_qshift_inv<R: Real>(
    c: &R,
    q: &R,
    kind: QShift,
    w: Window,
    cfg: &OpConfig,
) -> BandedOperator<R> {
    let mut bands = Vec::new();
    for j in 0..=cfg.band_cutoff {
        let cj = (-c.clone()).powi(j);
        let v: Vec<R> = w
            .sites()
            .map(|s| cj.clone() * q.powi(kind.exponent(j, s)))
            .collect();
        bands.push((kind.dir() * j, v));
    }
    BandedOperator::from_bands(w, bands)
}

/// One verified identity: a stable name and its interior residual.
#[derive(Clone, Debug)]
pub struct IdentityResidual {
    pub name: String,
    pub residual: f64,
}

/// Evaluate both sides of the quantum-torus identity suite as banded
/// operators and report the normalized interior residual of each.
pub fn verify_quantum_torus<R: Real>(
    q: &R,
    prefactor: &R,
    w: Window,
    cfg: &OpConfig,
) -> Result<Vec<IdentityResidual>> {
    let eps = cfg.qprod_eps;
    let mut out = Vec::new();
    let mut push = |name: &str, r: f64| {
        out.push(IdentityResidual {
            name: name.to_string(),
            residual: r,
        })
    };
    let qdiag = BandedOperator::diagonal(w, |s| prefactor.powi(s));
    let qd = BandedOperator::diagonal(w, |s| q.powi(s));
    let qd_inv = BandedOperator::diagonal(w, |s| q.powi(-s));

    // Λ^k Q^Δ = Q^k Q^Δ Λ^k
    for k in [1i64, 2, -1] {
        let lk = BandedOperator::shift(k, w);
        let lhs = lk.mul(&qdiag, cfg)?;
        let rhs = qdiag.mul(&lk, cfg)?.scale(&prefactor.powi(k));
        push(
            &format!("shift{k}-bigq-diag-commutation"),
            crate::banded::residual(&lhs, &rhs)?,
        );
    }

    // Λ^k q^Δ = q^k q^Δ Λ^k
    for k in [1i64, -2] {
        let lk = BandedOperator::shift(k, w);
        let lhs = lk.mul(&qd, cfg)?;
        let rhs = qd.mul(&lk, cfg)?.scale(&q.powi(k));
        push(
            &format!("shift{k}-q-diag-commutation"),
            crate::banded::residual(&lhs, &rhs)?,
        );
    }

    // Γ_±(q^{−ρ}) Q^Δ = Q^Δ Γ_±(Q^{±1} q^{−ρ}), and primed
    for (sign, tag) in [(Sign::Plus, "plus"), (Sign::Minus, "minus")] {
        for primed in [false, true] {
            let scaled_arg = match sign {
                Sign::Plus => prefactor.clone(),
                Sign::Minus => prefactor.recip(),
            };
            let g = gamma_op(sign, primed, &R::one(), q, w, eps, cfg)?;
            let g_scaled = gamma_op(sign, primed, &scaled_arg, q, w, eps, cfg)?;
            let lhs = g.mul(&qdiag, cfg)?;
            let rhs = qdiag.mul(&g_scaled, cfg)?;
            let name = format!(
                "gamma{}-{tag}-bigq-exchange",
                if primed { "-primed" } else { "" }
            );
            push(&name, crate::banded::residual(&lhs, &rhs)?);
        }
    }

    // q^{Δ²/2} Λ^k q^{−Δ²/2} = q^{−kΔ−k²/2} Λ^k
    let sq = q.sqrt();
    for k in [1i64, 2, -1] {
        let lhs = BandedOperator::shift(k, w).conj_by_qdelta_sq(q, false);
        let d = BandedOperator::diagonal(w, |s| sq.powi(-2 * k * s - k * k));
        let rhs = d.mul(&BandedOperator::shift(k, w), cfg)?;
        push(
            &format!("gaussian-conjugation-shift{k}"),
            crate::banded::residual(&lhs, &rhs)?,
        );
    }

    // v^{(k)}_m: q^{km/2} q^{kΔ} Λ^m = q^{−km/2} Λ^m q^{kΔ}
    for (k, m) in [(1i64, 1i64), (2, -1), (-1, 2)] {
        let qkd = BandedOperator::diagonal(w, |s| q.powi(k * s));
        let lm = BandedOperator::shift(m, w);
        let lhs = qkd.mul(&lm, cfg)?.scale(&sq.powi(k * m));
        let rhs = lm.mul(&qkd, cfg)?.scale(&sq.powi(-k * m));
        push(
            &format!("torus-generator-k{k}-m{m}"),
            crate::banded::residual(&lhs, &rhs)?,
        );
    }

    // Shift-symmetry lemma (four identities). Written with X = Q q^{−1/2}:
    //   Γ_-(Qq^{−ρ})^{-1} q^Δ Γ_-(Qq^{−ρ}) = q^Δ (1 − XΛ^{-1})
    //   Γ'_-(Qq^{−ρ})^{-1} q^Δ Γ'_-(Qq^{−ρ}) = q^Δ (1 + XΛ^{-1})^{-1}
    //   Γ_+(Q^{-1}q^{−ρ}) q^{−Δ} Γ_+(Q^{-1}q^{−ρ})^{-1} = q^{−Δ} (1 − X'Λ)^{-1}
    //   Γ'_+(Q^{-1}q^{−ρ}) q^{−Δ} Γ'_+(Q^{-1}q^{−ρ})^{-1} = q^{−Δ} (1 + X'Λ)
    // with X' = Q^{-1} q^{−1/2}.
    let x = prefactor.clone() * sq.recip();
    let xp = prefactor.recip() * sq.recip();
    {
        let g = gamma_op(Sign::Minus, false, prefactor, q, w, eps, cfg)?;
        let ginv = gamma_op_inv(Sign::Minus, false, prefactor, q, w, eps, cfg)?;
        let lhs = ginv.mul(&qd, cfg)?.mul(&g, cfg)?;
        let lin = BandedOperator::identity(w)
            .sub(&BandedOperator::shift(-1, w).scale(&x));
        let rhs = qd.mul(&lin, cfg)?;
        push("shift-symmetry-gamma-minus", crate::banded::residual(&lhs, &rhs)?);
    }
    {
        let g = gamma_op(Sign::Minus, true, prefactor, q, w, eps, cfg)?;
        let ginv = gamma_op_inv(Sign::Minus, true, prefactor, q, w, eps, cfg)?;
        let lhs = ginv.mul(&qd, cfg)?.mul(&g, cfg)?;
        let geom = geometric_inverse(&(-x.clone()), -1, w, cfg);
        let rhs = qd.mul(&geom, cfg)?;
        push(
            "shift-symmetry-gamma-primed-minus",
            crate::banded::residual(&lhs, &rhs)?,
        );
    }
    {
        let arg = prefactor.recip();
        let g = gamma_op(Sign::Plus, false, &arg, q, w, eps, cfg)?;
        let ginv = gamma_op_inv(Sign::Plus, false, &arg, q, w, eps, cfg)?;
        let lhs = g.mul(&qd_inv, cfg)?.mul(&ginv, cfg)?;
        let geom = geometric_inverse(&xp, 1, w, cfg);
        let rhs = qd_inv.mul(&geom, cfg)?;
        push("shift-symmetry-gamma-plus", crate::banded::residual(&lhs, &rhs)?);
    }
    {
        let arg = prefactor.recip();
        let g = gamma_op(Sign::Plus, true, &arg, q, w, eps, cfg)?;
        let ginv = gamma_op_inv(Sign::Plus, true, &arg, q, w, eps, cfg)?;
        let lhs = g.mul(&qd_inv, cfg)?.mul(&ginv, cfg)?;
        let lin = BandedOperator::identity(w).add(&BandedOperator::shift(1, w).scale(&xp));
        let rhs = qd_inv.mul(&lin, cfg)?;
        push(
            "shift-symmetry-gamma-primed-plus",
            crate::banded::residual(&lhs, &rhs)?,
        );
    }
    Ok(out)
}

/// (1 − cΛ^{±1})^{-1} as a geometric Toeplitz series.
pub fn geometric_inverse<R: Real>(c: &R, dir: i64, w: Window, cfg: &OpConfig) -> BandedOperator<R> {
    let mut map = BTreeMap::new();
    for j in 0..=cfg.band_cutoff {
        map.insert(dir * j, c.powi(j));
    }
    BandedOperator::from_toeplitz(w, &map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::residual;

    fn cfg() -> OpConfig {
        OpConfig::default()
    }

    #[test]
    fn gamma_primed_band_coefficients() {
        // Γ'_+(q^{−ρ}) band m = q^{m²/2} / Π_{j=1..m} (1 − q^j)
        let q: f64 = 0.5;
        let w = Window::symmetric(8);
        let g = gamma_op(Sign::Plus, true, &1.0, &q, w, 1e-14, &cfg()).unwrap();
        for m in 0..=5i64 {
            let mut want = q.powf((m * m) as f64 / 2.0);
            for j in 1..=m {
                want /= 1.0 - q.powi(j as i32);
            }
            let got = g.entry(0, m);
            assert!((got - want).abs() / want < 1e-12, "m={m}: {got} vs {want}");
        }
        assert_eq!(g.entry(3, 0), 1.0);
    }

    #[test]
    fn gamma_unprimed_band_one() {
        // Γ_+(q^{−ρ}) band 1 = q^{1/2}/(1 − q)
        let q: f64 = 0.3;
        let w = Window::symmetric(6);
        let g = gamma_op(Sign::Plus, false, &1.0, &q, w, 1e-14, &cfg()).unwrap();
        let want = q.sqrt() / (1.0 - q);
        assert!((g.entry(-2, 1) - want).abs() < 1e-13);
    }

    #[test]
    fn gamma_inverse_is_inverse() {
        let q: f64 = 0.5;
        let w = Window::symmetric(12);
        for sign in [Sign::Plus, Sign::Minus] {
            for primed in [false, true] {
                let g = gamma_op(sign, primed, &(1.0 / 3.0), &q, w, 1e-14, &cfg()).unwrap();
                let gi = gamma_op_inv(sign, primed, &(1.0 / 3.0), &q, w, 1e-14, &cfg()).unwrap();
                let prod = g.mul(&gi, &cfg()).unwrap();
                let id = BandedOperator::identity(w);
                let (lo, hi) = prod.valid_rows().unwrap();
                assert!(
                    crate::banded::residual_on(&prod, &id, lo, hi) < 1e-12,
                    "{sign:?} primed={primed}"
                );
            }
        }
    }

    #[test]
    fn gamma_product_matches_exp_series() {
        // Γ'_±(z) = exp(−Σ(−z)^k/k Λ^{±k}) and Γ_±(z) = exp(Σ z^k/k Λ^{±k})
        let q: f64 = 0.5;
        let z = 0.4 * q.sqrt();
        let w = Window::symmetric(10);
        let c = cfg();
        let t_primed: Vec<f64> = (1..=c.band_cutoff)
            .map(|k| -(-z).powi(k as i32) / k as f64)
            .collect();
        let e = BandedOperator::exp_shift_series(&t_primed, true, w, &c);
        let g = gamma_op_from_values(Sign::Plus, true, &[z], w, &c);
        assert!(residual(&e, &g).unwrap() < 1e-9);
        let t: Vec<f64> = (1..=c.band_cutoff)
            .map(|k| z.powi(k as i32) / k as f64)
            .collect();
        let e2 = BandedOperator::exp_shift_series(&t, false, w, &c);
        let g2 = gamma_op_from_values(Sign::Minus, false, &[z], w, &c);
        assert!(residual(&e2, &g2).unwrap() < 1e-9);
    }

    #[test]
    fn qshift_factor_inverses() {
        let q: f64 = 0.5;
        let w = Window::symmetric(14);
        let c = cfg();
        for kind in [
            QShift::QdLamInv,
            QShift::LamInvQd,
            QShift::QdInvLam,
            QShift::LamQdInv,
        ] {
            let a = one_plus_qshift(&0.3, &q, kind, w);
            let ainv = one_plus_qshift_inv(&0.3, &q, kind, w, &c);
            let prod = a.mul(&ainv, &c).unwrap();
            let (lo, hi) = prod.valid_rows().unwrap();
            // Huge q^{-|s|} entries live near one edge; compare deep inside.
            let (lo, hi) = (lo.max(-8), hi.min(8));
            assert!(
                crate::banded::residual_on(&prod, &BandedOperator::identity(w), lo, hi) < 1e-10,
                "{kind:?}"
            );
        }
    }

    #[test]
    fn quantum_torus_suite_is_tight() {
        let w = Window::symmetric(24);
        let report = verify_quantum_torus(&0.5f64, &(1.0 / 3.0), w, &cfg()).unwrap();
        assert!(report.len() >= 16);
        for r in &report {
            assert!(r.residual < 1e-10, "{}: {}", r.name, r.residual);
        }
    }
}
