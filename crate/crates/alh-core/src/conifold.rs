//! Builders for the generalized-conifold data: the matrix U, closed-form
//! initial dressing operators, the chain of equivalent initial Lax forms, the
//! lattice-hierarchy initial data (B, C, D), and the initial exponentiated
//! Orlov-Schulman operators.

use crate::ablowitz_ladik::GalState;
use crate::banded::{BandedOperator, OpConfig, Window};
use crate::error::{Error, Result};
use crate::qdilog::{self, gamma_op, gamma_op_inv, one_plus_qshift, one_plus_qshift_inv, QShift, Sign};
use crate::real::Real;

/// Model data: the rank N, 0 < q < 1, and the parameters Q_1..Q_{2N−1}
/// attached to the internal edges of the web diagram.
#[derive(Clone, Debug)]
pub struct ModelParams<R> {
    rank: usize,
    q: R,
    qs: Vec<R>,
}

impl<R: Real> ModelParams<R> {
    pub fn new(rank: usize, q: R, qs: Vec<R>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidParameter("rank N must be ≥ 1".into()));
        }
        if qs.len() != 2 * rank - 1 {
            return Err(Error::InvalidParameter(format!(
                "expected 2N−1 = {} edge parameters, got {}",
                2 * rank - 1,
                qs.len()
            )));
        }
        let qf = q.to_f64();
        if !(0.0 < qf && qf < 1.0) {
            return Err(Error::InvalidParameter(format!("q = {qf} is not in (0, 1)")));
        }
        if qs.iter().any(|x| x.to_f64() <= 0.0) {
            return Err(Error::InvalidParameter("all Q_n must be positive".into()));
        }
        Ok(ModelParams { rank, q, qs })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn q(&self) -> &R {
        &self.q
    }

    pub fn edge_params(&self) -> &[R] {
        &self.qs
    }

    /// Q^{(m)} = Q_1 ⋯ Q_{m−1}; Q^{(1)} = 1 exactly.
    pub fn q_cum(&self, m: usize) -> R {
        assert!(m >= 1 && m <= 2 * self.rank);
        let mut acc = R::one();
        for i in 0..m - 1 {
            acc = acc * self.qs[i].clone();
        }
        acc
    }

    /// Q_1 ⋯ Q_{2N−1}.
    pub fn q_total(&self) -> R {
        self.q_cum(2 * self.rank)
    }

    /// D = (−1)^N Q_2 Q_4 ⋯ Q_{2N−2} (so D = −1 for N = 1).
    pub fn d_const(&self) -> R {
        let mut acc = R::one();
        let mut m = 2;
        while m <= 2 * self.rank - 2 {
            acc = acc * self.qs[m - 1].clone();
            m += 2;
        }
        if self.rank % 2 == 1 {
            -acc
        } else {
            acc
        }
    }
}

/// The generalized-conifold matrix U: alternating quantum-dilogarithm blocks
/// and Q_n^Δ diagonals, conjugated by q^{±Δ²/2}.
///
/// `edge_sign` multiplies every Q_n^Δ diagonal entry base (+1 builds the
/// Toda-side U, −1 builds the vertex-side operator with (−Q_n)^Δ edges).
pub fn build_u_signed<R: Real>(
    p: &ModelParams<R>,
    w: Window,
    cfg: &OpConfig,
    edge_sign: i64,
) -> Result<BandedOperator<R>> {
    let q = p.q();
    let eps = cfg.qprod_eps;
    let one = R::one();
    let mut acc: Option<BandedOperator<R>> = None;
    let mut push = |acc: &mut Option<BandedOperator<R>>, op: BandedOperator<R>| -> Result<()> {
        *acc = Some(match acc.take() {
            None => op,
            Some(a) => a.mul(&op, cfg)?,
        });
        Ok(())
    };
    for block in 1..=2 * p.rank() {
        let primed = block % 2 == 0;
        push(&mut acc, gamma_op(Sign::Minus, primed, &one, q, w, eps, cfg)?)?;
        push(&mut acc, gamma_op(Sign::Plus, primed, &one, q, w, eps, cfg)?)?;
        if block < 2 * p.rank() {
            let qn = p.edge_params()[block - 1].clone();
            let diag = BandedOperator::diagonal(w, |s| {
                let v = qn.powi(s);
                if edge_sign < 0 && s.rem_euclid(2) == 1 {
                    -v
                } else {
                    v
                }
            });
            push(&mut acc, diag)?;
        }
    }
    Ok(acc.unwrap().conj_by_qdelta_sq(q, false))
}

pub fn build_u<R: Real>(p: &ModelParams<R>, w: Window, cfg: &OpConfig) -> Result<BandedOperator<R>> {
    build_u_signed(p, w, cfg, 1)
}

/// Initial lower dressing operator W_0 (unit diagonal): the conjugated
/// product of inverse minus-type dilogarithms at the cumulative parameters.
pub fn build_w0<R: Real>(p: &ModelParams<R>, w: Window, cfg: &OpConfig) -> Result<BandedOperator<R>> {
    let q = p.q();
    let eps = cfg.qprod_eps;
    let mut acc = BandedOperator::identity(w);
    for n in 1..=p.rank() {
        let a = p.q_cum(2 * n - 1);
        let b = p.q_cum(2 * n);
        acc = acc.mul(&gamma_op_inv(Sign::Minus, false, &a, q, w, eps, cfg)?, cfg)?;
        acc = acc.mul(&gamma_op_inv(Sign::Minus, true, &b, q, w, eps, cfg)?, cfg)?;
    }
    Ok(acc.conj_by_qdelta_sq(q, false))
}

/// Exact inverse of W_0 (the same commuting product, un-inverted, reversed).
pub fn build_w0_inv<R: Real>(
    p: &ModelParams<R>,
    w: Window,
    cfg: &OpConfig,
) -> Result<BandedOperator<R>> {
    let q = p.q();
    let eps = cfg.qprod_eps;
    let mut acc = BandedOperator::identity(w);
    for n in (1..=p.rank()).rev() {
        let a = p.q_cum(2 * n - 1);
        let b = p.q_cum(2 * n);
        acc = acc.mul(&gamma_op(Sign::Minus, true, &b, q, w, eps, cfg)?, cfg)?;
        acc = acc.mul(&gamma_op(Sign::Minus, false, &a, q, w, eps, cfg)?, cfg)?;
    }
    Ok(acc.conj_by_qdelta_sq(q, false))
}

/// Initial upper dressing operator W̄_0; its diagonal is (Q_1⋯Q_{2N−1})^س.
pub fn build_wbar0<R: Real>(
    p: &ModelParams<R>,
    w: Window,
    cfg: &OpConfig,
) -> Result<BandedOperator<R>> {
    let q = p.q();
    let eps = cfg.qprod_eps;
    let mut acc = BandedOperator::identity(w);
    for n in 1..=p.rank() {
        let a = p.q_cum(2 * n - 1).recip();
        let b = p.q_cum(2 * n).recip();
        acc = acc.mul(&gamma_op(Sign::Plus, false, &a, q, w, eps, cfg)?, cfg)?;
        acc = acc.mul(&gamma_op(Sign::Plus, true, &b, q, w, eps, cfg)?, cfg)?;
    }
    let qt = p.q_total();
    let acc = acc.mul(&BandedOperator::diagonal(w, |s| qt.powi(s)), cfg)?;
    Ok(acc.conj_by_qdelta_sq(q, false))
}

pub fn build_wbar0_inv<R: Real>(
    p: &ModelParams<R>,
    w: Window,
    cfg: &OpConfig,
) -> Result<BandedOperator<R>> {
    let q = p.q();
    let eps = cfg.qprod_eps;
    let qt = p.q_total();
    let mut acc = BandedOperator::diagonal(w, |s| qt.powi(-s));
    for n in (1..=p.rank()).rev() {
        let a = p.q_cum(2 * n - 1).recip();
        let b = p.q_cum(2 * n).recip();
        acc = acc.mul(&gamma_op_inv(Sign::Plus, true, &b, q, w, eps, cfg)?, cfg)?;
        acc = acc.mul(&gamma_op_inv(Sign::Plus, false, &a, q, w, eps, cfg)?, cfg)?;
    }
    Ok(acc.conj_by_qdelta_sq(q, false))
}

/// The equivalent closed forms of the initial Lax operators; each successive
/// form is an exact rewrite of the previous one, so pairwise interior
/// residuals pin down the conjugation and shift-symmetry machinery.
#[derive(Clone, Debug)]
pub struct InitialLax<R> {
    /// Dressing route W_0 Λ W_0^{-1} and W̄_0 Λ^{-1} W̄_0^{-1}.
    pub dressing: (BandedOperator<R>, BandedOperator<R>),
    /// Gaussian-conjugated split product form.
    pub split: (BandedOperator<R>, BandedOperator<R>),
    /// Toeplitz middle after the shift-symmetry lemma.
    pub toeplitz_middle: (BandedOperator<R>, BandedOperator<R>),
    /// Rational form in q^{±Δ} and Λ^{±1}.
    pub rational: (BandedOperator<R>, BandedOperator<R>),
    /// Fully factorized symmetric form.
    pub factorized: (BandedOperator<R>, BandedOperator<R>),
}

impl<R> InitialLax<R> {
    pub fn forms(&self) -> [(&'static str, &(BandedOperator<R>, BandedOperator<R>)); 5] {
        [
            ("dressing", &self.dressing),
            ("split", &self.split),
            ("toeplitz-middle", &self.toeplitz_middle),
            ("rational", &self.rational),
            ("factorized", &self.factorized),
        ]
    }
}

pub fn initial_lax_products<R: Real>(
    p: &ModelParams<R>,
    w: Window,
    cfg: &OpConfig,
) -> Result<InitialLax<R>> {
    let q = p.q();
    let eps = cfg.qprod_eps;
    let big_n = p.rank();
    let qt = p.q_total();
    let sq = q.sqrt();

    // --- dressing route
    let w0 = build_w0(p, w, cfg)?;
    let w0_inv = build_w0_inv(p, w, cfg)?;
    let wbar0 = build_wbar0(p, w, cfg)?;
    let wbar0_inv = build_wbar0_inv(p, w, cfg)?;
    let l_dress = w0
        .mul(&BandedOperator::shift(1, w), cfg)?
        .mul(&w0_inv, cfg)?;
    let lbar_dress = wbar0
        .mul(&BandedOperator::shift(-1, w), cfg)?
        .mul(&wbar0_inv, cfg)?;

    // --- split form: Gaussian conjugate of
    //   [Π Γ_-^{-1} Γ'_-^{-1}] q^{Δ+1/2} [Π Γ'_- Γ_-] Λ     (L)
    //   Q_tot · [Π Γ_+ Γ'_+] q^{−Δ+1/2} [Π Γ'_+^{-1} Γ_+^{-1}] Λ^{-1}   (L̄^{-1})
    let mut left_minus = BandedOperator::identity(w);
    let mut right_minus = BandedOperator::identity(w);
    let mut left_plus = BandedOperator::identity(w);
    let mut right_plus = BandedOperator::identity(w);
    for n in 1..=big_n {
        let a = p.q_cum(2 * n - 1);
        let b = p.q_cum(2 * n);
        left_minus = left_minus
            .mul(&gamma_op_inv(Sign::Minus, false, &a, q, w, eps, cfg)?, cfg)?
            .mul(&gamma_op_inv(Sign::Minus, true, &b, q, w, eps, cfg)?, cfg)?;
        right_minus = right_minus
            .mul(&gamma_op(Sign::Minus, true, &b, q, w, eps, cfg)?, cfg)?
            .mul(&gamma_op(Sign::Minus, false, &a, q, w, eps, cfg)?, cfg)?;
        let ai = a.recip();
        let bi = b.recip();
        left_plus = left_plus
            .mul(&gamma_op(Sign::Plus, false, &ai, q, w, eps, cfg)?, cfg)?
            .mul(&gamma_op(Sign::Plus, true, &bi, q, w, eps, cfg)?, cfg)?;
        right_plus = right_plus
            .mul(&gamma_op_inv(Sign::Plus, true, &bi, q, w, eps, cfg)?, cfg)?
            .mul(&gamma_op_inv(Sign::Plus, false, &ai, q, w, eps, cfg)?, cfg)?;
    }
    let qd_up = BandedOperator::diagonal(w, |s| sq.powi(2 * s + 1));
    let qd_dn = BandedOperator::diagonal(w, |s| sq.powi(-2 * s + 1));
    let l_split = left_minus
        .mul(&qd_up, cfg)?
        .mul(&right_minus, cfg)?
        .mul(&BandedOperator::shift(1, w), cfg)?
        .conj_by_qdelta_sq(q, false);
    let lbar_split = left_plus
        .mul(&qd_dn, cfg)?
        .mul(&right_plus, cfg)?
        .mul(&BandedOperator::shift(-1, w), cfg)?
        .conj_by_qdelta_sq(q, false)
        .scale(&qt);

    // --- Toeplitz-middle form: q^{Δ+1/2} Π(1 − Q^{(2n−1)}q^{−1/2}Λ^{-1})(1 + Q^{(2n)}q^{−1/2}Λ^{-1})^{-1} Λ
    let mut mid_minus = BandedOperator::identity(w);
    let mut mid_plus = BandedOperator::identity(w);
    for n in 1..=big_n {
        let a = p.q_cum(2 * n - 1) * sq.recip();
        let b = p.q_cum(2 * n) * sq.recip();
        let lin = BandedOperator::identity(w).sub(&BandedOperator::shift(-1, w).scale(&a));
        mid_minus = mid_minus.mul(&lin, cfg)?;
        mid_minus = mid_minus.mul(&qdilog::geometric_inverse(&-b, -1, w, cfg), cfg)?;
        let ai = p.q_cum(2 * n - 1).recip() * sq.recip();
        let bi = p.q_cum(2 * n).recip() * sq.recip();
        mid_plus = mid_plus.mul(&qdilog::geometric_inverse(&ai, 1, w, cfg), cfg)?;
        let lin = BandedOperator::identity(w).add(&BandedOperator::shift(1, w).scale(&bi));
        mid_plus = mid_plus.mul(&lin, cfg)?;
    }
    let l_toep = qd_up
        .mul(&mid_minus, cfg)?
        .mul(&BandedOperator::shift(1, w), cfg)?
        .conj_by_qdelta_sq(q, false);
    let lbar_toep = qd_dn
        .mul(&mid_plus, cfg)?
        .mul(&BandedOperator::shift(-1, w), cfg)?
        .conj_by_qdelta_sq(q, false)
        .scale(&qt);

    // --- rational form: Π(1 − Q^{(2n−1)}q^ΔΛ^{-1})(1 + Q^{(2n)}q^ΔΛ^{-1})^{-1} · Λ
    let mut l_rat = BandedOperator::identity(w);
    let mut lbar_rat = BandedOperator::identity(w);
    for n in 1..=big_n {
        let a = p.q_cum(2 * n - 1);
        let b = p.q_cum(2 * n);
        l_rat = l_rat.mul(&one_plus_qshift(&-a, q, QShift::QdLamInv, w), cfg)?;
        l_rat = l_rat.mul(&one_plus_qshift_inv(&b, q, QShift::QdLamInv, w, cfg), cfg)?;
        let ai = a.recip();
        let bi = b.recip();
        lbar_rat = lbar_rat.mul(&one_plus_qshift_inv(&-ai, q, QShift::QdInvLam, w, cfg), cfg)?;
        lbar_rat = lbar_rat.mul(&one_plus_qshift(&bi, q, QShift::QdInvLam, w), cfg)?;
    }
    let l_rat = l_rat.mul(&BandedOperator::shift(1, w), cfg)?;
    let lbar_rat = lbar_rat
        .mul(&BandedOperator::shift(-1, w), cfg)?
        .scale(&qt);

    // --- fully factorized symmetric form:
    //   L = Π(1 − Q^{(2n−1)}q^ΔΛ^{-1}) · Λ · Π(1 + Q^{(2n)}Λ^{-1}q^Δ)^{-1}
    //   L̄^{-1} = Q_tot Π(1 + Q^{(2n)-1}q^{−Δ}Λ) · Λ^{-1} · Π(1 − Q^{(2n−1)-1}Λq^{−Δ})^{-1}
    let mut l_fact = BandedOperator::identity(w);
    let mut l_fact_right = BandedOperator::identity(w);
    let mut lbar_fact = BandedOperator::identity(w);
    let mut lbar_fact_right = BandedOperator::identity(w);
    for n in 1..=big_n {
        let a = p.q_cum(2 * n - 1);
        let b = p.q_cum(2 * n);
        l_fact = l_fact.mul(&one_plus_qshift(&-a, q, QShift::QdLamInv, w), cfg)?;
        l_fact_right =
            l_fact_right.mul(&one_plus_qshift_inv(&b, q, QShift::LamInvQd, w, cfg), cfg)?;
        let ai = a.recip();
        let bi = b.recip();
        lbar_fact = lbar_fact.mul(&one_plus_qshift(&bi, q, QShift::QdInvLam, w), cfg)?;
        lbar_fact_right =
            lbar_fact_right.mul(&one_plus_qshift_inv(&-ai, q, QShift::LamQdInv, w, cfg), cfg)?;
    }
    let l_fact = l_fact
        .mul(&BandedOperator::shift(1, w), cfg)?
        .mul(&l_fact_right, cfg)?;
    let lbar_fact = lbar_fact
        .mul(&BandedOperator::shift(-1, w), cfg)?
        .mul(&lbar_fact_right, cfg)?
        .scale(&qt);

    Ok(InitialLax {
        dressing: (l_dress, lbar_dress),
        split: (l_split, lbar_split),
        toeplitz_middle: (l_toep, lbar_toep),
        rational: (l_rat, lbar_rat),
        factorized: (l_fact, lbar_fact),
    })
}

/// Initial lattice-hierarchy data: B_0 = Π(1 − Q^{(2n−1)}q^ΔΛ^{-1})·Λ^N,
/// C_0 = Π(1 + Q^{(2n)}Λ^{-1}q^Δ), and the constant D.
pub fn initial_bcd<R: Real>(p: &ModelParams<R>, w: Window, cfg: &OpConfig) -> Result<GalState<R>> {
    let q = p.q();
    let big_n = p.rank();
    let mut b_op = BandedOperator::identity(w);
    let mut c_op = BandedOperator::identity(w);
    for n in 1..=big_n {
        let a = p.q_cum(2 * n - 1);
        let bq = p.q_cum(2 * n);
        b_op = b_op.mul(&one_plus_qshift(&-a, q, QShift::QdLamInv, w), cfg)?;
        c_op = c_op.mul(&one_plus_qshift(&bq, q, QShift::LamInvQd, w), cfg)?;
    }
    let b_op = b_op.mul(&BandedOperator::shift(big_n as i64, w), cfg)?;
    GalState::from_operators(big_n, &b_op, &c_op, p.d_const())
}

/// Initial exponentiated Orlov-Schulman operators, both as closed products
/// and through the dressing route (they must agree on the interior).
pub struct OrlovSchulman<R> {
    pub qm_product: BandedOperator<R>,
    pub qmbar_product: BandedOperator<R>,
    pub qm_dressed: BandedOperator<R>,
    pub qmbar_dressed: BandedOperator<R>,
}

pub fn orlov_schulman_init<R: Real>(
    p: &ModelParams<R>,
    w: Window,
    cfg: &OpConfig,
) -> Result<OrlovSchulman<R>> {
    let q = p.q();
    let big_n = p.rank();
    let mut qm = BandedOperator::identity(w);
    let mut qmbar = BandedOperator::identity(w);
    for n in 1..=big_n {
        let a = p.q_cum(2 * n - 1);
        let b = p.q_cum(2 * n);
        qm = qm.mul(&one_plus_qshift(&-a, q, QShift::QdLamInv, w), cfg)?;
        qm = qm.mul(&one_plus_qshift_inv(&b, q, QShift::QdLamInv, w, cfg), cfg)?;
        let ai = a.recip();
        let bi = b.recip();
        qmbar = qmbar.mul(&one_plus_qshift_inv(&-ai, q, QShift::QdInvLam, w, cfg), cfg)?;
        qmbar = qmbar.mul(&one_plus_qshift(&bi, q, QShift::QdInvLam, w), cfg)?;
    }
    let qm_product = qm.mul(&BandedOperator::diagonal(w, |s| q.powi(s)), cfg)?;
    let qmbar_product = qmbar.mul(&BandedOperator::diagonal(w, |s| q.powi(-s)), cfg)?;

    let w0 = build_w0(p, w, cfg)?;
    let w0_inv = build_w0_inv(p, w, cfg)?;
    let wbar0 = build_wbar0(p, w, cfg)?;
    let wbar0_inv = build_wbar0_inv(p, w, cfg)?;
    let qm_dressed = w0
        .mul(&BandedOperator::diagonal(w, |s| q.powi(s)), cfg)?
        .mul(&w0_inv, cfg)?;
    let qmbar_dressed = wbar0
        .mul(&BandedOperator::diagonal(w, |s| q.powi(-s)), cfg)?
        .mul(&wbar0_inv, cfg)?;
    Ok(OrlovSchulman {
        qm_product,
        qmbar_product,
        qm_dressed,
        qmbar_dressed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::{residual, residual_on};

    fn cfg() -> OpConfig {
        OpConfig::default()
    }

    fn params_n1() -> ModelParams<f64> {
        ModelParams::new(1, 0.5, vec![1.0 / 3.0]).unwrap()
    }

    fn params_n2() -> ModelParams<f64> {
        ModelParams::new(2, 0.5, vec![0.3, 0.4, 0.25]).unwrap()
    }

    #[test]
    fn cumulative_products_and_d() {
        let p = params_n2();
        assert_eq!(p.q_cum(1), 1.0);
        assert!((p.q_cum(2) - 0.3).abs() < 1e-15);
        assert!((p.q_cum(4) - 0.3 * 0.4 * 0.25).abs() < 1e-15);
        // D = (−1)^2 Q_2 = 0.4 for N = 2
        assert!((p.d_const() - 0.4).abs() < 1e-15);
        // N = 1: empty product, D = −1
        assert_eq!(params_n1().d_const(), -1.0);
        // N = 3: D = −Q_2 Q_4
        let p3 = ModelParams::new(3, 0.5, vec![0.3, 0.4, 0.25, 0.6, 0.7]).unwrap();
        assert!((p3.d_const() + 0.4 * 0.6).abs() < 1e-15);
    }

    #[test]
    fn param_validation() {
        assert!(ModelParams::new(2, 0.5, vec![0.3]).is_err());
        assert!(ModelParams::new(1, 1.2, vec![0.3]).is_err());
        assert!(ModelParams::new(1, 0.5, vec![-0.3]).is_err());
    }

    #[test]
    fn u_matches_five_factor_product_at_rank_one() {
        // N = 1: U = q^{Δ²/2} Γ_- Γ_+ Q^Δ Γ'_- Γ'_+ q^{−Δ²/2}, assembled here
        // factor by factor with the latops primitives.
        let p = params_n1();
        let w = Window::symmetric(20);
        let c = cfg();
        let u = build_u(&p, w, &c).unwrap();
        let q = 0.5f64;
        let eps = c.qprod_eps;
        let gm = gamma_op(Sign::Minus, false, &1.0, &q, w, eps, &c).unwrap();
        let gp = gamma_op(Sign::Plus, false, &1.0, &q, w, eps, &c).unwrap();
        let gpm = gamma_op(Sign::Minus, true, &1.0, &q, w, eps, &c).unwrap();
        let gpp = gamma_op(Sign::Plus, true, &1.0, &q, w, eps, &c).unwrap();
        let qd = BandedOperator::diagonal(w, |s| Real::powi(&(1.0f64 / 3.0), s));
        let direct = gm
            .mul(&gp, &c)
            .unwrap()
            .mul(&qd, &c)
            .unwrap()
            .mul(&gpm, &c)
            .unwrap()
            .mul(&gpp, &c)
            .unwrap()
            .conj_by_qdelta_sq(&q, false);
        assert!(residual(&u, &direct).unwrap() < 1e-13);
    }

    #[test]
    fn u_diagonal_tends_to_one_for_small_q() {
        // All Q_n = 1, q small: band 0 of U is 1 + O(q).
        let q = 1e-3;
        let p = ModelParams::new(1, q, vec![1.0]).unwrap();
        let w = Window::symmetric(10);
        let u = build_u(&p, w, &cfg()).unwrap();
        let (lo, hi) = u.valid_rows().unwrap();
        for s in lo..=hi {
            let d = u.entry(s, 0);
            assert!((d - 1.0).abs() < 10.0 * q, "s = {s}: {d}");
        }
    }

    #[test]
    fn w0_unit_diagonal_and_wbar0_diagonal() {
        let p = params_n2();
        let w = Window::symmetric(16);
        let c = cfg();
        let w0 = build_w0(&p, w, &c).unwrap();
        let (lo, hi) = w0.valid_rows().unwrap();
        for s in lo..=hi {
            assert_eq!(w0.entry(s, 0), 1.0, "W0 diagonal must be exactly 1");
            for k in w0.band_offsets().collect::<Vec<_>>() {
                assert!(k <= 0, "W0 must be lower triangular");
            }
        }
        let wbar = build_wbar0(&p, w, &c).unwrap();
        let qt = p.q_total();
        for s in lo..=hi {
            let want = Real::powi(&qt, s);
            let got = wbar.entry(s, 0);
            assert!(
                (got - want).abs() / want.abs() < 1e-13,
                "W̄0 diag at {s}: {got} vs {want}"
            );
        }
        // spec example: N = 1, Q_1 = 1/3, s = 2 ↦ 1/9
        let w1 = build_wbar0(&params_n1(), w, &c).unwrap();
        assert!((w1.entry(2, 0) - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn factorization_identity_u_eq_w0inv_wbar0() {
        for p in [params_n1(), params_n2()] {
            let w = Window::symmetric(24);
            let c = cfg();
            let u = build_u(&p, w, &c).unwrap();
            let w0_inv = build_w0_inv(&p, w, &c).unwrap();
            let wbar0 = build_wbar0(&p, w, &c).unwrap();
            let rhs = w0_inv.mul(&wbar0, &c).unwrap();
            let r = residual(&u, &rhs).unwrap();
            assert!(r < 1e-9, "N = {}: {r}", p.rank());
        }
    }

    #[test]
    fn lax_forms_agree_pairwise() {
        for p in [params_n1(), params_n2()] {
            let w = Window::symmetric(24);
            let forms = initial_lax_products(&p, w, &cfg()).unwrap();
            let all = forms.forms();
            for i in 0..all.len() {
                for j in i + 1..all.len() {
                    let (ni, (li, bi)) = all[i];
                    let (nj, (lj, bj)) = all[j];
                    let r1 = residual(li, lj).unwrap();
                    let r2 = residual(bi, bj).unwrap();
                    assert!(r1 < 1e-9, "N={} L: {ni} vs {nj}: {r1}", p.rank());
                    assert!(r2 < 1e-9, "N={} L̄⁻¹: {ni} vs {nj}: {r2}", p.rank());
                }
            }
        }
    }

    #[test]
    fn rank_one_initial_lax_closed_form() {
        // L_0 = (1 − q^Δ Λ^{-1})(1 + Q_1 q^Δ Λ^{-1})^{-1} Λ
        let p = params_n1();
        let w = Window::symmetric(16);
        let c = cfg();
        let forms = initial_lax_products(&p, w, &c).unwrap();
        let q = 0.5f64;
        let lhs = one_plus_qshift(&-1.0, &q, QShift::QdLamInv, w)
            .mul(&one_plus_qshift_inv(&(1.0 / 3.0), &q, QShift::QdLamInv, w, &c), &c)
            .unwrap()
            .mul(&BandedOperator::shift(1, w), &c)
            .unwrap();
        assert!(residual(&forms.rational.0, &lhs).unwrap() < 1e-14);
    }

    #[test]
    fn bcd_rank_one_closed_forms() {
        let p = params_n1();
        let w = Window::symmetric(16);
        let st = initial_bcd(&p, w, &cfg()).unwrap();
        assert_eq!(st.rank(), 1);
        assert_eq!(st.d().clone(), -1.0);
        let q = 0.5f64;
        let (lo, hi) = st.valid_rows();
        for s in lo..=hi {
            let b1 = st.b_coeff(1, s);
            let c1 = st.c_coeff(1, s);
            assert!((b1 + Real::powi(&q, s)).abs() < 1e-12, "b1({s}) = {b1}");
            let want = (1.0 / 3.0) * Real::powi(&q, s - 1);
            assert!((c1 - want).abs() / want.abs() < 1e-12, "c1({s}) = {c1}");
        }
    }

    #[test]
    fn bcd_reassembles_initial_lax() {
        for p in [params_n1(), params_n2()] {
            let w = Window::symmetric(24);
            let c = cfg();
            let st = initial_bcd(&p, w, &c).unwrap();
            let (l_gal, lbar_gal) = st.lax(&c).unwrap();
            let forms = initial_lax_products(&p, w, &c).unwrap();
            let r1 = residual(&l_gal, &forms.factorized.0).unwrap();
            let r2 = residual(&lbar_gal, &forms.factorized.1).unwrap();
            assert!(r1 < 1e-9, "N={}: L {r1}", p.rank());
            assert!(r2 < 1e-9, "N={}: L̄⁻¹ {r2}", p.rank());
        }
    }

    #[test]
    fn collapse_is_nontrivial() {
        // L̄_0^{-1} L_0 is far from D·1: the two partial factorizations do not
        // collapse to proportional operators (inverses are one-sided series).
        let p = params_n1();
        let w = Window::symmetric(20);
        let c = cfg();
        let forms = initial_lax_products(&p, w, &c).unwrap();
        let prod = forms.factorized.1.mul(&forms.factorized.0, &c).unwrap();
        let collapse = BandedOperator::identity(w).scale(&p.d_const());
        let (lo, hi) = prod.valid_rows().unwrap();
        let r = residual_on(&prod, &collapse, lo.max(-8), hi.min(8));
        assert!(r > 0.1, "collapse residual unexpectedly small: {r}");
    }

    #[test]
    fn orlov_schulman_routes_agree() {
        for p in [params_n1(), params_n2()] {
            let w = Window::symmetric(24);
            let c = cfg();
            let os = orlov_schulman_init(&p, w, &c).unwrap();
            let r1 = residual(&os.qm_product, &os.qm_dressed).unwrap();
            let r2 = residual(&os.qmbar_product, &os.qmbar_dressed).unwrap();
            assert!(r1 < 1e-9, "N={} qM: {r1}", p.rank());
            assert!(r2 < 1e-9, "N={} qM̄: {r2}", p.rank());
        }
    }

    #[test]
    fn orlov_schulman_q_near_one_and_commutation() {
        // q → 1: q^{M_0} band 0 → 1.
        let p = ModelParams::new(1, 0.999, vec![1.0 / 3.0]).unwrap();
        let w = Window::symmetric(10);
        let c = cfg();
        let os = orlov_schulman_init(&p, w, &c).unwrap();
        let (lo, hi) = os.qm_product.valid_rows().unwrap();
        for s in lo.max(-4)..=hi.min(4) {
            assert!((os.qm_product.entry(s, 0) - 1.0).abs() < 1e-2, "s = {s}");
        }
        // q^{M_0} L_0 = q · L_0 q^{M_0}
        let p = params_n1();
        let w = Window::symmetric(24);
        let os = orlov_schulman_init(&p, w, &c).unwrap();
        let forms = initial_lax_products(&p, w, &c).unwrap();
        let lhs = os.qm_product.mul(&forms.factorized.0, &c).unwrap();
        let rhs = forms
            .factorized
            .0
            .mul(&os.qm_product, &c)
            .unwrap()
            .scale(&0.5);
        assert!(residual(&lhs, &rhs).unwrap() < 1e-9);
    }
}
