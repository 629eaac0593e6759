//! Banded operators on a finite window of the ℤ lattice.
//!
//! An operator is Σ_k diag(d_k) Λ^k stored as bands: the matrix entry at
//! (s, s+k) is d_k(s). Entries outside the window are implicitly zero, and a
//! pair of margins tracks how far boundary contamination has crept in from
//! each edge: rows in [s_min + margin_lo, s_max − margin_hi] agree with the
//! infinite-lattice model up to band truncation.
//!
//! Products grow margins by the exact reading pattern (the result at row s
//! reads the right factor at rows s+k for k in the left factor's band range),
//! so chains of fresh Toeplitz factors keep margins bounded by the bandwidth
//! instead of accumulating per factor.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::real::Real;

/// Lattice window [s_min, s_max], inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub s_min: i64,
    pub s_max: i64,
}

impl Window {
    pub fn new(s_min: i64, s_max: i64) -> Self {
        assert!(s_min < s_max, "window must contain at least two sites");
        Window { s_min, s_max }
    }

    pub fn symmetric(radius: i64) -> Self {
        Window::new(-radius, radius)
    }

    pub fn len(&self) -> usize {
        (self.s_max - self.s_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: i64) -> bool {
        self.s_min <= s && s <= self.s_max
    }

    pub fn idx(&self, s: i64) -> usize {
        debug_assert!(self.contains(s));
        (s - self.s_min) as usize
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.s_min..=self.s_max
    }
}

/// Numerical policy shared by the banded algebra.
#[derive(Clone, Copy, Debug)]
pub struct OpConfig {
    /// Bands beyond this offset are clipped in products and series.
    pub band_cutoff: i64,
    /// Clipped absolute mass allowed inside the valid interior.
    pub clip_tol: f64,
    /// Truncation threshold for quantum-dilogarithm products and
    /// principal-specialization tails.
    pub qprod_eps: f64,
    /// Pivot rejection threshold, relative to the row's sup norm.
    pub pivot_tol: f64,
    /// Allowed out-of-support band mass in the lattice-hierarchy flows.
    pub support_tol: f64,
}

impl Default for OpConfig {
    fn default() -> Self {
        OpConfig {
            band_cutoff: 16,
            clip_tol: 1e-8,
            qprod_eps: 1e-12,
            pivot_tol: 1e-13,
            support_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triangular {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandPart {
    /// Bands k ≥ 0, the ( )_{≥0} projection.
    Nonneg,
    /// Bands k < 0, the ( )_{<0} projection.
    Neg,
}

/// Finite-window, finite-bandwidth realization of a ℤ×ℤ matrix Σ_k diag(d_k)Λ^k.
#[derive(Clone, Debug)]
pub struct BandedOperator<R> {
    window: Window,
    bands: BTreeMap<i64, Vec<R>>,
    margin_lo: i64,
    margin_hi: i64,
}

impl<R: Real> BandedOperator<R> {
    pub fn zero(window: Window) -> Self {
        BandedOperator {
            window,
            bands: BTreeMap::new(),
            margin_lo: 0,
            margin_hi: 0,
        }
    }

    pub fn identity(window: Window) -> Self {
        Self::shift(0, window)
    }

    /// Λ^k: single band of ones at offset k.
    pub fn shift(k: i64, window: Window) -> Self {
        let mut op = Self::zero(window);
        op.bands.insert(k, vec![R::one(); window.len()]);
        op
    }

    /// diag(f): band 0 with d_0(s) = f(s).
    pub fn diagonal(window: Window, f: impl Fn(i64) -> R) -> Self {
        let mut op = Self::zero(window);
        op.bands.insert(0, window.sites().map(f).collect());
        op
    }

    /// Toeplitz operator from Laurent coefficients: entry (s, s+k) = coeffs[k].
    pub fn from_toeplitz(window: Window, coeffs: &BTreeMap<i64, R>) -> Self {
        let mut op = Self::zero(window);
        for (&k, c) in coeffs {
            if c.is_zero() {
                continue;
            }
            op.bands.insert(k, vec![c.clone(); window.len()]);
        }
        op
    }

    /// Operator with explicit per-band site functions.
    pub fn from_bands(window: Window, bands: impl IntoIterator<Item = (i64, Vec<R>)>) -> Self {
        let mut op = Self::zero(window);
        for (k, v) in bands {
            assert_eq!(v.len(), window.len());
            op.bands.insert(k, v);
        }
        op
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn margins(&self) -> (i64, i64) {
        (self.margin_lo, self.margin_hi)
    }

    pub fn with_margins(mut self, margin_lo: i64, margin_hi: i64) -> Self {
        self.margin_lo = margin_lo;
        self.margin_hi = margin_hi;
        self
    }

    pub fn grow_margins(&mut self, lo: i64, hi: i64) {
        self.margin_lo += lo;
        self.margin_hi += hi;
    }

    /// Rows that are unaffected by window truncation.
    pub fn valid_rows(&self) -> Result<(i64, i64)> {
        let lo = self.window.s_min + self.margin_lo;
        let hi = self.window.s_max - self.margin_hi;
        if lo > hi {
            return Err(Error::EmptyInterior {
                margin_lo: self.margin_lo,
                margin_hi: self.margin_hi,
                len: self.window.len(),
            });
        }
        Ok((lo, hi))
    }

    pub fn band_offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.bands.keys().copied()
    }

    pub fn band(&self, k: i64) -> Option<&[R]> {
        self.bands.get(&k).map(|v| v.as_slice())
    }

    /// Matrix entry (s, s+k); zero off the stored bands or outside the window.
    pub fn entry(&self, s: i64, k: i64) -> R {
        if !self.window.contains(s) || !self.window.contains(s + k) {
            return R::zero();
        }
        match self.bands.get(&k) {
            Some(v) => v[self.window.idx(s)].clone(),
            None => R::zero(),
        }
    }

    /// Largest reach below the diagonal (≥ 0).
    pub fn k_lo(&self) -> i64 {
        self.bands.keys().next().map(|&k| (-k).max(0)).unwrap_or(0)
    }

    /// Largest reach above the diagonal (≥ 0).
    pub fn k_hi(&self) -> i64 {
        self.bands.keys().next_back().map(|&k| k.max(0)).unwrap_or(0)
    }

    pub fn scale(&self, c: &R) -> Self {
        let mut out = self.clone();
        for v in out.bands.values_mut() {
            for e in v.iter_mut() {
                *e = e.clone() * c.clone();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, &R::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, &-R::one())
    }

    pub fn add_scaled(&self, other: &Self, c: &R) -> Self {
        assert_eq!(self.window, other.window, "window mismatch");
        let mut out = self.clone();
        out.margin_lo = self.margin_lo.max(other.margin_lo);
        out.margin_hi = self.margin_hi.max(other.margin_hi);
        for (&k, v) in &other.bands {
            let dst = out
                .bands
                .entry(k)
                .or_insert_with(|| vec![R::zero(); self.window.len()]);
            for (d, e) in dst.iter_mut().zip(v) {
                *d = d.clone() + c.clone() * e.clone();
            }
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.bands.retain(|_, v| v.iter().any(|e| !e.is_zero()));
    }

    /// Band convolution: (AB)_m(s) = Σ_k A_k(s) B_{m−k}(s+k).
    ///
    /// Bands beyond `cfg.band_cutoff` are clipped; the clipped absolute mass is
    /// accounted only where both the row and the column lie in the result's
    /// valid interior (entries nearer the edge are already contaminated and
    /// legitimately huge there).
    pub fn mul(&self, other: &Self, cfg: &OpConfig) -> Result<Self> {
        assert_eq!(self.window, other.window, "window mismatch");
        let w = self.window;
        let n = w.len();
        let margin_lo = self.margin_lo.max(other.margin_lo + self.k_lo());
        let margin_hi = self.margin_hi.max(other.margin_hi + self.k_hi());
        let mut out = Self::zero(w);
        out.margin_lo = margin_lo;
        out.margin_hi = margin_hi;
        let valid_lo = w.s_min + margin_lo;
        let valid_hi = w.s_max - margin_hi;
        let mut clipped = 0.0f64;
        for (&ka, va) in &self.bands {
            for (&kb, vb) in &other.bands {
                let m = ka + kb;
                if m.abs() > cfg.band_cutoff {
                    // clipped: count mass только at interior positions
                    for s in w.sites() {
                        let sb = s + ka;
                        if !w.contains(sb) || !w.contains(s + m) {
                            continue;
                        }
                        if s >= valid_lo && s <= valid_hi && s + m >= valid_lo && s + m <= valid_hi
                        {
                            let t = va[w.idx(s)].clone() * vb[w.idx(sb)].clone();
                            clipped += t.abs().to_f64();
                        }
                    }
                    continue;
                }
                let dst = out.bands.entry(m).or_insert_with(|| vec![R::zero(); n]);
                for s in w.sites() {
                    let sb = s + ka;
                    if !w.contains(sb) {
                        continue;
                    }
                    let i = w.idx(s);
                    let t = va[i].clone() * vb[w.idx(sb)].clone();
                    dst[i] = dst[i].clone() + t;
                }
            }
        }
        if clipped > cfg.clip_tol {
            return Err(Error::ClipMassExceeded {
                mass: clipped,
                tol: cfg.clip_tol,
            });
        }
        out.prune();
        out.sanitize()?;
        Ok(out)
    }

    /// Replace non-finite entries outside the valid interior by zero; a
    /// non-finite entry at a valid position is an error.
    fn sanitize(&mut self) -> Result<()> {
        let w = self.window;
        let lo = w.s_min + self.margin_lo;
        let hi = w.s_max - self.margin_hi;
        for (&k, v) in self.bands.iter_mut() {
            for s in w.sites() {
                let e = &mut v[w.idx(s)];
                if !e.is_finite() {
                    let col = s + k;
                    if s >= lo && s <= hi && col >= lo && col <= hi {
                        return Err(Error::NumericalBlowup { site: s, band: k });
                    }
                    *e = R::zero();
                }
            }
        }
        Ok(())
    }

    /// Keep bands k ≥ 0 (`Nonneg`) or k < 0 (`Neg`); margins are unchanged.
    pub fn project(&self, part: BandPart) -> Self {
        let mut out = self.clone();
        out.bands.retain(|&k, _| match part {
            BandPart::Nonneg => k >= 0,
            BandPart::Neg => k < 0,
        });
        out
    }

    /// Inverse of a triangular banded operator as a truncated Neumann series.
    ///
    /// Lower requires unit diagonal; upper requires a nonzero diagonal (the
    /// series then applies to D^{-1}A). Reach grows by `band_cutoff` on the
    /// triangular side.
    pub fn invert_triangular(&self, side: Triangular, cfg: &OpConfig) -> Result<Self> {
        let w = self.window;
        let (valid_lo, valid_hi) = self.valid_rows()?;
        let diag = self.bands.get(&0);
        // The strictly-triangular part X (after diagonal normalization).
        let mut x = Self::zero(w);
        x.margin_lo = self.margin_lo;
        x.margin_hi = self.margin_hi;
        let mut dinv: Option<Vec<R>> = None;
        match side {
            Triangular::Lower => {
                if let Some(k) = self.bands.keys().find(|&&k| k > 0) {
                    return Err(Error::InvalidParameter(format!(
                        "lower-triangular inversion on an operator with band +{k}"
                    )));
                }
                for s in w.sites() {
                    let d = diag.map(|v| v[w.idx(s)].clone()).unwrap_or_else(R::zero);
                    let dev = (d - R::one()).abs().to_f64();
                    if s >= valid_lo && s <= valid_hi && !(dev < 1e-12) {
                        return Err(Error::NotUnitTriangular { site: s });
                    }
                }
                for (&k, v) in &self.bands {
                    if k < 0 {
                        x.bands.insert(k, v.clone());
                    }
                }
            }
            Triangular::Upper => {
                if let Some(k) = self.bands.keys().next().filter(|&&k| k < 0) {
                    return Err(Error::InvalidParameter(format!(
                        "upper-triangular inversion on an operator with band {k}"
                    )));
                }
                let diag = diag.ok_or(Error::ZeroDiagonal { site: valid_lo })?;
                let mut inv = Vec::with_capacity(w.len());
                for s in w.sites() {
                    let d = diag[w.idx(s)].clone();
                    let mag = d.abs().to_f64();
                    if mag == 0.0 || !mag.is_finite() {
                        if s >= valid_lo && s <= valid_hi {
                            return Err(Error::ZeroDiagonal { site: s });
                        }
                        inv.push(R::zero());
                    } else {
                        inv.push(d.recip());
                    }
                }
                // X = D^{-1}(A − D), strictly upper.
                for (&k, v) in &self.bands {
                    if k <= 0 {
                        continue;
                    }
                    let xv: Vec<R> = w
                        .sites()
                        .map(|s| inv[w.idx(s)].clone() * v[w.idx(s)].clone())
                        .collect();
                    x.bands.insert(k, xv);
                }
                dinv = Some(inv);
            }
        }
        // (1 + X)^{-1} = Σ (−X)^j, truncated once bands pass the cutoff.
        let mut series = Self::identity(w);
        series.margin_lo = self.margin_lo;
        series.margin_hi = self.margin_hi;
        let mut term = Self::identity(w).with_margins(self.margin_lo, self.margin_hi);
        let neg_x = x.scale(&-R::one());
        for _ in 0..cfg.band_cutoff {
            term = term.mul(&neg_x, cfg)?;
            if term.bands.is_empty() {
                break;
            }
            series = series.add(&term);
        }
        let mut out = match side {
            Triangular::Lower => series,
            Triangular::Upper => {
                // (D(1+X))^{-1} = (1+X)^{-1} D^{-1}
                let dinv_op = Self::from_bands(w, [(0i64, dinv.unwrap())])
                    .with_margins(self.margin_lo, self.margin_hi);
                series.mul(&dinv_op, cfg)?
            }
        };
        // Information flows from `band_cutoff` rows away on the reach side.
        match side {
            Triangular::Lower => out.margin_lo = self.margin_lo + cfg.band_cutoff,
            Triangular::Upper => out.margin_hi = self.margin_hi + cfg.band_cutoff,
        }
        out.sanitize()?;
        Ok(out)
    }

    /// Exact conjugation by q^{Δ²/2}: band k entry at s picks up
    /// q^{∓(ks + k²/2)} (forward: q^{Δ²/2} A q^{−Δ²/2}). The Gaussian diagonal
    /// itself is never formed.
    pub fn conj_by_qdelta_sq(&self, q: &R, inverse: bool) -> Self {
        let sq = q.sqrt();
        let mut out = self.clone();
        let w = self.window;
        for (&k, v) in out.bands.iter_mut() {
            for s in w.sites() {
                let mut e2 = 2 * k * s + k * k; // exponent in units of 1/2
                if !inverse {
                    e2 = -e2;
                }
                let f = sq.powi(e2);
                let i = w.idx(s);
                v[i] = v[i].clone() * f;
            }
        }
        out
    }

    /// Exact conjugation by q^{aΔ} (a in half-integer units: pass 2a):
    /// band k entry is multiplied by q^{−a·k}, independent of the site.
    pub fn conj_by_qdelta_pow(&self, q: &R, two_a: i64) -> Self {
        let sq = q.sqrt();
        let mut out = self.clone();
        for (&k, v) in out.bands.iter_mut() {
            let f = sq.powi(-two_a * k);
            for e in v.iter_mut() {
                *e = e.clone() * f.clone();
            }
        }
        out
    }

    /// e^{Σ_k t_k Λ^{±k}}: Toeplitz with coefficients of exp(Σ t_k z^k),
    /// truncated at the band cutoff. `positive` picks the Λ (upper) direction.
    pub fn exp_shift_series(t: &[R], positive: bool, window: Window, cfg: &OpConfig) -> Self {
        let kmax = cfg.band_cutoff as usize;
        let mut f = vec![R::zero(); kmax + 1];
        f[0] = R::one();
        for m in 1..=kmax {
            let mut acc = R::zero();
            for (k1, tk) in t.iter().enumerate() {
                let k = k1 + 1;
                if k > m {
                    break;
                }
                acc = acc + R::from_i64(k as i64) * tk.clone() * f[m - k].clone();
            }
            f[m] = acc / R::from_i64(m as i64);
        }
        let mut coeffs = BTreeMap::new();
        for (m, c) in f.into_iter().enumerate() {
            let k = if positive { m as i64 } else { -(m as i64) };
            coeffs.insert(k, c);
        }
        Self::from_toeplitz(window, &coeffs)
    }

    /// Dense window matrix (row-major, size n×n).
    pub fn to_dense(&self) -> Vec<Vec<R>> {
        let w = self.window;
        let n = w.len();
        let mut m = vec![vec![R::zero(); n]; n];
        for (&k, v) in &self.bands {
            for s in w.sites() {
                let c = s + k;
                if w.contains(c) {
                    m[w.idx(s)][w.idx(c)] = v[w.idx(s)].clone();
                }
            }
        }
        m
    }

    /// Extract bands within the cutoff from a dense window matrix.
    pub fn from_dense(window: Window, m: &[Vec<R>], cfg: &OpConfig) -> Self {
        let mut op = Self::zero(window);
        for k in -cfg.band_cutoff..=cfg.band_cutoff {
            let mut v = vec![R::zero(); window.len()];
            let mut any = false;
            for s in window.sites() {
                let c = s + k;
                if window.contains(c) {
                    let e = m[window.idx(s)][window.idx(c)].clone();
                    if !e.is_zero() {
                        any = true;
                    }
                    v[window.idx(s)] = e;
                }
            }
            if any {
                op.bands.insert(k, v);
            }
        }
        op
    }

    /// Per-row sup norm over stored bands (as f64, for pivot thresholds).
    pub fn row_scales(&self) -> Vec<f64> {
        let w = self.window;
        let mut scales = vec![0.0f64; w.len()];
        for v in self.bands.values() {
            for (i, e) in v.iter().enumerate() {
                scales[i] = scales[i].max(e.abs().to_f64());
            }
        }
        scales
    }
}

/// Intersection of the valid row ranges of several operators.
pub fn common_valid_rows<R: Real>(ops: &[&BandedOperator<R>]) -> Result<(i64, i64)> {
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    for op in ops {
        let (l, h) = op.valid_rows()?;
        lo = lo.max(l);
        hi = hi.min(h);
    }
    if lo > hi {
        return Err(Error::EmptyInterior {
            margin_lo: lo,
            margin_hi: hi,
            len: 0,
        });
    }
    Ok((lo, hi))
}

/// Normalized entry-wise deviation max |a−b| / (1 + |a| + |b|) over rows
/// [lo, hi], with columns also restricted to [lo, hi].
pub fn residual_on<R: Real>(
    a: &BandedOperator<R>,
    b: &BandedOperator<R>,
    lo: i64,
    hi: i64,
) -> f64 {
    let mut worst = 0.0f64;
    let mut offsets: Vec<i64> = a.band_offsets().chain(b.band_offsets()).collect();
    offsets.sort_unstable();
    offsets.dedup();
    for k in offsets {
        for s in lo..=hi {
            let col = s + k;
            if col < lo || col > hi {
                continue;
            }
            let ea = a.entry(s, k).to_f64();
            let eb = b.entry(s, k).to_f64();
            let r = (ea - eb).abs() / (1.0 + ea.abs() + eb.abs());
            worst = worst.max(r);
        }
    }
    worst
}

/// Normalized deviation over the operators' common valid interior.
pub fn residual<R: Real>(a: &BandedOperator<R>, b: &BandedOperator<R>) -> Result<f64> {
    let (lo, hi) = common_valid_rows(&[a, b])?;
    Ok(residual_on(a, b, lo, hi))
}

/// Sup of normalized entries of `a` itself on [lo, hi] (used for "is zero" checks).
pub fn sup_norm_on<R: Real>(a: &BandedOperator<R>, lo: i64, hi: i64) -> f64 {
    let z = BandedOperator::<R>::zero(a.window());
    residual_on(a, &z, lo, hi)
}
