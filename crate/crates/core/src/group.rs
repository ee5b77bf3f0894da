//! Weyl systems `(G, β, d)`: the finite Weyl–Heisenberg system on `Z_N × Z_N`
//! and the truncated continuous Weyl system on a planar phase-space grid.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{displacement_matrix, phase_space_to_alpha};
use crate::operator::{Operator, C64};
use crate::summation::pairwise_sum;
use crate::tolerances::Tolerances;

/// A group element in lattice coordinates.
///
/// On a finite torus `(a, b)` are residues mod `N`. On a planar grid the point
/// is `(q, p) = (a h, b h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: i64,
    pub b: i64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 0, b: 0 };

    pub fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupCarrier {
    /// `Z_N × Z_N` with counting measure.
    FiniteTorus { n: usize },
    /// `{-L, -L+h, ..., L-h}²` with weight `h²` per point.
    PlanarGrid {
        half_extent: f64,
        step: f64,
        half_points: usize,
    },
}

impl GroupCarrier {
    pub fn finite(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModulus(n));
        }
        Ok(Self::FiniteTorus { n })
    }

    pub fn planar(half_extent: f64, step: f64) -> Result<Self> {
        if !(half_extent > 0.0 && step > 0.0 && half_extent.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "need L > 0 and h > 0 (got L = {half_extent}, h = {step})"
            )));
        }
        let ratio = half_extent / step;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) || k < 1.0 {
            return Err(Error::InvalidGrid(format!("L / h = {ratio} is not a positive integer")));
        }
        Ok(Self::PlanarGrid {
            half_extent,
            step,
            half_points: k as usize,
        })
    }

    /// Number of points per coordinate axis.
    pub fn side(&self) -> usize {
        match *self {
            Self::FiniteTorus { n } => n,
            Self::PlanarGrid { half_points, .. } => 2 * half_points,
        }
    }

    pub fn size(&self) -> usize {
        self.side() * self.side()
    }

    /// Haar weight of a single point.
    pub fn weight(&self) -> f64 {
        match *self {
            Self::FiniteTorus { .. } => 1.0,
            Self::PlanarGrid { step, .. } => step * step,
        }
    }

    /// `λ` of a set of points.
    pub fn measure(&self, count: usize) -> f64 {
        count as f64 * self.weight()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::FiniteTorus { .. })
    }

    pub fn contains(&self, g: GroupElement) -> bool {
        match *self {
            Self::FiniteTorus { .. } => true,
            Self::PlanarGrid { half_points, .. } => {
                let k = half_points as i64;
                (-k..k).contains(&g.a) && (-k..k).contains(&g.b)
            }
        }
    }

    /// Canonical representative: residues in `0..N` on the torus.
    pub fn normalize(&self, g: GroupElement) -> Result<GroupElement> {
        match *self {
            Self::FiniteTorus { n } => {
                let n = n as i64;
                Ok(GroupElement::new(g.a.rem_euclid(n), g.b.rem_euclid(n)))
            }
            Self::PlanarGrid { .. } => {
                if self.contains(g) {
                    Ok(g)
                } else {
                    Err(Error::OffGridElement { a: g.a, b: g.b })
                }
            }
        }
    }

    /// Enumeration index: `a N + b` on the torus, `iq (2K) + ip` on the grid.
    pub fn index_of(&self, g: GroupElement) -> Result<usize> {
        let g = self.normalize(g)?;
        Ok(match *self {
            Self::FiniteTorus { n } => g.a as usize * n + g.b as usize,
            Self::PlanarGrid { half_points, .. } => {
                let k = half_points as i64;
                ((g.a + k) as usize) * self.side() + (g.b + k) as usize
            }
        })
    }

    pub fn element(&self, index: usize) -> GroupElement {
        assert!(index < self.size(), "index {index} out of range");
        let side = self.side();
        let (i, j) = ((index / side) as i64, (index % side) as i64);
        match *self {
            Self::FiniteTorus { .. } => GroupElement::new(i, j),
            Self::PlanarGrid { half_points, .. } => {
                let k = half_points as i64;
                GroupElement::new(i - k, j - k)
            }
        }
    }

    /// Group law. On the grid the sum may leave the carrier.
    pub fn compose(&self, x: GroupElement, y: GroupElement) -> GroupElement {
        let s = GroupElement::new(x.a + y.a, x.b + y.b);
        match *self {
            Self::FiniteTorus { n } => {
                let n = n as i64;
                GroupElement::new(s.a.rem_euclid(n), s.b.rem_euclid(n))
            }
            Self::PlanarGrid { .. } => s,
        }
    }

    pub fn inverse(&self, g: GroupElement) -> GroupElement {
        self.compose(GroupElement::IDENTITY, GroupElement::new(-g.a, -g.b))
    }

    /// Phase-space coordinates; on the torus these are the residues.
    pub fn coordinates(&self, g: GroupElement) -> (f64, f64) {
        match *self {
            Self::FiniteTorus { .. } => (g.a as f64, g.b as f64),
            Self::PlanarGrid { step, .. } => (g.a as f64 * step, g.b as f64 * step),
        }
    }
}

/// JSON descriptor of a system. Unitaries are regenerated on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemDescriptor {
    Finite {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
    },
    Planar {
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "L")]
        l: f64,
        h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
}

const DEFAULT_CACHE: usize = 4096;

/// A concrete `(G, β, d)` with `β_g(S) = W(g) S W(g)†`.
///
/// `W(g)` is built on demand and kept in a bounded LRU cache, which is safe to
/// share between threads.
pub struct WeylSystem {
    carrier: GroupCarrier,
    fock_dim: usize,
    d_const: f64,
    cache: Mutex<LruCache<GroupElement, Arc<Operator>>>,
}

impl Clone for WeylSystem {
    fn clone(&self) -> Self {
        let cap = self.cache.lock().expect("cache poisoned").cap();
        Self {
            carrier: self.carrier.clone(),
            fock_dim: self.fock_dim,
            d_const: self.d_const,
            cache: Mutex::new(LruCache::new(cap)),
        }
    }
}

impl std::fmt::Debug for WeylSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeylSystem")
            .field("carrier", &self.carrier)
            .field("fock_dim", &self.fock_dim)
            .field("d_const", &self.d_const)
            .finish()
    }
}

fn new_cache(capacity: usize) -> Mutex<LruCache<GroupElement, Arc<Operator>>> {
    let cap = NonZeroUsize::new(capacity.max(1)).expect("nonzero");
    Mutex::new(LruCache::new(cap))
}

/// Finite Weyl–Heisenberg system on `Z_N × Z_N` with `d = N`.
pub fn build_finite_weyl(n: usize) -> Result<WeylSystem> {
    let carrier = GroupCarrier::finite(n)?;
    Ok(WeylSystem {
        carrier,
        fock_dim: n,
        d_const: n as f64,
        cache: new_cache(DEFAULT_CACHE),
    })
}

/// Truncated continuous Weyl system: `M` Fock levels on the grid
/// `[-L, L)²` with step `h`, `d = 2π`.
pub fn build_planar_weyl(m: usize, half_extent: f64, step: f64) -> Result<WeylSystem> {
    if m < 2 {
        return Err(Error::InvalidGrid(format!("truncation M = {m} must be >= 2")));
    }
    let carrier = GroupCarrier::planar(half_extent, step)?;
    Ok(WeylSystem {
        carrier,
        fock_dim: m,
        d_const: 2.0 * PI,
        cache: new_cache(DEFAULT_CACHE),
    })
}

impl WeylSystem {
    pub fn from_descriptor(desc: &SystemDescriptor) -> Result<Self> {
        match *desc {
            SystemDescriptor::Finite { n, d } => {
                if let Some(d) = d {
                    if d != n {
                        return Err(Error::InvalidGrid(format!("finite system needs d = N, got d = {d}")));
                    }
                }
                build_finite_weyl(n)
            }
            SystemDescriptor::Planar { m, l, h, d } => {
                if let Some(d) = d {
                    if (d - 2.0 * PI).abs() > 1e-9 {
                        return Err(Error::InvalidGrid(format!("planar system needs d = 2π, got d = {d}")));
                    }
                }
                build_planar_weyl(m, l, h)
            }
        }
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        match self.carrier {
            GroupCarrier::FiniteTorus { n } => SystemDescriptor::Finite { n, d: Some(n) },
            GroupCarrier::PlanarGrid { half_extent, step, .. } => SystemDescriptor::Planar {
                m: self.fock_dim,
                l: half_extent,
                h: step,
                d: Some(self.d_const),
            },
        }
    }

    pub fn with_cache_capacity(mut self, capacity: usize) -> Self {
        self.cache = new_cache(capacity);
        self
    }

    pub fn carrier(&self) -> &GroupCarrier {
        &self.carrier
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn d_const(&self) -> f64 {
        self.d_const
    }

    /// The unitary tolerance that applies to this system's `W(g)`.
    pub fn unitary_tol(&self, tol: &Tolerances) -> f64 {
        if self.carrier.is_finite() {
            tol.unitary
        } else {
            tol.unitary_planar
        }
    }

    /// Matrix of `W(g)` without touching the cache. `g` must be on the carrier.
    pub(crate) fn unitary_matrix(&self, g: GroupElement) -> DMatrix<C64> {
        self.unitary_matrix_dim(g, self.fock_dim)
    }

    fn unitary_matrix_dim(&self, g: GroupElement, dim: usize) -> DMatrix<C64> {
        match self.carrier {
            GroupCarrier::FiniteTorus { n } => {
                finite_weyl_matrix(n, g.a.rem_euclid(n as i64) as usize, g.b.rem_euclid(n as i64) as usize)
            }
            GroupCarrier::PlanarGrid { .. } => {
                let (q, p) = self.carrier.coordinates(g);
                displacement_matrix(phase_space_to_alpha(q, p), dim)
            }
        }
    }

    /// `W(g)`.
    pub fn weyl_operator(&self, g: GroupElement) -> Result<Arc<Operator>> {
        let g = self.carrier.normalize(g)?;
        if let Some(w) = self.cache.lock().expect("cache poisoned").get(&g) {
            return Ok(Arc::clone(w));
        }
        let w = Arc::new(Operator::from_matrix_unchecked(self.unitary_matrix(g)));
        self.cache.lock().expect("cache poisoned").put(g, Arc::clone(&w));
        Ok(w)
    }

    /// `β_g(S) = W(g) S W(g)†`.
    pub fn beta(&self, g: GroupElement, s: &Operator) -> Result<Operator> {
        s.check_dim(self.fock_dim)?;
        let w = self.weyl_operator(g)?;
        Ok(Operator::from_matrix_unchecked(
            w.matrix() * s.matrix() * w.matrix().adjoint(),
        ))
    }

    /// `β_g*(A) = W(g)† A W(g)`.
    pub fn beta_dual(&self, g: GroupElement, a: &Operator) -> Result<Operator> {
        a.check_dim(self.fock_dim)?;
        let w = self.weyl_operator(g)?;
        Ok(Operator::from_matrix_unchecked(
            w.matrix().adjoint() * a.matrix() * w.matrix(),
        ))
    }

    /// `‖W(g)†W(g) - I‖_max`.
    pub fn unitarity_defect(&self, g: GroupElement) -> Result<f64> {
        Ok(self.weyl_operator(g)?.unitarity_defect())
    }

    /// `Σ_g w_g Tr[P₁ β_g(P₂)]` for rank-one projections `P₁`, `P₂`.
    pub fn check_square_integrability(&self, p1: &Operator, p2: &Operator, tol: &Tolerances) -> Result<f64> {
        let psi = rank_one_vector(p1, self.fock_dim, tol)?;
        let phi = rank_one_vector(p2, self.fock_dim, tol)?;
        let w = self.carrier.weight();
        let sum = pairwise_sum(0..self.carrier.size(), &|| 0.0, &|i| {
            let u = self.unitary_matrix(self.carrier.element(i));
            psi.dotc(&(u * &phi)).norm_sqr()
        });
        Ok(w * sum)
    }

    /// The convention phase `c(x, y)` of `W(x) W(y) = c(x, y) W(x + y)`, where
    /// one is fixed: `exp(-iπ(N+1)(a b' - b a')/N)` on odd tori and
    /// `exp(i (q p' - p q') / 2)` on the grid. Even tori have no symplectic
    /// convention phase.
    pub fn convention_phase(&self, x: GroupElement, y: GroupElement) -> Option<C64> {
        match self.carrier {
            GroupCarrier::FiniteTorus { n } if n % 2 == 1 => {
                let n = n as i64;
                let sym = (x.a * y.b - x.b * y.a).rem_euclid(n);
                let e = (-(n + 1) / 2 * sym).rem_euclid(n);
                Some(root_of_unity(e as usize, n as usize))
            }
            GroupCarrier::FiniteTorus { .. } => None,
            GroupCarrier::PlanarGrid { .. } => {
                let (q, p) = self.carrier.coordinates(x);
                let (q2, p2) = self.carrier.coordinates(y);
                Some(C64::from_polar(1.0, 0.5 * (q * p2 - p * q2)))
            }
        }
    }

    /// `‖W(x) W(y) - c(x, y) W(x + y)‖_max`.
    ///
    /// On even tori `c` is the best-fit phase `Tr[W(x+y)† W(x) W(y)] / N`, and
    /// the residual includes `||c| - 1|`. On the grid the product is formed at
    /// an enlarged truncation so that the compared `M x M` block holds the
    /// matrix elements of the untruncated product.
    pub fn composition_phase_residual(&self, x: GroupElement, y: GroupElement) -> Result<f64> {
        let x = self.carrier.normalize(x)?;
        let y = self.carrier.normalize(y)?;
        let xy = self.carrier.normalize(self.carrier.compose(x, y))?;
        let m = self.fock_dim;
        let product = match self.carrier {
            GroupCarrier::FiniteTorus { .. } => self.unitary_matrix(x) * self.unitary_matrix(y),
            GroupCarrier::PlanarGrid { .. } => {
                let (q, p) = self.carrier.coordinates(x);
                let (q2, p2) = self.carrier.coordinates(y);
                let r = phase_space_to_alpha(q, p)
                    .norm()
                    .max(phase_space_to_alpha(q2, p2).norm());
                let pad = (4.0 * r * (r + (m as f64).sqrt())).ceil() as usize + 40;
                let ext = m + pad;
                let full = self.unitary_matrix_dim(x, ext) * self.unitary_matrix_dim(y, ext);
                full.view((0, 0), (m, m)).into_owned()
            }
        };
        let target = self.unitary_matrix(xy);
        let (c, extra) = match self.convention_phase(x, y) {
            Some(c) => (c, 0.0),
            None => {
                let c = (target.adjoint() * &product).trace() / m as f64;
                (c, (c.norm() - 1.0).abs())
            }
        };
        let diff = product - target * c;
        Ok(diff.iter().map(|z| z.norm()).fold(0.0, f64::max) + extra)
    }
}

/// `exp(2πi e / n)`, exact at the quarter points.
fn root_of_unity(e: usize, n: usize) -> C64 {
    half_root(2 * e % (2 * n), n)
}

/// `exp(πi e / n)` for `e` in `0..2n`, exact at the quarter points.
fn half_root(e: usize, n: usize) -> C64 {
    if e == 0 {
        return C64::new(1.0, 0.0);
    }
    if 2 * e == 2 * n {
        return C64::new(-1.0, 0.0);
    }
    if 2 * e == n {
        return C64::new(0.0, 1.0);
    }
    if 2 * e == 3 * n {
        return C64::new(0.0, -1.0);
    }
    C64::from_polar(1.0, PI * e as f64 / n as f64)
}

/// `W(a, b) = τ^{ab} X^a Z^b` with `Z|k⟩ = ω^k|k⟩`, `X|k⟩ = |k+1⟩`,
/// `ω = exp(2πi/N)`; `τ = ω^{(N+1)/2}` for odd `N`, `τ = exp(πi/N)` for even.
fn finite_weyl_matrix(n: usize, a: usize, b: usize) -> DMatrix<C64> {
    // every phase is exp(πi e / N) with e taken mod 2N
    let tau_mult = if n % 2 == 1 { n + 1 } else { 1 };
    let two_n = 2 * n;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let e = (tau_mult * a * b + 2 * b * k) % two_n;
        m[((k + a) % n, k)] = half_root(e, n);
    }
    m
}

/// Unit vector `v` with `P = |v⟩⟨v|`, validating that `P` is a rank-one
/// projection.
fn rank_one_vector(p: &Operator, dim: usize, tol: &Tolerances) -> Result<DVector<C64>> {
    p.check_dim(dim)?;
    let eig = p
        .eigen_decomposition(tol.herm)
        .map_err(|e| Error::NotRankOneProjection(e.to_string()))?;
    let (top, v) = eig
        .iter()
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .cloned()
        .expect("dim >= 1");
    let tr = p.trace();
    if (tr.re - 1.0).abs() > tol.psd || tr.im.abs() > tol.psd || (top - 1.0).abs() > tol.psd {
        return Err(Error::NotRankOneProjection(format!("trace {tr}, top eigenvalue {top}")));
    }
    let idem = (p.matrix() * p.matrix() - p.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if idem > tol.psd {
        return Err(Error::NotRankOneProjection(format!("‖P² - P‖ = {idem:.3e}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn finite_n2_shift_and_clock() {
        let sys = build_finite_weyl(2).unwrap();
        let x = sys.weyl_operator(GroupElement::new(1, 0)).unwrap();
        let want_x = Operator::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
        assert_eq!(*x, want_x);
        let z = sys.weyl_operator(GroupElement::new(0, 1)).unwrap();
        assert_eq!(*z, Operator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap());
        assert_eq!(
            *sys.weyl_operator(GroupElement::IDENTITY).unwrap(),
            Operator::identity(2)
        );
    }

    #[test]
    fn finite_n2_vacuum_overlaps() {
        // I, Z, X, τXZ in enumeration order (a N + b)
        let sys = build_finite_weyl(2).unwrap();
        let terms: Vec<f64> = (0..4)
            .map(|i| sys.weyl_operator(sys.carrier().element(i)).unwrap().matrix()[(0, 0)].norm_sqr())
            .collect();
        assert_eq!(terms, vec![1.0, 1.0, 0.0, 0.0]);
        let p0 = Operator::basis_projector(2, 0);
        let total = sys
            .check_square_integrability(&p0, &p0, &Tolerances::default())
            .unwrap();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn finite_n3_shift_moves_basis_state() {
        let sys = build_finite_weyl(3).unwrap();
        let out = sys
            .beta(GroupElement::new(1, 0), &Operator::basis_projector(3, 0))
            .unwrap();
        assert!(out.max_abs_diff(&Operator::basis_projector(3, 1)) < 1e-15);
    }

    #[test]
    fn finite_n5_all_basis_pairs() {
        let sys = build_finite_weyl(5).unwrap();
        let tol = Tolerances::default();
        for i in 0..5 {
            for j in 0..5 {
                let v = sys
                    .check_square_integrability(
                        &Operator::basis_projector(5, i),
                        &Operator::basis_projector(5, j),
                        &tol,
                    )
                    .unwrap();
                assert!((v - 5.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn finite_unitarity_exhaustive() {
        for n in 2..=5 {
            let sys = build_finite_weyl(n).unwrap();
            for i in 0..sys.carrier().size() {
                assert!(sys.unitarity_defect(sys.carrier().element(i)).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn finite_beta_homomorphism_exhaustive() {
        for n in 2..=4 {
            let sys = build_finite_weyl(n).unwrap();
            let s = Operator::from_matrix(DMatrix::from_fn(n, n, |i, j| {
                c((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.05)
            }))
            .unwrap();
            let car = sys.carrier().clone();
            for i in 0..car.size() {
                for j in 0..car.size() {
                    let (x, y) = (car.element(i), car.element(j));
                    let lhs = sys.beta(car.compose(x, y), &s).unwrap();
                    let rhs = sys.beta(x, &sys.beta(y, &s).unwrap()).unwrap();
                    assert!(lhs.max_abs_diff(&rhs) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn finite_odd_composition_phase() {
        for n in [3usize, 5] {
            let sys = build_finite_weyl(n).unwrap();
            let car = sys.carrier().clone();
            for i in 0..car.size() {
                for j in 0..car.size() {
                    let r = sys.composition_phase_residual(car.element(i), car.element(j)).unwrap();
                    assert!(r < 1e-12, "N={n} residual {r}");
                }
            }
        }
    }

    #[test]
    fn finite_even_projective_law() {
        let sys = build_finite_weyl(4).unwrap();
        let car = sys.carrier().clone();
        for i in 0..car.size() {
            for j in 0..car.size() {
                assert!(sys.composition_phase_residual(car.element(i), car.element(j)).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn planar_identity_and_overlap() {
        let sys = build_planar_weyl(40, 6.0, 0.1).unwrap();
        assert_eq!(
            *sys.weyl_operator(GroupElement::IDENTITY).unwrap(),
            Operator::identity(40)
        );
        let w = sys.weyl_operator(GroupElement::new(10, 0)).unwrap();
        assert!((w.matrix()[(0, 0)].norm_sqr() - (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn planar_composition_small_steps() {
        let sys = build_planar_weyl(60, 6.0, 0.1).unwrap();
        let r = sys
            .composition_phase_residual(GroupElement::new(1, 0), GroupElement::new(0, 1))
            .unwrap();
        assert!(r <= 1e-6, "residual {r}");
        let r = sys
            .composition_phase_residual(GroupElement::new(5, -3), GroupElement::new(-2, 7))
            .unwrap();
        assert!(r <= 1e-6, "residual {r}");
        assert_eq!(
            sys.composition_phase_residual(GroupElement::IDENTITY, GroupElement::IDENTITY)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn planar_rejects_bad_grids() {
        assert!(matches!(build_planar_weyl(40, 6.0, 0.07), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_planar_weyl(1, 6.0, 0.1), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_finite_weyl(1), Err(Error::InvalidModulus(1))));
    }

    #[test]
    fn off_grid_elements_error() {
        let sys = build_planar_weyl(10, 1.0, 0.5).unwrap();
        assert!(matches!(
            sys.weyl_operator(GroupElement::new(2, 0)),
            Err(Error::OffGridElement { .. })
        ));
        assert!(sys.weyl_operator(GroupElement::new(-2, 1)).is_ok());
    }

    #[test]
    fn enumeration_round_trip() {
        for car in [
            GroupCarrier::finite(4).unwrap(),
            GroupCarrier::planar(1.0, 0.25).unwrap(),
        ] {
            for i in 0..car.size() {
                assert_eq!(car.index_of(car.element(i)).unwrap(), i);
            }
        }
    }

    #[test]
    fn not_rank_one_is_rejected() {
        let sys = build_finite_weyl(3).unwrap();
        let half = Operator::identity(3).scale(c(0.5, 0.0));
        assert!(matches!(
            sys.check_square_integrability(&half, &Operator::basis_projector(3, 0), &Tolerances::default()),
            Err(Error::NotRankOneProjection(_))
        ));
    }

    #[test]
    fn descriptor_json() {
        let sys = build_finite_weyl(5).unwrap();
        assert_eq!(
            serde_json::to_string(&sys.descriptor()).unwrap(),
            r#"{"kind":"finite","N":5,"d":5}"#
        );
        let d: SystemDescriptor = serde_json::from_str(r#"{"kind":"planar","M":40,"L":6,"h":0.1}"#).unwrap();
        let sys = WeylSystem::from_descriptor(&d).unwrap();
        assert_eq!(sys.carrier().size(), 120 * 120);
    }
}
