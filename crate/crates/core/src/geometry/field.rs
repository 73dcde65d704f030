use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::{Mat2, Vec2};
use crate::error::{invalid, Error, Result};

type MatFn = dyn Fn(Vec2) -> Mat2 + Send + Sync;

/// Symmetric matrix field A(x) with declared ellipticity Λ_A and Lipschitz constant L_A.
#[derive(Clone)]
pub struct CoefficientField {
    eval: Arc<MatFn>,
    lambda: f64,
    lipschitz: f64,
    identity: bool,
    label: String,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("label", &self.label)
            .field("lambda", &self.lambda)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// JSON description: entries as closed-form expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// [a11, a12, a22]; a21 = a12.
    pub matrix: [String; 3],
    pub lambda: f64,
    pub lipschitz: f64,
}

impl FieldSpec {
    pub fn identity() -> Self {
        Self { matrix: ["1".into(), "0".into(), "1".into()], lambda: 1.0, lipschitz: 0.0 }
    }
}

/// Result of sampling a field against its declared constants.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldValidation {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub max_difference_quotient: f64,
}

/// The affine map y ↦ origin + S y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub origin: Vec2,
    pub linear: Mat2,
}

impl AffineMap {
    pub fn apply(&self, y: Vec2) -> Vec2 {
        self.origin + self.linear * y
    }

    pub fn inverse_apply(&self, p: Vec2) -> Vec2 {
        self.linear.try_inverse().expect("S is invertible") * (p - self.origin)
    }
}

impl CoefficientField {
    pub fn identity() -> Self {
        Self {
            eval: Arc::new(|_| Mat2::identity()),
            lambda: 1.0,
            lipschitz: 0.0,
            identity: true,
            label: "identity".into(),
        }
    }

    /// Constant field; Λ_A is taken as the smallest admissible value.
    pub fn constant(m: Mat2) -> Result<Self> {
        let (lo, hi) = sym_eigen(&m);
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite(lo));
        }
        if (m[(0, 1)] - m[(1, 0)]).abs() > 0.0 {
            return invalid("constant field must be symmetric");
        }
        let lambda = hi.max(1.0 / lo).max(1.0);
        Ok(Self {
            eval: Arc::new(move |_| m),
            lambda,
            lipschitz: 0.0,
            identity: m == Mat2::identity(),
            label: format!("constant[{},{};{},{}]", m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]),
        })
    }

    /// Field from three entry closures (a11, a12, a22).
    pub fn from_fn<F>(f: F, lambda: f64, lipschitz: f64, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(Vec2) -> [f64; 3] + Send + Sync + 'static,
    {
        if !(lambda >= 1.0) || !(lipschitz >= 0.0) {
            return invalid("need Λ_A ≥ 1 and L_A ≥ 0");
        }
        Ok(Self {
            eval: Arc::new(move |p| {
                let [a, b, c] = f(p);
                Mat2::new(a, b, b, c)
            }),
            lambda,
            lipschitz,
            identity: false,
            label: label.into(),
        })
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        let e: Vec<Expr> = spec.matrix.iter().map(|s| Expr::parse(s)).collect::<Result<_>>()?;
        let is_id = e.iter().all(Expr::is_constant)
            && e[0].eval(0.0, 0.0) == 1.0
            && e[1].eval(0.0, 0.0) == 0.0
            && e[2].eval(0.0, 0.0) == 1.0;
        if is_id {
            let mut f = Self::identity();
            f.lambda = spec.lambda.max(1.0);
            return Ok(f);
        }
        let label = format!("[{}, {}; {}, {}]", spec.matrix[0], spec.matrix[1], spec.matrix[1], spec.matrix[2]);
        let [a, b, c] = [e[0].clone(), e[1].clone(), e[2].clone()];
        Self::from_fn(
            move |p| [a.eval(p.x, p.y), b.eval(p.x, p.y), c.eval(p.x, p.y)],
            spec.lambda,
            spec.lipschitz,
            label,
        )
    }

    #[inline]
    pub fn at(&self, p: Vec2) -> Mat2 {
        (self.eval)(p)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// μ_x(y) = (A(y)(y−x), y−x)/|y−x|².
    pub fn mu(&self, x: Vec2, y: Vec2) -> Result<f64> {
        let d = y - x;
        let n2 = d.norm_squared();
        if n2 == 0.0 {
            return invalid("μ-weight undefined at y = x");
        }
        Ok((self.at(y) * d).dot(&d) / n2)
    }

    /// Samples the field at `n` points of the box [lo, hi] and checks the declared
    /// ellipticity and Lipschitz bounds.
    pub fn validate(&self, lo: Vec2, hi: Vec2, n: usize, seed: u64) -> Result<FieldValidation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pt = || Vec2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
        let mut min_e = f64::INFINITY;
        let mut max_e: f64 = 0.0;
        let mut max_q: f64 = 0.0;
        let scale = (hi - lo).norm().max(1e-300);
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            pts.push(pt());
        }
        for (i, &p) in pts.iter().enumerate() {
            let a = self.at(p);
            if a[(0, 1)] != a[(1, 0)] {
                return invalid(format!("A not symmetric at {p:?}"));
            }
            let (l, h) = sym_eigen(&a);
            min_e = min_e.min(l);
            max_e = max_e.max(h);
            // a nearby point and a far one
            let q_near = p + Vec2::new(1e-4 * scale, 0.7e-4 * scale);
            let q_far = pts[(i * 7 + 3) % n];
            for q in [q_near, q_far] {
                let dist = (q - p).norm();
                if dist == 0.0 {
                    continue;
                }
                let d = self.at(q) - a;
                max_q = max_q.max(d.abs().max() / dist);
            }
        }
        let report = FieldValidation { min_eigenvalue: min_e, max_eigenvalue: max_e, max_difference_quotient: max_q };
        let tol = 1e-12;
        if min_e < 1.0 / self.lambda - tol || max_e > self.lambda + tol {
            return invalid(format!(
                "ellipticity violated: eigenvalues in [{min_e}, {max_e}] but Λ_A = {}",
                self.lambda
            ));
        }
        if max_q > self.lipschitz * (1.0 + 1e-6) + 1e-12 {
            return invalid(format!("Lipschitz bound violated: quotient {max_q} > L_A = {}", self.lipschitz));
        }
        Ok(report)
    }

    /// Returns A_S̃(y) = S̃⁻¹A(x + S̃y)S̃⁻¹ with S̃ = √A(x), and the map y ↦ x + S̃y.
    pub fn normalize_at(&self, x: Vec2) -> Result<(CoefficientField, AffineMap)> {
        let ax = self.at(x);
        let s = sqrtm_spd(&ax)?;
        let s_inv = s.try_inverse().ok_or(Error::NotPositiveDefinite(0.0))?;
        let map = AffineMap { origin: x, linear: s };
        if self.identity {
            let mut f = Self::identity();
            f.lambda = self.lambda;
            return Ok((f, map));
        }
        let inner = self.eval.clone();
        let (l, h) = sym_eigen(&ax);
        // (Ã v, v) = (A w, w) with w = S̃⁻¹v, |w|² ∈ [1/h, 1/l]
        let lam = (self.lambda / l).max(self.lambda * h);
        // entrywise bound through |S̃⁻¹|² |S̃| with a factor 2 between entry and operator norms
        let lip = 2.0 * self.lipschitz * h.sqrt() / l;
        Ok((
            CoefficientField {
                eval: Arc::new(move |y| {
                    let m = s_inv * inner(x + s * y) * s_inv;
                    // enforce exact symmetry
                    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
                    Mat2::new(m[(0, 0)], off, off, m[(1, 1)])
                }),
                lambda: lam.max(1.0),
                lipschitz: lip,
                identity: false,
                label: format!("normalized({}) at ({}, {})", self.label, x.x, x.y),
            },
            map,
        ))
    }
}

/// Eigenvalues (ascending) of a symmetric 2×2 matrix.
pub fn sym_eigen(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    let tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (tr - disc, tr + disc)
}

/// Symmetric positive-definite square root via eigendecomposition.
pub fn sqrtm_spd(m: &Mat2) -> Result<Mat2> {
    let sym = Mat2::new(m[(0, 0)], m[(0, 1)], m[(0, 1)], m[(1, 1)]);
    if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * m.abs().max() {
        return invalid("matrix is not symmetric");
    }
    let eig = nalgebra::SymmetricEigen::new(sym);
    let lo = eig.eigenvalues.min();
    if lo <= 1e-10 {
        return Err(Error::NotPositiveDefinite(lo));
    }
    let d = Mat2::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let s = eig.eigenvectors * d * eig.eigenvectors.transpose();
    let off = 0.5 * (s[(0, 1)] + s[(1, 0)]);
    Ok(Mat2::new(s[(0, 0)], off, off, s[(1, 1)]))
}
