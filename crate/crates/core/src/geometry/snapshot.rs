use crate::error::{Error, Result};
use crate::spectral::grid_step;
use crate::vec2::Vec2;

use super::curve::ClosedCurve;

/// Gaussian weight `exp(-|x|^2 / 4)`.
pub(crate) fn gaussian_weight(x: Vec2) -> f64 {
    (-x.norm_sq() / 4.0).exp()
}

/// Signed three-point curvature and unit normal at every vertex.
///
/// Curvature is the signed inverse circumradius of consecutive vertex triples,
/// `2 (a x b) / (|a| |b| |a + b|)`, which is exact on regular polygons. The normal
/// is the central chord direction rotated by +90 degrees.
pub fn curvature_frame(vertices: &[Vec2]) -> Result<(Vec<f64>, Vec<Vec2>)> {
    let n = vertices.len();
    let mut kappa = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    for i in 0..n {
        let prev = vertices[(i + n - 1) % n];
        let next = vertices[(i + 1) % n];
        let a = vertices[i] - prev;
        let b = next - vertices[i];
        let c = next - prev;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        if la == 0.0 || lb == 0.0 || lc == 0.0 {
            return Err(Error::NumericDegeneracy {
                vertex: i,
                reason: "coincident neighbouring vertices".into(),
            });
        }
        let k = 2.0 * a.cross(b) / (la * lb * lc);
        if !k.is_finite() {
            return Err(Error::NumericDegeneracy {
                vertex: i,
                reason: "non-finite curvature".into(),
            });
        }
        kappa.push(k);
        normal.push((c / lc).rot90());
    }
    Ok((kappa, normal))
}

/// Geometric quantities of a curve at one instant, sampled at the vertices.
///
/// The curve is parametrised by `u = 2 pi i / N`. Derivatives along the curve use
/// `d/ds = (1/sqrt g) d/du` and `d2/ds2 = (d2/du2 - gamma d/du) / g`, with central
/// differences in `u`, metric `g = |x_u|^2` and connection `gamma = g_u / (2 g)`.
#[derive(Debug, Clone)]
pub struct GeometrySnapshot {
    pub position: Vec<Vec2>,
    /// Metric `g = |x_u|^2`.
    pub metric: Vec<f64>,
    pub christoffel: Vec<f64>,
    pub tangent: Vec<Vec2>,
    pub normal: Vec<Vec2>,
    pub curvature: Vec<f64>,
    /// Shrinker defect `S = kappa + x.nu / 2`.
    pub defect: Vec<f64>,
    /// `S_s`.
    pub d_defect: Vec<f64>,
    /// `S_ss`.
    pub d2_defect: Vec<f64>,
    /// Gaussian weight `exp(-|x|^2/4)`.
    pub weight: Vec<f64>,
    /// Arclength element `|x_u| du` of the trigonometric interpolant.
    pub arclength: Vec<f64>,
    /// Chord lengths `|x_{i+1} - x_i|`.
    pub(crate) chord: Vec<f64>,
    /// Gaussian weight at chord midpoints.
    pub(crate) chord_weight: Vec<f64>,
    pub(crate) du: f64,
}

/// Computes the [`GeometrySnapshot`] of a curve.
pub fn snapshot(curve: &ClosedCurve) -> Result<GeometrySnapshot> {
    GeometrySnapshot::new(curve)
}

impl GeometrySnapshot {
    pub fn new(curve: &ClosedCurve) -> Result<Self> {
        let x = curve.vertices();
        let n = x.len();
        let du = grid_step(n);
        let (curvature, normal) = curvature_frame(x)?;
        let tangent: Vec<Vec2> = normal.iter().map(|v| -v.rot90()).collect();
        let mut metric = Vec::with_capacity(n);
        let mut christoffel = Vec::with_capacity(n);
        for i in 0..n {
            let prev = x[(i + n - 1) % n];
            let next = x[(i + 1) % n];
            let xu = (next - prev) / (2.0 * du);
            let xuu = (next - x[i] * 2.0 + prev) / (du * du);
            let g = xu.norm_sq();
            metric.push(g);
            christoffel.push(xu.dot(xuu) / g);
        }
        let (dx, dy) = curve.spectral_derivatives();
        let arclength: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b) * du).collect();
        if let Some(i) = arclength.iter().position(|&m| !(m > 0.0)) {
            return Err(Error::NumericDegeneracy {
                vertex: i,
                reason: "vanishing arclength element".into(),
            });
        }
        let weight: Vec<f64> = x.iter().map(|&p| gaussian_weight(p)).collect();
        let chord: Vec<f64> = (0..n).map(|i| (x[(i + 1) % n] - x[i]).norm()).collect();
        let chord_weight: Vec<f64> = (0..n)
            .map(|i| gaussian_weight((x[(i + 1) % n] + x[i]) * 0.5))
            .collect();
        let defect: Vec<f64> = (0..n)
            .map(|i| curvature[i] + 0.5 * x[i].dot(normal[i]))
            .collect();
        let mut snap = Self {
            position: x.to_vec(),
            metric,
            christoffel,
            tangent,
            normal,
            curvature,
            defect,
            d_defect: Vec::new(),
            d2_defect: Vec::new(),
            weight,
            arclength,
            chord,
            chord_weight,
            du,
        };
        snap.d_defect = snap.d_s(&snap.defect);
        snap.d2_defect = snap.d_ss(&snap.defect);
        Ok(snap)
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    /// Arclength derivative of a vertex field.
    pub fn d_s(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let fu = (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * self.du);
                fu / self.metric[i].sqrt()
            })
            .collect()
    }

    /// Second arclength derivative of a vertex field.
    pub fn d_ss(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let du = self.du;
        (0..n)
            .map(|i| {
                let (fp, fm) = (f[(i + 1) % n], f[(i + n - 1) % n]);
                let fu = (fp - fm) / (2.0 * du);
                let fuu = (fp - 2.0 * f[i] + fm) / (du * du);
                (fuu - self.christoffel[i] * fu) / self.metric[i]
            })
            .collect()
    }

    /// The drift Laplacian; see [`l_operator`]. `f` must have one value per vertex.
    pub fn l(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        debug_assert_eq!(f.len(), n);
        let flux: Vec<f64> = (0..n)
            .map(|i| self.chord_weight[i] * (f[(i + 1) % n] - f[i]) / self.chord[i])
            .collect();
        (0..n)
            .map(|i| (flux[i] - flux[(i + n - 1) % n]) / (self.weight[i] * self.arclength[i]))
            .collect()
    }

    /// `sum f_i w_i ds_i` (or without the weight when `weighted` is false).
    pub fn integral(&self, f: &[f64], weighted: bool) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        if weighted {
            f.iter()
                .zip(self.weight.iter().zip(&self.arclength))
                .map(|(v, (w, m))| v * w * m)
                .sum()
        } else {
            f.iter().zip(&self.arclength).map(|(a, m)| a * m).sum()
        }
    }

    /// `sup |S|`.
    pub fn sup_defect(&self) -> f64 {
        sup_abs(&self.defect)
    }
}

pub(crate) fn sup_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn check_len(f: &[f64], snap: &GeometrySnapshot) -> Result<()> {
    if f.len() != snap.len() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values but the curve has {} vertices",
            f.len(),
            snap.len()
        )));
    }
    Ok(())
}

/// Drift Laplacian `L f = w^{-1} (w f_s)_s = f_ss - (x.T / 2) f_s` with Gaussian
/// weight `w`, discretised in divergence form:
///
/// `(L f)_i = [ w_{i+1/2} (f_{i+1} - f_i) / l_{i+1/2} - w_{i-1/2} (f_i - f_{i-1}) / l_{i-1/2} ] / (w_i m_i)`
///
/// where `l` are chord lengths, half-index weights are taken at chord midpoints and
/// `m_i` is the arclength element. The operator is exactly symmetric and
/// non-positive under [`weighted_integral`].
pub fn l_operator(f: &[f64], snap: &GeometrySnapshot) -> Result<Vec<f64>> {
    check_len(f, snap)?;
    Ok(snap.l(f))
}

/// `sum f_i w_i ds_i`, or `sum f_i ds_i` when `weighted` is false.
pub fn weighted_integral(f: &[f64], snap: &GeometrySnapshot, weighted: bool) -> Result<f64> {
    check_len(f, snap)?;
    Ok(snap.integral(f, weighted))
}
