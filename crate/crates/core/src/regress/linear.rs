use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DesignMatrix, RegressError, Regressor};

/// Condition number of XᵀX above which the ridge fallback kicks in.
pub const RIDGE_CONDITION_THRESHOLD: f64 = 1e12;
/// Ridge penalty as a fraction of trace(XᵀX)/p.
pub const RIDGE_SCALE: f64 = 1e-8;

/// Which degree-2 terms the polynomial basis carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyBasis {
    /// All products x_i·x_j with i ≤ j.
    #[default]
    Full,
    /// Only the squares x_i².
    SquaresOnly,
}

/// How a raw feature row is turned into a regression row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureRecipe {
    /// `[1, x_1, …, x_p]`
    Linear,
    /// `[1, x_1, …, x_p, degree-2 terms]`
    Poly2 { basis: PolyBasis },
}

impl FeatureRecipe {
    pub fn width(self, p: usize) -> usize {
        match self {
            FeatureRecipe::Linear => 1 + p,
            FeatureRecipe::Poly2 { basis: PolyBasis::Full } => 1 + p + p * (p + 1) / 2,
            FeatureRecipe::Poly2 {
                basis: PolyBasis::SquaresOnly,
            } => 1 + 2 * p,
        }
    }

    pub fn expand_into(self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        out.extend_from_slice(row);
        match self {
            FeatureRecipe::Linear => {}
            FeatureRecipe::Poly2 { basis: PolyBasis::Full } => {
                for i in 0..row.len() {
                    for j in i..row.len() {
                        out.push(row[i] * row[j]);
                    }
                }
            }
            FeatureRecipe::Poly2 {
                basis: PolyBasis::SquaresOnly,
            } => {
                out.extend(row.iter().map(|x| x * x));
            }
        }
    }

    fn expand(self, x: &DesignMatrix) -> Result<DesignMatrix, RegressError> {
        let width = self.width(x.cols());
        let mut values = Vec::with_capacity(x.rows() * width);
        let mut buf = Vec::with_capacity(width);
        for i in 0..x.rows() {
            self.expand_into(x.row(i), &mut buf);
            values.extend_from_slice(&buf);
        }
        DesignMatrix::new(x.rows(), width, values, x.target().to_vec())
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Degree-2 polynomial expansion, including the intercept column:
/// `[1, x_1…x_p, x_i·x_j for i ≤ j]`.
pub fn poly_expand(x: &DesignMatrix, degree: usize) -> Result<DesignMatrix, RegressError> {
    if degree != 2 {
        return Err(RegressError::UnsupportedDegree(degree));
    }
    FeatureRecipe::Poly2 { basis: PolyBasis::Full }.expand(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsSolution {
    pub coefficients: Vec<f64>,
    /// Condition number of XᵀX (eigenvalue ratio), infinite when singular.
    #[serde(with = "infinite_as_null")]
    pub condition_number: f64,
    /// Ridge penalty added to the diagonal, when the fallback was needed.
    pub ridge_penalty: Option<f64>,
}

/// Solves the normal equations (XᵀX)β = Xᵀy for an already expanded matrix.
///
/// Columns are centered (when a constant column is present) and scaled to
/// unit spread before forming XᵀX; coefficients are mapped back to the raw
/// columns. When the scaled system is still too ill-conditioned it is
/// regularized with a ridge penalty of `1e-8·trace(XᵀX)/p` and the solution
/// is marked.
pub fn ols_solve(x: &DesignMatrix) -> Result<OlsSolution, RegressError> {
    let (n, p) = (x.rows(), x.cols());
    if n == 0 || p == 0 {
        return Err(RegressError::EmptyInput);
    }
    if n < p {
        return Err(RegressError::TooFewRows { needed: p, found: n });
    }
    let (center, scale, constant) = column_scaling(x);
    let mut z = DMatrix::from_row_slice(n, p, x.values());
    for j in 0..p {
        for i in 0..n {
            z[(i, j)] = (z[(i, j)] - center[j]) / scale[j];
        }
    }
    let y = DVector::from_column_slice(x.target());
    let xtx = z.tr_mul(&z);
    let xty = z.tr_mul(&y);

    let eig = xtx.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let condition_number = if min > 0.0 { max / min } else { f64::INFINITY };

    let mut ridge_penalty = None;
    let mut system = xtx.clone();
    if !(condition_number <= RIDGE_CONDITION_THRESHOLD) {
        let penalty = RIDGE_SCALE * xtx.trace() / p as f64;
        for i in 0..p {
            system[(i, i)] += penalty;
        }
        ridge_penalty = Some(penalty);
    }
    let gamma = match system.clone().cholesky() {
        Some(c) => c.solve(&xty),
        None => {
            // numerically indefinite after rounding: one stronger ridge retry
            let penalty = ridge_penalty.unwrap_or(0.0).max(RIDGE_SCALE * xtx.trace() / p as f64) * 1e4;
            let mut s = xtx;
            for i in 0..p {
                s[(i, i)] += penalty;
            }
            ridge_penalty = Some(penalty);
            s.cholesky().ok_or(RegressError::Singular)?.solve(&xty)
        }
    };

    let mut beta: Vec<f64> = (0..p).map(|j| gamma[j] / scale[j]).collect();
    if let Some((k, v)) = constant {
        let offset: f64 = (0..p).map(|j| beta[j] * center[j]).sum();
        beta[k] -= offset / v;
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(RegressError::Singular);
    }
    Ok(OlsSolution {
        coefficients: beta,
        condition_number,
        ridge_penalty,
    })
}

/// Per-column center and scale, plus the first non-zero constant column.
fn column_scaling(x: &DesignMatrix) -> (Vec<f64>, Vec<f64>, Option<(usize, f64)>) {
    let (n, p) = (x.rows(), x.cols());
    let mut mean = vec![0.0; p];
    let mut constant = None;
    let mut is_const = vec![true; p];
    for j in 0..p {
        let first = x.get(0, j);
        let mut sum = 0.0;
        for i in 0..n {
            let v = x.get(i, j);
            sum += v;
            if v != first {
                is_const[j] = false;
            }
        }
        mean[j] = sum / n as f64;
        if is_const[j] && first != 0.0 && constant.is_none() {
            constant = Some((j, first));
        }
    }
    let mut center = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for j in 0..p {
        if is_const[j] {
            continue;
        }
        if constant.is_some() {
            center[j] = mean[j];
        }
        let ss: f64 = (0..n).map(|i| (x.get(i, j) - center[j]).powi(2)).sum();
        let s = (ss / n as f64).sqrt();
        if s > 0.0 && s.is_finite() {
            scale[j] = s;
        }
    }
    (center, scale, constant)
}

/// A least-squares model over an expansion of the raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub recipe: FeatureRecipe,
    pub n_features: usize,
    #[serde(with = "infinite_as_null")]
    pub condition_number: f64,
    pub ridge_penalty: Option<f64>,
}

impl LinearModel {
    pub fn fit(x: &DesignMatrix, recipe: FeatureRecipe) -> Result<Self, RegressError> {
        let expanded = recipe.expand(x)?;
        let sol = ols_solve(&expanded)?;
        if sol.ridge_penalty.is_some() {
            log::debug!("ridge fallback for {:?} (cond {:.3e})", recipe, sol.condition_number);
        }
        Ok(Self {
            coefficients: sol.coefficients,
            recipe,
            n_features: x.cols(),
            condition_number: sol.condition_number,
            ridge_penalty: sol.ridge_penalty,
        })
    }

    pub fn is_ridge(&self) -> bool {
        self.ridge_penalty.is_some()
    }
}

impl Regressor for LinearModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.coefficients.len());
        self.recipe.expand_into(row, &mut buf);
        buf.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

/// Ordinary least squares with an intercept.
pub fn ols_fit(x: &DesignMatrix) -> Result<LinearModel, RegressError> {
    LinearModel::fit(x, FeatureRecipe::Linear)
}

/// Least squares on the degree-2 polynomial basis.
pub fn poly_fit(x: &DesignMatrix, basis: PolyBasis) -> Result<LinearModel, RegressError> {
    LinearModel::fit(x, FeatureRecipe::Poly2 { basis })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_recovery() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let x = DesignMatrix::from_rows(
            &xs.iter().map(|v| vec![*v]).collect::<Vec<_>>(),
            xs.iter().map(|v| 3.0 + 2.0 * v).collect(),
        )
        .unwrap();
        let m = ols_fit(&x).unwrap();
        assert!((m.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((m.coefficients[1] - 2.0).abs() < 1e-10);
        assert!(!m.is_ridge());
        assert!((m.predict(&[4.0]).unwrap() - 11.0).abs() < 1e-10);
        assert!(matches!(
            m.predict(&[1.0, 2.0]),
            Err(RegressError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn constant_target() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let m = ols_fit(&DesignMatrix::from_rows(&rows, vec![7.5; 6]).unwrap()).unwrap();
        assert!((m.coefficients[0] - 7.5).abs() < 1e-9);
        assert!(m.coefficients[1..].iter().all(|b| b.abs() < 1e-9));
    }

    #[test]
    fn poly_widths_and_terms() {
        let x = DesignMatrix::from_rows(&[vec![2.0, 3.0]], vec![0.0]).unwrap();
        let e = poly_expand(&x, 2).unwrap();
        assert_eq!(e.row(0), &[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
        assert_eq!(FeatureRecipe::Poly2 { basis: PolyBasis::Full }.width(12), 91);
        let z = DesignMatrix::from_rows(&[vec![0.0; 12]], vec![0.0]).unwrap();
        let e = poly_expand(&z, 2).unwrap();
        assert_eq!(e.cols(), 91);
        assert_eq!(e.row(0)[0], 1.0);
        assert!(e.row(0)[1..].iter().all(|v| *v == 0.0));
        assert!(matches!(poly_expand(&x, 3), Err(RegressError::UnsupportedDegree(3))));
    }

    #[test]
    fn overflowing_expansion_rejected() {
        let x = DesignMatrix::from_rows(&[vec![1e200]], vec![0.0]).unwrap();
        assert!(matches!(poly_expand(&x, 2), Err(RegressError::NonFinite { .. })));
    }

    #[test]
    fn collinear_columns_use_ridge() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| 1.0 + 3.0 * i as f64).collect();
        let m = ols_fit(&DesignMatrix::from_rows(&rows, y).unwrap()).unwrap();
        assert!(m.is_ridge());
        assert!((m.predict(&[10.0, 20.0]).unwrap() - 31.0).abs() < 1e-3);
    }
}
