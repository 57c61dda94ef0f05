//! Exploratory factor analysis over the term-incidence correlation matrix:
//! PCA extraction, Kaiser retention, varimax rotation, salience assignment.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::TermMatrix;

/// Loadings below this magnitude leave a term unassigned.
pub const SALIENCE_THRESHOLD: f64 = 0.3;
/// Kaiser retention cutoff; the epsilon guards the lambda == 1 boundary
/// against last-ulp noise from the eigensolver.
const KAISER_CUTOFF: f64 = 1.0 + 1e-9;
const MAX_ROTATION_SWEEPS: usize = 500;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorSolution {
    /// Terms actually analyzed, in matrix column order, constants dropped.
    pub terms: Vec<String>,
    /// Zero-variance columns dropped before correlation.
    pub dropped_terms: Vec<String>,
    /// Pearson correlation over analyzed columns (diagonal exactly 1).
    #[serde(skip)]
    pub correlation: DMatrix<f64>,
    /// Descending eigenvalues of the correlation matrix.
    pub eigenvalues: Vec<f64>,
    /// Number of retained factors (eigenvalues above the Kaiser cutoff).
    pub k: usize,
    /// terms x k rotated loadings.
    #[serde(skip)]
    pub loadings: DMatrix<f64>,
    pub rotation_converged: bool,
    /// Term -> retained factor index, by maximum absolute loading.
    pub assignment: BTreeMap<String, usize>,
    /// Terms whose maximum absolute loading fell below the salience threshold.
    pub unassigned: Vec<String>,
}

impl FactorSolution {
    /// Assigned member terms of one factor, in column order.
    pub fn factor_members(&self, factor: usize) -> Vec<String> {
        self.terms
            .iter()
            .filter(|t| self.assignment.get(*t) == Some(&factor))
            .cloned()
            .collect()
    }
}

/// Pearson correlation between matrix columns. Diagonal is set to exactly 1;
/// callers must have dropped constant columns.
pub fn correlation_matrix(values: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    let n = values.len() as f64;
    let mut sums = vec![0.0; cols];
    let mut sq_sums = vec![0.0; cols];
    for row in values {
        for (j, &v) in row.iter().enumerate() {
            sums[j] += v;
            sq_sums[j] += v * v;
        }
    }
    let denom: Vec<f64> = (0..cols).map(|j| n * sq_sums[j] - sums[j] * sums[j]).collect();
    let mut corr = DMatrix::identity(cols, cols);
    for i in 0..cols {
        for j in (i + 1)..cols {
            let cross: f64 = values.iter().map(|row| row[i] * row[j]).sum();
            let num = n * cross - sums[i] * sums[j];
            let r = num / (denom[i] * denom[j]).sqrt();
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    corr
}

/// Eigenvalues (descending) and matching eigenvectors of a symmetric matrix.
/// Eigenvector signs are pinned so the largest-magnitude component is positive.
pub fn eigen_descending(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = matrix.clone().symmetric_eigen();
    let n = matrix.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: DVector<f64> = eig.eigenvectors.column(src).into();
        let pivot = col
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.abs()
                    .partial_cmp(&b.abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    (eigenvalues, vectors)
}

/// Plain varimax rotation via pairwise column sweeps. Returns the rotated
/// loadings and whether the sweep converged within the budget.
pub fn varimax(loadings: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let (n, k) = (loadings.nrows(), loadings.ncols());
    if k < 2 {
        return (loadings.clone(), true);
    }
    let mut rotated = loadings.clone();
    let nf = n as f64;
    for _ in 0..MAX_ROTATION_SWEEPS {
        let mut total_angle = 0.0;
        for p in 0..k - 1 {
            for q in (p + 1)..k {
                let mut a = 0.0;
                let mut b = 0.0;
                let mut c = 0.0;
                let mut d = 0.0;
                for i in 0..n {
                    let x = rotated[(i, p)];
                    let y = rotated[(i, q)];
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    a += u;
                    b += v;
                    c += u * u - v * v;
                    d += 2.0 * u * v;
                }
                let num = d - 2.0 * a * b / nf;
                let den = c - (a * a - b * b) / nf;
                let angle = 0.25 * num.atan2(den);
                if angle.abs() > 1e-12 {
                    let (sin, cos) = angle.sin_cos();
                    for i in 0..n {
                        let x = rotated[(i, p)];
                        let y = rotated[(i, q)];
                        rotated[(i, p)] = x * cos + y * sin;
                        rotated[(i, q)] = -x * sin + y * cos;
                    }
                    total_angle += angle.abs();
                }
            }
        }
        if total_angle < 1e-10 {
            return (rotated, true);
        }
    }
    (rotated, false)
}

/// Orders factors by explained variance and pins each column's sign so its
/// largest-magnitude loading is positive.
fn canonicalize_columns(loadings: &mut DMatrix<f64>) {
    let (n, k) = (loadings.nrows(), loadings.ncols());
    let mut ss: Vec<(usize, f64)> = (0..k)
        .map(|j| (j, (0..n).map(|i| loadings[(i, j)].powi(2)).sum()))
        .collect();
    ss.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    let reordered = DMatrix::from_fn(n, k, |i, j| loadings[(i, ss[j].0)]);
    *loadings = reordered;
    for j in 0..k {
        let mut pivot = 0;
        for i in 0..n {
            if loadings[(i, j)].abs() > loadings[(pivot, j)].abs() {
                pivot = i;
            }
        }
        if loadings[(pivot, j)] < 0.0 {
            for i in 0..n {
                loadings[(i, j)] = -loadings[(i, j)];
            }
        }
    }
}

/// Full factor analysis over a term matrix. Constant columns are dropped with
/// a warning; K comes from the Kaiser criterion; loadings are the first K
/// principal components scaled by sqrt(lambda), then varimax-rotated.
pub fn factor_analysis(matrix: &TermMatrix) -> Result<(FactorSolution, Vec<String>)> {
    let mut warnings = Vec::new();

    let mut keep_cols = Vec::new();
    let mut dropped_terms = Vec::new();
    for (j, term) in matrix.terms.iter().enumerate() {
        let first = matrix.values[0][j];
        if matrix.values.iter().all(|row| row[j] == first) {
            dropped_terms.push(term.clone());
        } else {
            keep_cols.push(j);
        }
    }
    if !dropped_terms.is_empty() {
        warnings.push(format!(
            "dropped {} zero-variance column(s): {}",
            dropped_terms.len(),
            dropped_terms.join(", ")
        ));
    }
    if keep_cols.len() < 2 {
        return Err(Error::Config(format!(
            "factor analysis needs at least 2 varying columns, found {}",
            keep_cols.len()
        )));
    }

    let terms: Vec<String> = keep_cols.iter().map(|&j| matrix.terms[j].clone()).collect();
    let values: Vec<Vec<f64>> = matrix
        .values
        .iter()
        .map(|row| keep_cols.iter().map(|&j| row[j]).collect())
        .collect();

    let correlation = correlation_matrix(&values, terms.len());
    let (eigenvalues, eigenvectors) = eigen_descending(&correlation);
    let k = eigenvalues.iter().filter(|&&l| l > KAISER_CUTOFF).count();
    if k == 0 {
        return Err(Error::DegenerateStructure(
            "no eigenvalue exceeds 1; lower min_support or gather more records".into(),
        ));
    }

    let mut loadings = DMatrix::zeros(terms.len(), k);
    for j in 0..k {
        let scale = eigenvalues[j].sqrt();
        for i in 0..terms.len() {
            loadings[(i, j)] = eigenvectors[(i, j)] * scale;
        }
    }
    let (rotated, rotation_converged) = varimax(&loadings);
    let mut loadings = if rotation_converged {
        rotated
    } else {
        warnings.push(format!(
            "varimax did not converge within {MAX_ROTATION_SWEEPS} sweeps; using unrotated loadings"
        ));
        loadings
    };
    canonicalize_columns(&mut loadings);

    let mut assignment = BTreeMap::new();
    let mut unassigned = Vec::new();
    for (i, term) in terms.iter().enumerate() {
        let mut best = 0;
        for j in 1..k {
            if loadings[(i, j)].abs() > loadings[(i, best)].abs() {
                best = j;
            }
        }
        if loadings[(i, best)].abs() < SALIENCE_THRESHOLD {
            unassigned.push(term.clone());
        } else {
            assignment.insert(term.clone(), best);
        }
    }

    Ok((
        FactorSolution {
            terms,
            dropped_terms,
            correlation,
            eigenvalues,
            k,
            loadings,
            rotation_converged,
            assignment,
            unassigned,
        },
        warnings,
    ))
}
