use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100_000;

/// Leading eigenpair of a symmetric positive semi-definite matrix by power
/// iteration from a fixed start vector.
fn leading_eigenpair(m: &Array2<f64>) -> (f64, Array1<f64>) {
    let d = m.nrows();
    // Fixed, non-degenerate start.
    let mut v = Array1::from_shape_fn(d, |i| 1.0 + 0.01 * ((i * 7919) % 101) as f64);
    v /= v.dot(&v).sqrt();
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let w = m.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return (0.0, v);
        }
        let next = w / norm;
        let delta = (&next - &v).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        lambda = next.dot(&m.dot(&next));
        v = next;
        if delta < 1e-14 {
            break;
        }
    }
    (lambda, v)
}

/// Flips `v` so its largest-magnitude coordinate (first on ties) is positive.
fn canonical_sign(v: &mut Array1<f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// Top-two principal directions of the rows of `data`, with eigenvalues.
pub fn principal_components(data: &Array2<f64>) -> Result<(Array2<f64>, [f64; 2])> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::param("projection needs at least two rows"));
    }
    let mean = data.mean_axis(Axis(0)).expect("nonempty");
    let centered = data - &mean;
    let mut cov = centered.t().dot(&centered) / (n - 1) as f64;
    let d = cov.nrows();
    let trace: f64 = cov.diag().sum();
    let mut components = Array2::zeros((d, 2));
    let mut values = [0.0; 2];
    let scale = data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if centered.iter().all(|v| v.abs() <= 1e-12 * scale) {
        return Ok((components, values));
    }
    for (k, value) in values.iter_mut().enumerate().take(d) {
        let (lambda, mut v) = leading_eigenpair(&cov);
        if lambda <= 1e-12 * trace {
            break;
        }
        canonical_sign(&mut v);
        components.column_mut(k).assign(&v);
        *value = lambda;
        // Deflate.
        let outer = v.view().insert_axis(Axis(1)).dot(&v.view().insert_axis(Axis(0)));
        cov.scaled_add(-lambda, &outer);
    }
    Ok((components, values))
}

/// Projects centered rows onto the top two principal directions. Directions
/// with (numerically) zero variance project to 0.
pub fn project_embeddings(hidden: &Array2<f64>) -> Result<Array2<f64>> {
    let (components, _) = principal_components(hidden)?;
    let mean = hidden.mean_axis(Axis(0)).expect("nonempty");
    Ok((hidden - &mean).dot(&components))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn identical_rows_project_to_origin() {
        let h = Array2::from_elem((6, 4), 0.7);
        assert!(project_embeddings(&h).unwrap().iter().all(|&v| v == 0.0));
        assert!(project_embeddings(&Array2::zeros((1, 4))).is_err());
    }

    #[test]
    fn collinear_rows_have_zero_second_coordinate() {
        let dir = [0.3, -1.2, 0.5, 2.0];
        let h = Array2::from_shape_fn((10, 4), |(i, j)| 1.0 + (i as f64 * 0.37 - 1.0) * dir[j]);
        let p = project_embeddings(&h).unwrap();
        assert!(p.column(1).iter().all(|v| v.abs() < 1e-8));
        assert!(p.column(0).iter().any(|v| v.abs() > 0.1));
    }

    #[test]
    fn matches_full_eigendecomposition() {
        let mut rng = rng_from_seed(17);
        let h = Array2::from_shape_fn((50, 16), |(_, j)| rng.random_range(-1.0..1.0) * (1.0 + j as f64 * 0.3));
        let p = project_embeddings(&h).unwrap();
        let var = |c: usize| p.column(c).iter().map(|v| v * v).sum::<f64>();
        assert!(var(0) >= var(1));

        let mean = h.mean_axis(Axis(0)).unwrap();
        let centered = &h - &mean;
        let cov = centered.t().dot(&centered) / 49.0;
        let oracle = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_fn(16, 16, |i, j| cov[[i, j]]));
        let mut order: Vec<usize> = (0..16).collect();
        order.sort_by(|&a, &b| oracle.eigenvalues[b].total_cmp(&oracle.eigenvalues[a]));
        let (comps, values) = principal_components(&h).unwrap();
        for k in 0..2 {
            let ev = oracle.eigenvalues[order[k]];
            assert!((values[k] - ev).abs() < 1e-9 * ev, "eigenvalue {k}: {} vs {ev}", values[k]);
            let col = oracle.eigenvectors.column(order[k]);
            let dot: f64 = (0..16).map(|i| col[i] * comps[[i, k]]).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8);
        }
        // Reconstruction error from two components equals the oracle optimum:
        // the sum of the discarded eigenvalues times (n - 1).
        let recon = p.dot(&comps.t());
        let err: f64 = (&centered - &recon).iter().map(|v| v * v).sum();
        let optimum: f64 = order[2..].iter().map(|&i| oracle.eigenvalues[i]).sum::<f64>() * 49.0;
        assert!((err - optimum).abs() < 1e-8 * optimum, "{err} vs {optimum}");
    }

    #[test]
    fn sign_convention() {
        let mut v = Array1::from(vec![0.1, -0.9, 0.3]);
        canonical_sign(&mut v);
        assert_eq!(v.to_vec(), vec![-0.1, 0.9, -0.3]);
    }
}
