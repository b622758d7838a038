//! Lloyd's algorithm from k-means++ seeding.

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone)]
pub struct KMeansModel {
    /// One center per row.
    pub centers: DMatrix<f64>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub history: Vec<f64>,
}

fn squared_distance(data: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, j: usize) -> f64 {
    data.row(i).iter().zip(centers.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Nearest center per row and the resulting inertia; ties go to the lower
/// index.
fn assign(data: &DMatrix<f64>, centers: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = (0..data.nrows())
        .map(|i| {
            let (best, d) = (0..centers.nrows())
                .map(|j| (j, squared_distance(data, i, centers, j)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            inertia += d;
            best
        })
        .collect();
    (labels, inertia)
}

fn seed_centers(data: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = data.nrows();
    let mut centers = DMatrix::zeros(k, data.ncols());
    centers.set_row(0, &data.row(rng.gen_range(0..n)));
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(data, i, &centers, 0)).collect();
    for j in 1..k {
        let pick = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // Every point already coincides with a center.
            Err(_) => rng.gen_range(0..n),
        };
        centers.set_row(j, &data.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(data, i, &centers, j));
        }
    }
    centers
}

pub fn fit_kmeans(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeansModel> {
    let n = data.nrows();
    if k == 0 || n < k {
        return Err(Error::InvalidArgument(format!("k-means needs 1 <= K <= n, got K={k}, n={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(data, k, &mut rng);
    let (mut labels, mut inertia) = assign(data, &centers);
    let mut history = vec![inertia];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = DMatrix::zeros(k, data.ncols());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            let mut row = sums.row_mut(l);
            row += data.row(i);
            counts[l] += 1;
        }
        for j in 0..k {
            // Empty clusters keep their previous center.
            if counts[j] > 0 {
                centers.set_row(j, &(sums.row(j) / counts[j] as f64));
            }
        }
        let (next, next_inertia) = assign(data, &centers);
        history.push(next_inertia);
        inertia = next_inertia;
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(KMeansModel {
        centers,
        inertia,
        history,
    })
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    pub fn predict(&self, data: &DMatrix<f64>) -> Vec<usize> {
        assign(data, &self.centers).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Normal;

    #[test]
    fn two_blobs_recover_means() {
        let data = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 1.0, 10.0, 10.0, 10.0, 11.0]);
        let m = fit_kmeans(&data, 2, 1).unwrap();
        let mut centers: Vec<(f64, f64)> = m.centers.row_iter().map(|r| (r[0], r[1])).collect();
        centers.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(centers, vec![(0.0, 0.5), (10.0, 10.5)]);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let data = DMatrix::from_row_slice(3, 1, &[1.0, 4.0, 9.0]);
        assert_eq!(fit_kmeans(&data, 3, 5).unwrap().inertia, 0.0);
    }

    #[test]
    fn three_gaussian_blobs() {
        let means = [(0.0, 0.0), (5.0, 0.0), (0.0, 5.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rows = Vec::new();
        for &(x, y) in &means {
            for _ in 0..50 {
                rows.push(x + noise.sample(&mut rng));
                rows.push(y + noise.sample(&mut rng));
            }
        }
        let data = DMatrix::from_row_slice(150, 2, &rows);
        let m = fit_kmeans(&data, 3, 2).unwrap();
        for &(x, y) in &means {
            let close = m.centers.row_iter().any(|c| ((c[0] - x).powi(2) + (c[1] - y).powi(2)).sqrt() < 0.2);
            assert!(close, "no center near ({x}, {y}): {}", m.centers);
        }
        assert!(m.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn too_few_points() {
        assert!(fit_kmeans(&DMatrix::zeros(2, 2), 3, 0).is_err());
    }
}
