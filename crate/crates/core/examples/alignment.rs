//! Recovering component order and signs of a shuffled embedding.

use cfdm::align::align_coordinates;
use ndarray::Array2;

fn main() -> cfdm::Result<()> {
    let reference = Array2::from_shape_fn((50, 4), |(i, j)| ((i * (j + 1)) as f64 * 0.37).sin() + j as f64 * 0.1);
    let order = [2, 0, 3, 1];
    let flips = [-1.0, 1.0, 1.0, -1.0];
    let mut candidate = Array2::zeros((50, 4));
    for (c, (&src, &s)) in order.iter().zip(&flips).enumerate() {
        candidate.column_mut(c).assign(&reference.column(src).mapv(|v| s * v));
    }
    candidate[[0, 0]] += 0.01;

    let (report, _) = align_coordinates(&reference, &candidate)?;
    println!("permutation {:?}", report.permutation);
    println!("signs       {:?}", report.signs);
    println!("SSE {:.2e}, MSE {:.2e}", report.total_sse, report.total_mse);
    Ok(())
}
