//! Knot grids, hat functions and the sparse design matrix.
//!
//! ```bash
//! cargo run --example hat_basis
//! ```

use hatgp::hatbasis::{design_matrix, domain_from_data, hat_eval, make_knot_grid};
use hatgp::DenseMatrix;

fn main() -> hatgp::Result<()> {
    // a 1D grid: 5 knots on [0, 4], spacing 1
    let grid = make_knot_grid(&[(0.0, 4.0)], &[5])?;
    println!("knots: {:?}", grid.axes()[0].knots());
    println!("hat at its knot {}, half way {}, one spacing away {}", hat_eval(2.0, 2.0, 1.0), hat_eval(2.5, 2.0, 1.0), hat_eval(3.0, 2.0, 1.0));

    let x = DenseMatrix::column(&[0.0, 1.25, 2.5, 4.0, 4.5]);
    let phi = design_matrix(&x, &grid)?;
    for i in 0..x.rows() {
        let (cols, vals) = phi.matrix().row(i);
        println!("x = {:<4} -> columns {cols:?} values {vals:?}", x[(i, 0)]);
    }
    // 4.5 is outside the box: its row is empty and it is flagged
    println!("outside rows: {:?}", phi.outside_rows());

    // tensor-product grid in 2D, first dimension fastest; domain rounded outward
    let pts = DenseMatrix::from_rows(&[vec![-0.3, 0.2], vec![0.7, 1.6], vec![0.05, 0.95]])?;
    let bounds = domain_from_data(&pts, true)?;
    let grid2 = make_knot_grid(&bounds, &[3, 4])?;
    let phi2 = design_matrix(&pts, &grid2)?;
    println!("2D box {bounds:?}, {} basis functions", grid2.n_basis());
    for (i, s) in phi2.matrix().row_sums().iter().enumerate() {
        println!("row {i}: {} nonzeros, sum {s}", phi2.matrix().row(i).0.len());
    }
    Ok(())
}
