// Re-derives the quadratic model shipped as `SHIFT_MODEL_COEFFS`.
//
// The shift-scenario generator scores absolute residuals of a fixed
// quadratic `theta_0 + theta_1 x + theta_2 x^2`. Those coefficients come
// from an ordinary least-squares fit to 100 training points drawn with
// `mu = 1`, `sigma = 0.5` and seed 0. Run with
//
// ```text
// cargo run --example fit_shift_model
// ```

use lal::simulate::{training_draw, ShiftScenario, SHIFT_MODEL_COEFFS};

/// Least-squares quadratic through `points` via the 3x3 normal equations.
pub fn fit_quadratic(points: &[(f64, f64)]) -> [f64; 3] {
    let mut a = [[0.0f64; 4]; 3];
    for &(x, y) in points {
        let basis = [1.0, x, x * x];
        for (row, &br) in a.iter_mut().zip(&basis) {
            for (cell, &bc) in row.iter_mut().zip(&basis) {
                *cell += br * bc;
            }
            row[3] += br * y;
        }
    }
    // Gaussian elimination with partial pivoting on the augmented matrix.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let pivot_row = a[col];
        for row in a.iter_mut().skip(col + 1) {
            let f = row[col] / pivot_row[col];
            for (cell, p) in row.iter_mut().zip(pivot_row).skip(col) {
                *cell -= f * p;
            }
        }
    }
    let mut theta = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|c| a[row][c] * theta[c]).sum();
        theta[row] = (a[row][3] - tail) / a[row][row];
    }
    theta
}

pub fn run() -> [f64; 3] {
    let points = training_draw(&ShiftScenario::reference(), 0, 100);
    let theta = fit_quadratic(&points);
    println!("fitted:  {:?}", theta);
    println!("shipped: {:?}", SHIFT_MODEL_COEFFS);
    theta
}

#[allow(dead_code)]
fn main() {
    run();
}
