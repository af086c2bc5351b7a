#![allow(dead_code)]

use wmmse_core::{ChannelEnsemble, Matrix, Problem};

pub const LAMBDA: [f64; 4] = [0.3565, 0.0732, 0.5910, 0.9102];

pub const NOISE: [[[f64; 3]; 3]; 4] = [
    [[3.0405, -2.1179, 2.1107], [-2.1179, 4.1238, -1.3414], [2.1107, -1.3414, 4.8199]],
    [[0.9221, 1.2047, 0.5731], [1.2047, 2.3851, -0.2188], [0.5731, -0.2188, 1.5767]],
    [[9.9708, 0.7749, -2.4323], [0.7749, 0.9252, -2.3907], [-2.4323, -2.3907, 6.3022]],
    [[1.2353, -1.1973, -1.1141], [-1.1973, 4.2225, 1.0695], [-1.1141, 1.0695, 1.6102]],
];

pub fn noise(j: usize) -> Matrix {
    Matrix::from_rows(&NOISE[j].iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn ensemble() -> ChannelEnsemble {
    ChannelEnsemble::from_pairs((0..4).map(|j| (noise(j), LAMBDA[j])).collect()).unwrap()
}

pub fn isotropic(variance: f64, epsilon: f64) -> Problem {
    Problem::from_parts(
        (0..4).map(|j| (noise(j), LAMBDA[j])).collect(),
        vec![0.0; 3],
        Matrix::scaled_identity(3, variance),
        epsilon,
    )
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
