//! Reference networks and trajectories used by tests and the
//! `fixtures` command.

use crate::netmodel::FinancialNetwork;
use crate::numerics::DenseMatrix;

/// Two organizations holding half of each other.
pub fn mutual_pair() -> FinancialNetwork {
    FinancialNetwork::new(
        DenseMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap(),
        DenseMatrix::from_rows(&[vec![0.5, 0.25], vec![0.25, 0.5]]).unwrap(),
        vec![4.0; 2],
        vec![1.0; 2],
        vec![5.0; 2],
    )
    .unwrap()
}

/// Four organizations on a directed ring with 0.8 cross-holdings; admits a period-8 orbit.
pub fn ring4() -> FinancialNetwork {
    let n = 4;
    let c = DenseMatrix::from_fn(n, n, |i, j| if j == (i + n - 1) % n { 0.8 } else { 0.0 });
    FinancialNetwork::new(
        c,
        DenseMatrix::identity(n).scale(0.5),
        vec![5.0; n],
        vec![2.0; n],
        vec![7.5; n],
    )
    .unwrap()
}

/// Uniform cross-holdings `C = (𝟙𝟙ᵀ − I)/(n+2)` with `V̲ = 0.5𝟙`, `p = 𝟙`, `B = 0.4 I`
/// and the asset matrix `d`.
pub fn uniform_with_assets(n: usize, d: DenseMatrix) -> FinancialNetwork {
    let w = 1.0 / (n as f64 + 2.0);
    let c = DenseMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { w });
    FinancialNetwork::new(c, d, vec![1.0; n], vec![0.4; n], vec![0.5; n]).unwrap()
}

/// Ten-organization uniform network with `D = 0.5 I`.
pub fn uniform10() -> FinancialNetwork {
    uniform_with_assets(10, DenseMatrix::identity(10).scale(0.5))
}

/// Reference states `x(0)..x(7)` of the period-8 orbit of [`ring4`] (four decimals).
pub const PERIOD8_ORBIT: [[f64; 4]; 8] = [
    [0.6754, -1.3678, -0.6754, 1.3678],
    [2.0942, -0.4597, -2.0942, 0.4597],
    [1.3678, 0.6754, -1.3678, -0.6754],
    [0.4597, 2.0942, -0.4597, -2.0942],
    [-0.6754, 1.3678, 0.6754, -1.3678],
    [-2.0942, 0.4597, 2.0942, -0.4597],
    [-1.3678, -0.6754, 1.3678, 0.6754],
    [-0.4597, -2.0942, 0.4597, 2.0942],
];

/// Reference equilibrium parameters of [`ring4`].
pub const RING_ALPHA: f64 = 0.1220;
pub const RING_GAMMA: f64 = 1.0976;
pub const RING_DELTA: f64 = 0.5556;

/// The eight reference equilibria of [`ring4`] in offset coordinates.
pub fn ring_equilibria() -> Vec<[f64; 4]> {
    let (a, g, d) = (RING_ALPHA, RING_GAMMA, RING_DELTA);
    let base = [[5.0, 5.0, 5.0, 5.0], [a, g, -a, -g], [d, -d, d, -d], [g, -a, -g, a]];
    base.iter().flat_map(|v| [*v, v.map(|x| -x)]).collect()
}

/// Equilibria of [`mutual_pair`] in equity coordinates, one per quadrant `k = 0..3`.
pub const PAIR_EQUITY_EQUILIBRIA: [[f64; 2]; 4] = [
    [6.0, 6.0],
    [16.0 / 3.0, 14.0 / 3.0],
    [14.0 / 3.0, 16.0 / 3.0],
    [4.0, 4.0],
];

/// Reference sample state for the minimal-injection problem (`n = 10`).
pub const INJECTION_SAMPLE_X0: [f64; 10] = [
    -0.2943, -1.0177, -0.0024, 0.4985, -0.0982, 0.0954, -0.0425, 0.4426, -0.7542, -1.3096,
];

/// Reference minimal injection for [`INJECTION_SAMPLE_X0`].
pub const INJECTION_SAMPLE_V: [f64; 10] = [
    0.2943, 1.0177, 0.0024, -0.4985, 0.0982, -0.0954, 0.0425, 5.5322, 0.7542, 5.1135,
];

/// Zero-based components of [`INJECTION_SAMPLE_V`] that are plain sign flips of `x(0)`.
pub const INJECTION_SAMPLE_FLIPS: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 8];
