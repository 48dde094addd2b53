#![allow(dead_code)]

//! Independent dense-matrix oracles. Nothing here calls the strided gate
//! kernels of the library.

use num_complex::Complex64;

pub type Matrix = Vec<Vec<Complex64>>;

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|r| (0..dim).map(|c| if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|r| (0..m).map(|c| (0..k).map(|i| a[r][i] * b[i][c]).sum()).collect())
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn rx(a: f64) -> Matrix {
    let (s, c) = (a / 2.0).sin_cos();
    vec![
        vec![Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        vec![Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ]
}

pub fn ry(a: f64) -> Matrix {
    let (s, c) = (a / 2.0).sin_cos();
    vec![
        vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

pub fn rz(a: f64) -> Matrix {
    vec![
        vec![Complex64::from_polar(1.0, -a / 2.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, a / 2.0)],
    ]
}

/// `gate` on `qubit` of `n` (qubit 0 leftmost in the Kronecker product).
pub fn lift(gate: &Matrix, qubit: usize, n: usize) -> Matrix {
    let id = identity(2);
    let mut out = vec![vec![Complex64::new(1.0, 0.0)]];
    for q in 0..n {
        out = kron(&out, if q == qubit { gate } else { &id });
    }
    out
}

/// Permutation matrix of CNOT(control, target) on `n` qubits, built from
/// the projector decomposition `|0><0| (x) I + |1><1| (x) X`.
pub fn cnot(control: usize, target: usize, n: usize) -> Matrix {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let p0 = vec![vec![one, zero], vec![zero, zero]];
    let p1 = vec![vec![zero, zero], vec![zero, one]];
    let x = vec![vec![zero, one], vec![one, zero]];
    let id = identity(2);
    let mut a = vec![vec![one]];
    let mut b = vec![vec![one]];
    for q in 0..n {
        let (fa, fb) = if q == control {
            (&p0, &p1)
        } else if q == target {
            (&id, &x)
        } else {
            (&id, &id)
        };
        a = kron(&a, fa);
        b = kron(&b, fb);
    }
    a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(p, q)| p + q).collect()).collect()
}

/// Full circuit unitary for chain/ring entanglers, assembled as a product of
/// `2^n x 2^n` matrices.
pub fn circuit_unitary(n: usize, layers: usize, ring: bool, params: &[f64], x: f64) -> Matrix {
    let dim = 1 << n;
    let mut u = identity(dim);
    for q in 0..n {
        u = matmul(&lift(&rx(x), q, n), &u);
    }
    for l in 0..layers {
        for q in 0..n {
            let base = (l * n + q) * 3;
            let rot = matmul(&rz(params[base + 2]), &matmul(&ry(params[base + 1]), &rz(params[base])));
            u = matmul(&lift(&rot, q, n), &u);
        }
        for j in 0..n.saturating_sub(1) {
            u = matmul(&cnot(j, j + 1, n), &u);
        }
        if ring && n > 2 {
            u = matmul(&cnot(n - 1, 0, n), &u);
        }
    }
    u
}

/// Probabilities of `U |0...0>`.
pub fn oracle_probabilities(u: &Matrix) -> Vec<f64> {
    u.iter().map(|row| row[0].norm_sqr()).collect()
}
