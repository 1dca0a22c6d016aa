//! Integer linear systems: solving `A z = c` over the integers.
//!
//! Column-style Hermite reduction with a tracked unimodular transform
//! produces a particular integer solution and a basis of the integer kernel,
//! or reports that no integer solution exists. Sizes here are tiny (the
//! equality planes of a region), so a dense exact reduction suffices.

use crate::scalar::{int, Int};
use num_traits::{Signed, Zero};

pub struct IntSolution {
    pub particular: Vec<Int>,
    pub kernel: Vec<Vec<Int>>,
}

/// Solves `A z = c` over `Z`. Returns `None` if the system has no integer
/// solution (including rational-infeasible systems).
pub fn solve_int_linear(a: &[Vec<Int>], c: &[Int]) -> Option<IntSolution> {
    let m = a.len();
    assert_eq!(c.len(), m);
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    for row in a {
        assert_eq!(row.len(), n);
    }
    // h = A * U with U unimodular, reduced so that each processed row has at
    // most one nonzero among the not-yet-pivoted columns.
    let mut h: Vec<Vec<Int>> = a.to_vec();
    let mut u: Vec<Vec<Int>> = (0..n)
        .map(|i| (0..n).map(|j| int((i == j) as i64)).collect())
        .collect();
    let col_op = |h: &mut Vec<Vec<Int>>, u: &mut Vec<Vec<Int>>, dst: usize, src: usize, q: &Int| {
        for row in h.iter_mut() {
            let d = &row[src] * q;
            row[dst] -= d;
        }
        for row in u.iter_mut() {
            let d = &row[src] * q;
            row[dst] -= d;
        }
    };
    let col_swap = |h: &mut Vec<Vec<Int>>, u: &mut Vec<Vec<Int>>, i: usize, j: usize| {
        for row in h.iter_mut() {
            row.swap(i, j);
        }
        for row in u.iter_mut() {
            row.swap(i, j);
        }
    };
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut col = 0usize;
    for row in 0..m {
        if col >= n {
            break;
        }
        // Euclidean elimination across columns col..n in this row.
        loop {
            let mut nz: Vec<usize> = (col..n).filter(|&j| !h[row][j].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            nz.sort_by(|&i, &j| h[row][i].abs().cmp(&h[row][j].abs()));
            let (small, big) = (nz[0], nz[1]);
            let q = &h[row][big] / &h[row][small];
            col_op(&mut h, &mut u, big, small, &q);
        }
        if let Some(j) = (col..n).find(|&j| !h[row][j].is_zero()) {
            if j != col {
                col_swap(&mut h, &mut u, col, j);
            }
            if h[row][col].is_negative() {
                for r in h.iter_mut() {
                    r[col] = -r[col].clone();
                }
                for r in u.iter_mut() {
                    r[col] = -r[col].clone();
                }
            }
            pivots.push((row, col));
            col += 1;
        }
    }
    // Forward-substitute H y = c over the pivot columns.
    let mut y = vec![int(0); n];
    for &(r, cidx) in &pivots {
        let mut acc = c[r].clone();
        for j in 0..cidx {
            acc -= &h[r][j] * &y[j];
        }
        let (q, rem) = num_integer::Integer::div_rem(&acc, &h[r][cidx]);
        if !rem.is_zero() {
            return None;
        }
        y[cidx] = q;
    }
    // Verify all rows (rows without pivots must vanish too).
    for r in 0..m {
        let mut acc = Int::zero();
        for j in 0..n {
            acc += &h[r][j] * &y[j];
        }
        if acc != c[r] {
            return None;
        }
    }
    let z: Vec<Int> = (0..n)
        .map(|i| {
            let mut acc = Int::zero();
            for j in 0..n {
                acc += &u[i][j] * &y[j];
            }
            acc
        })
        .collect();
    let kernel: Vec<Vec<Int>> = (col..n)
        .map(|j| (0..n).map(|i| u[i][j].clone()).collect())
        .collect();
    Some(IntSolution {
        particular: z,
        kernel,
    })
}
