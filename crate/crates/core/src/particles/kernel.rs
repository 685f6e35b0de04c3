//! The M4′ remeshing kernel and its tensor-product stencils.

use crate::grid::GridSpec;

/// M4′ kernel: `1 − 5x²/2 + 3|x|³/2` on `|x| ≤ 1`, `½(2−|x|)²(1−|x|)` on
/// `1 < |x| ≤ 2`, zero beyond. Interpolating (`W(0)=1`, `W(±1)=W(±2)=0`)
/// and exact for polynomials up to degree two.
#[inline]
pub fn m4_prime(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0 - 2.5 * a * a + 1.5 * a * a * a
    } else if a <= 2.0 {
        0.5 * (2.0 - a) * (2.0 - a) * (1.0 - a)
    } else {
        0.0
    }
}

/// Weights on the nodes `base−1 .. base+2` for a point at `base + t`,
/// `t ∈ [0, 1)`.
#[inline]
pub fn m4_weights(t: f64) -> [f64; 4] {
    [m4_prime(1.0 + t), m4_prime(t), m4_prime(1.0 - t), m4_prime(2.0 - t)]
}

/// Precomputed node offsets and weights for one sample position. Nodes that
/// fall outside a Dirichlet axis carry weight 0.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stencil {
    off: [[usize; 4]; 3],
    w: [[f64; 4]; 3],
    len: [usize; 3],
}

impl Stencil {
    pub(crate) fn new(spec: &GridSpec, p: &[f64; 3]) -> Stencil {
        let mut st = Stencil {
            off: [[0; 4]; 3],
            w: [[0.0; 4]; 3],
            len: [1; 3],
        };
        st.w[2][0] = 1.0;
        st.w[1][0] = 1.0;
        let n = spec.n();
        let strides = spec.strides();
        let origin = spec.origin();
        let inv_h = 1.0 / spec.h();
        for a in 0..spec.dim() {
            let s = (p[a] - origin[a]) * inv_h;
            let base = s.floor();
            let w = m4_weights(s - base);
            let base = base as isize;
            let na = n[a] as isize;
            let periodic = spec.is_periodic(a);
            st.len[a] = 4;
            for m in 0..4 {
                let node = base - 1 + m as isize;
                let node = if periodic {
                    node.rem_euclid(na)
                } else if (0..na).contains(&node) {
                    node
                } else {
                    st.w[a][m] = 0.0;
                    st.off[a][m] = 0;
                    continue;
                };
                st.w[a][m] = w[m];
                st.off[a][m] = node as usize * strides[a];
            }
        }
        st
    }

    #[inline]
    pub(crate) fn gather(&self, data: &[f64]) -> f64 {
        let mut acc = 0.0;
        for kz in 0..self.len[2] {
            let (oz, wz) = (self.off[2][kz], self.w[2][kz]);
            for ky in 0..self.len[1] {
                let (oy, wy) = (oz + self.off[1][ky], wz * self.w[1][ky]);
                let mut row = 0.0;
                for kx in 0..4 {
                    row += self.w[0][kx] * data[oy + self.off[0][kx]];
                }
                acc += wy * row;
            }
        }
        acc
    }

    #[inline]
    pub(crate) fn scatter(&self, data: &mut [f64], value: f64) {
        for kz in 0..self.len[2] {
            let (oz, wz) = (self.off[2][kz], self.w[2][kz]);
            for ky in 0..self.len[1] {
                let (oy, wy) = (oz + self.off[1][ky], wz * self.w[1][ky] * value);
                for kx in 0..4 {
                    data[oy + self.off[0][kx]] += wy * self.w[0][kx];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn interpolating_at_integers() {
        assert_eq!(m4_prime(0.0), 1.0);
        for x in [-2.0, -1.0, 1.0, 2.0, 2.5, -3.0] {
            assert_eq!(m4_prime(x), 0.0);
        }
    }

    #[test]
    fn midpoint_weights() {
        let w = m4_weights(0.5);
        let expected = [-0.0625, 0.5625, 0.5625, -0.0625];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_and_vanishing_moments() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..1000 {
            let t: f64 = rng.gen_range(0.0..1.0);
            let w = m4_weights(t);
            // Node offsets from the sample point: -1-t, -t, 1-t, 2-t.
            let d = [-1.0 - t, -t, 1.0 - t, 2.0 - t];
            let m0: f64 = w.iter().sum();
            let m1: f64 = w.iter().zip(d).map(|(w, d)| w * d).sum();
            let m2: f64 = w.iter().zip(d).map(|(w, d)| w * d * d).sum();
            assert!((m0 - 1.0).abs() < 1e-12);
            assert!(m1.abs() < 1e-12);
            assert!(m2.abs() < 1e-12);
        }
    }
}
