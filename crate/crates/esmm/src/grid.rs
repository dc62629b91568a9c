//! Structured index space with ghost layers.
//!
//! Arrays are stored flat with direction 0 fastest. Inactive directions
//! (beyond the problem dimension) have extent 1 and no ghosts. Node indices
//! are signed and relative to the first interior node.

/// Ghost layers stored around the interior in every active direction.
/// Coordinates need twice the stencil half-width for nested metric differences.
pub const GHOST: usize = 6;
/// Ghost layers on which states, metrics and velocities are required.
pub const NG: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: [usize; 3],
    pub g: [usize; 3],
    pub ext: [usize; 3],
    pub stride: [usize; 3],
    pub len: usize,
}

impl Grid {
    pub fn new(dim: usize, n: [usize; 3]) -> Self {
        assert!((1..=3).contains(&dim));
        let mut nn = [1usize; 3];
        let mut g = [0usize; 3];
        for k in 0..dim {
            nn[k] = n[k];
            g[k] = GHOST;
        }
        let ext = [nn[0] + 2 * g[0], nn[1] + 2 * g[1], nn[2] + 2 * g[2]];
        let stride = [1, ext[0], ext[0] * ext[1]];
        Grid { dim, n: nn, g, ext, stride, len: ext[0] * ext[1] * ext[2] }
    }

    #[inline]
    pub fn idx(&self, i: [isize; 3]) -> usize {
        let mut f = 0usize;
        for k in 0..3 {
            f += (i[k] + self.g[k] as isize) as usize * self.stride[k];
        }
        f
    }

    /// Signed node index of a flat offset.
    #[inline]
    pub fn unflatten(&self, f: usize) -> [isize; 3] {
        let i2 = f / self.stride[2];
        let r = f % self.stride[2];
        let i1 = r / self.stride[1];
        let i0 = r % self.stride[1];
        [i0 as isize - self.g[0] as isize, i1 as isize - self.g[1] as isize, i2 as isize - self.g[2] as isize]
    }

    pub fn interior_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Index range `[lo, hi)` extended by `w` layers in active directions.
    pub fn range(&self, w: usize) -> [(isize, isize); 3] {
        let mut r = [(0isize, 1isize); 3];
        for k in 0..self.dim {
            let w = w.min(self.g[k]) as isize;
            r[k] = (-w, self.n[k] as isize + w);
        }
        r
    }

    /// Flat offsets of all nodes in a box, direction 0 fastest.
    pub fn box_indices(&self, r: [(isize, isize); 3]) -> Vec<usize> {
        let mut out = Vec::with_capacity(((r[0].1 - r[0].0) * (r[1].1 - r[1].0) * (r[2].1 - r[2].0)) as usize);
        for i2 in r[2].0..r[2].1 {
            for i1 in r[1].0..r[1].1 {
                for i0 in r[0].0..r[0].1 {
                    out.push(self.idx([i0, i1, i2]));
                }
            }
        }
        out
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        self.box_indices(self.range(0))
    }

    /// Starting flat offsets of all lines along `dir`, spanning the interior
    /// of the other directions; each line starts at signed index `-w`.
    pub fn line_starts(&self, dir: usize, w: usize) -> Vec<usize> {
        let mut r = self.range(0);
        let w = w.min(self.g[dir]) as isize;
        r[dir] = (-w, -w + 1);
        self.box_indices(r)
    }

    pub fn is_active(&self, k: usize) -> bool {
        k < self.dim
    }

    /// Copy interior values into the ghost layers of periodic directions.
    pub fn wrap_periodic<T: Copy>(&self, periodic: &[bool; 3], field: &mut [T]) {
        for dir in 0..self.dim {
            if !periodic[dir] {
                continue;
            }
            let nk = self.n[dir] as isize;
            let gk = self.g[dir] as isize;
            let mut r = self.range(0);
            for (k, rk) in r.iter_mut().enumerate().take(self.dim) {
                if k != dir {
                    *rk = (-(self.g[k] as isize), self.n[k] as isize + self.g[k] as isize);
                }
            }
            r[dir] = (0, 1);
            let st = self.stride[dir] as isize;
            for base in self.box_indices(r) {
                let at = |i: isize| (base as isize + i * st) as usize;
                for i in 1..=gk {
                    field[at(-i)] = field[at(nk - i)];
                    field[at(nk - 1 + i)] = field[at(i - 1)];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(2, [5, 4, 9]);
        assert_eq!(g.n, [5, 4, 1]);
        assert_eq!(g.len, 17 * 16);
        for f in 0..g.len {
            assert_eq!(g.idx(g.unflatten(f)), f);
        }
        assert_eq!(g.interior_indices().len(), 20);
        assert_eq!(g.line_starts(1, 3).len(), 5);
    }
}
