//! Schur complement assembly and its block-sparse Cholesky factorization.
//!
//! The Schur matrix `M_ij = A_i • (X A_j S⁻¹)` couples two constraints only
//! when their matrices share a block. Constraints with identical block
//! footprints are grouped, groups are ordered by minimum degree, and the
//! matrix is stored as dense tiles of at most [`TILE`] rows over the filled
//! group pattern. Structurally zero tiles are never touched.
//!
//! Within a block, constraint matrices that are scalar multiples of one
//! another share one "slice", so the per-block kernel is computed once per
//! distinct slice pair.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::problem::SdpProblem;

pub(crate) const TILE: usize = 64;

struct BlockTerms {
    dim: usize,
    /// Upper-triangle entries per distinct slice.
    slices: Vec<Vec<(usize, usize, f64)>>,
    /// `(var, slice, coefficient)`: `A_var` restricted to this block equals
    /// `coefficient * slices[slice]`.
    members: Vec<(usize, usize, f64)>,
}

pub(crate) struct SchurLayout {
    m: usize,
    blocks: Vec<BlockTerms>,
    pos: Vec<usize>,
    tile_start: Vec<usize>,
    pattern: Vec<bool>,
}

/// Lower tiles of a symmetric matrix in the layout's permuted order.
#[derive(Clone)]
pub(crate) struct TiledSym {
    tiles: Vec<Option<DMatrix<f64>>>,
}

pub(crate) struct SchurFactor {
    l: Vec<Option<DMatrix<f64>>>,
    diag_inv: Vec<DMatrix<f64>>,
}

/// Factorization failure at a permuted position.
pub(crate) struct NotPositive {
    pub position: usize,
}

impl SchurLayout {
    pub fn new(problem: &SdpProblem) -> Self {
        let m = problem.num_constraints();
        let nb = problem.block_dims().len();
        let mut blocks: Vec<BlockTerms> = problem
            .block_dims()
            .iter()
            .map(|&dim| BlockTerms {
                dim,
                slices: Vec::new(),
                members: Vec::new(),
            })
            .collect();
        let mut keys: Vec<HashMap<Vec<(usize, usize, u64)>, usize>> = vec![HashMap::new(); nb];

        for (var, c) in problem.constraints().iter().enumerate() {
            for (b, part) in &c.parts {
                let mut entries = part.entries().to_vec();
                entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
                let scale = entries[0].2;
                let normalized: Vec<(usize, usize, f64)> = entries
                    .iter()
                    .map(|&(r, cc, v)| (r, cc, v / scale))
                    .collect();
                let key: Vec<(usize, usize, u64)> = normalized
                    .iter()
                    .map(|&(r, cc, v)| (r, cc, (v + 0.0).to_bits()))
                    .collect();
                let bt = &mut blocks[*b];
                let slice = *keys[*b].entry(key).or_insert_with(|| {
                    bt.slices.push(normalized);
                    bt.slices.len() - 1
                });
                bt.members.push((var, slice, scale));
            }
        }

        // Group constraints by the set of blocks they touch.
        let mut group_of_sig: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut group_vars: Vec<Vec<usize>> = Vec::new();
        let mut group_sig: Vec<Vec<usize>> = Vec::new();
        for (var, c) in problem.constraints().iter().enumerate() {
            let sig: Vec<usize> = c.parts.iter().map(|p| p.0).collect();
            let g = *group_of_sig.entry(sig.clone()).or_insert_with(|| {
                group_vars.push(Vec::new());
                group_sig.push(sig);
                group_vars.len() - 1
            });
            group_vars[g].push(var);
        }
        let ng = group_vars.len();
        let mut block_groups: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for (g, sig) in group_sig.iter().enumerate() {
            for &b in sig {
                block_groups[b].push(g);
            }
        }
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ng];
        for gs in &block_groups {
            for &a in gs {
                for &b in gs {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
        }

        // Minimum-degree elimination over groups, weighted by group size.
        let sizes: Vec<usize> = group_vars.iter().map(Vec::len).collect();
        let mut eliminated = vec![false; ng];
        let mut order = Vec::with_capacity(ng);
        for _ in 0..ng {
            let g = (0..ng)
                .filter(|&g| !eliminated[g])
                .min_by_key(|&g| {
                    let deg: usize = adj[g]
                        .iter()
                        .filter(|&&h| !eliminated[h])
                        .map(|&h| sizes[h])
                        .sum();
                    (deg, g)
                })
                .expect("at least one group left");
            let live: Vec<usize> = adj[g].iter().copied().filter(|&h| !eliminated[h]).collect();
            for &a in &live {
                for &b in &live {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
            eliminated[g] = true;
            order.push(g);
        }

        let mut pos = vec![0; m];
        let mut tile_start = vec![0];
        let mut tile_group = Vec::new();
        let mut next = 0;
        for &g in &order {
            for chunk in group_vars[g].chunks(TILE) {
                for &v in chunk {
                    pos[v] = next;
                    next += 1;
                }
                tile_start.push(next);
                tile_group.push(g);
            }
        }
        let nt = tile_group.len();
        let mut pattern = vec![false; nt * nt];
        for t in 0..nt {
            for u in 0..=t {
                let (gt, gu) = (tile_group[t], tile_group[u]);
                pattern[t * nt + u] = gt == gu || adj[gt].contains(&gu);
            }
        }

        Self {
            m,
            blocks,
            pos,
            tile_start,
            pattern,
        }
    }

    pub fn num_tiles(&self) -> usize {
        self.tile_start.len() - 1
    }

    fn tile_of(&self, p: usize) -> usize {
        self.tile_start.partition_point(|&s| s <= p) - 1
    }

    /// Permuted position back to the constraint index.
    pub fn var_at(&self, position: usize) -> usize {
        self.pos
            .iter()
            .position(|&p| p == position)
            .unwrap_or(position)
    }

    /// `A(Y)` for dense symmetric blocks `Y`.
    pub fn apply(&self, y: &[DMatrix<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (bt, yb) in self.blocks.iter().zip(y) {
            let vals: Vec<f64> = bt.slices.iter().map(|s| sym_inner(s, yb)).collect();
            for &(var, s, c) in &bt.members {
                out[var] += c * vals[s];
            }
        }
        out
    }

    /// `Σ y_i A_i` blockwise.
    pub fn adjoint(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|bt| {
                let mut w = vec![0.0; bt.slices.len()];
                for &(var, s, c) in &bt.members {
                    w[s] += c * y[var];
                }
                let mut out = DMatrix::zeros(bt.dim, bt.dim);
                for (s, &ws) in bt.slices.iter().zip(&w) {
                    if ws != 0.0 {
                        for &(r, c, v) in s {
                            out[(r, c)] += ws * v;
                            if r != c {
                                out[(c, r)] += ws * v;
                            }
                        }
                    }
                }
                out
            })
            .collect()
    }

    fn empty_tiles(&self) -> TiledSym {
        let nt = self.num_tiles();
        let mut tiles = vec![None; nt * nt];
        for t in 0..nt {
            for u in 0..=t {
                if self.pattern[t * nt + u] {
                    let rows = self.tile_start[t + 1] - self.tile_start[t];
                    let cols = self.tile_start[u + 1] - self.tile_start[u];
                    tiles[t * nt + u] = Some(DMatrix::zeros(rows, cols));
                }
            }
        }
        TiledSym { tiles }
    }

    /// Assembles `M_ij = A_i • (X A_j Z)` for symmetric positive definite
    /// blocks `X` and `Z`.
    pub fn assemble(&self, x: &[DMatrix<f64>], z: &[DMatrix<f64>]) -> TiledSym {
        let nt = self.num_tiles();
        let mut out = self.empty_tiles();
        let mut g = Vec::new();
        let mut kernel = Vec::new();
        for (b, bt) in self.blocks.iter().enumerate() {
            if bt.members.is_empty() {
                continue;
            }
            let n = bt.dim;
            let ns = bt.slices.len();
            kernel.clear();
            kernel.resize(ns * ns, 0.0);
            g.resize(n * n, 0.0);
            let xs = x[b].as_slice();
            let zs = z[b].as_slice();
            for l in 0..ns {
                g.iter_mut().for_each(|v| *v = 0.0);
                for &(r, s, f) in &bt.slices[l] {
                    add_outer(
                        &mut g,
                        n,
                        f,
                        &xs[r * n..(r + 1) * n],
                        &zs[s * n..(s + 1) * n],
                    );
                    if r != s {
                        add_outer(
                            &mut g,
                            n,
                            f,
                            &xs[s * n..(s + 1) * n],
                            &zs[r * n..(r + 1) * n],
                        );
                    }
                }
                // g[q + p n] = (X F_l Z)[q, p]
                for k in l..ns {
                    let mut acc = 0.0;
                    for &(r, c, v) in &bt.slices[k] {
                        acc += if r == c {
                            v * g[r + r * n]
                        } else {
                            v * (g[r + c * n] + g[c + r * n])
                        };
                    }
                    kernel[k * ns + l] = acc;
                }
            }
            let placed: Vec<(usize, usize, usize, f64)> = bt
                .members
                .iter()
                .map(|&(var, s, c)| {
                    let p = self.pos[var];
                    let t = self.tile_of(p);
                    (t, p - self.tile_start[t], s, c)
                })
                .collect();
            for (a, &(ta, ra, sa, ca)) in placed.iter().enumerate() {
                for &(tb, rb, sb, cb) in &placed[..=a] {
                    let kv = if sa >= sb {
                        kernel[sa * ns + sb]
                    } else {
                        kernel[sb * ns + sa]
                    };
                    let v = ca * cb * kv;
                    let (t, u, r, c) = if (ta, ra) >= (tb, rb) {
                        (ta, tb, ra, rb)
                    } else {
                        (tb, ta, rb, ra)
                    };
                    let tile = out.tiles[t * nt + u].as_mut().expect("tile in pattern");
                    tile[(r, c)] += v;
                }
            }
        }
        // Mirror diagonal tiles so they are full symmetric.
        for t in 0..nt {
            let d = out.tiles[t * nt + t].as_mut().expect("diagonal tile");
            for c in 0..d.ncols() {
                for r in 0..c {
                    d[(r, c)] = d[(c, r)];
                }
            }
        }
        out
    }

    pub fn max_diagonal(&self, m: &TiledSym) -> f64 {
        let nt = self.num_tiles();
        (0..nt)
            .map(|t| {
                let d = m.tiles[t * nt + t].as_ref().unwrap();
                d.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Block Cholesky of `M + shift·diag(M)`. Pivots at or below
    /// `min_pivot` fail.
    pub fn factor(
        &self,
        m: &TiledSym,
        shift: f64,
        min_pivot: f64,
    ) -> Result<SchurFactor, NotPositive> {
        let nt = self.num_tiles();
        let mut tiles = m.tiles.clone();
        if shift != 0.0 {
            for t in 0..nt {
                let d = tiles[t * nt + t].as_mut().unwrap();
                for i in 0..d.nrows() {
                    d[(i, i)] *= 1.0 + shift;
                }
            }
        }
        let mut diag_inv = Vec::with_capacity(nt);
        for k in 0..nt {
            let dk = tiles[k * nt + k].as_mut().unwrap();
            if let Err(i) = cholesky_in_place(dk, min_pivot) {
                return Err(NotPositive {
                    position: self.tile_start[k] + i,
                });
            }
            let linv = lower_inverse(dk);
            for i in k + 1..nt {
                if let Some(t) = tiles[i * nt + k].as_mut() {
                    let mut out = DMatrix::zeros(t.nrows(), t.ncols());
                    gemm(1.0, t, false, &linv, true, 0.0, &mut out);
                    *t = out;
                }
            }
            for i in k + 1..nt {
                if tiles[i * nt + k].is_none() {
                    continue;
                }
                for j in k + 1..=i {
                    if tiles[j * nt + k].is_none() {
                        continue;
                    }
                    let mut target = tiles[i * nt + j].take().expect("fill tile in pattern");
                    {
                        let a = tiles[i * nt + k].as_ref().unwrap();
                        let b = tiles[j * nt + k].as_ref().unwrap();
                        gemm(-1.0, a, false, b, true, 1.0, &mut target);
                    }
                    tiles[i * nt + j] = Some(target);
                }
            }
            diag_inv.push(linv);
        }
        Ok(SchurFactor { l: tiles, diag_inv })
    }

    /// Solves `L Lᵀ x = rhs` (rhs in constraint order).
    pub fn solve(&self, f: &SchurFactor, rhs: &[f64]) -> Vec<f64> {
        let nt = self.num_tiles();
        let mut v = vec![0.0; self.m];
        for (var, &p) in self.pos.iter().enumerate() {
            v[p] = rhs[var];
        }
        let seg = |t: usize| self.tile_start[t]..self.tile_start[t + 1];
        for t in 0..nt {
            let mut acc = DVector::from_column_slice(&v[seg(t)]);
            for u in 0..t {
                if let Some(l) = f.l[t * nt + u].as_ref() {
                    let xu = DVector::from_column_slice(&v[seg(u)]);
                    acc.gemv(-1.0, l, &xu, 1.0);
                }
            }
            let z = &f.diag_inv[t] * acc;
            v[seg(t)].copy_from_slice(z.as_slice());
        }
        for t in (0..nt).rev() {
            let mut acc = DVector::from_column_slice(&v[seg(t)]);
            for w in t + 1..nt {
                if let Some(l) = f.l[w * nt + t].as_ref() {
                    let xw = DVector::from_column_slice(&v[seg(w)]);
                    acc.gemv_tr(-1.0, l, &xw, 1.0);
                }
            }
            let x = f.diag_inv[t].tr_mul(&acc);
            v[seg(t)].copy_from_slice(x.as_slice());
        }
        let mut out = vec![0.0; self.m];
        for (var, &p) in self.pos.iter().enumerate() {
            out[var] = v[p];
        }
        out
    }

    /// `M x` with `M` unfactored (constraint order).
    pub fn multiply(&self, m: &TiledSym, x: &[f64]) -> Vec<f64> {
        let nt = self.num_tiles();
        let mut v = vec![0.0; self.m];
        for (var, &p) in self.pos.iter().enumerate() {
            v[p] = x[var];
        }
        let seg = |t: usize| self.tile_start[t]..self.tile_start[t + 1];
        let mut y = vec![0.0; self.m];
        for t in 0..nt {
            for u in 0..=t {
                if let Some(a) = m.tiles[t * nt + u].as_ref() {
                    let xu = DVector::from_column_slice(&v[seg(u)]);
                    let yt = a * &xu;
                    for (dst, s) in y[seg(t)].iter_mut().zip(yt.iter()) {
                        *dst += s;
                    }
                    if t != u {
                        let xt = DVector::from_column_slice(&v[seg(t)]);
                        let yu = a.tr_mul(&xt);
                        for (dst, s) in y[seg(u)].iter_mut().zip(yu.iter()) {
                            *dst += s;
                        }
                    }
                }
            }
        }
        let mut out = vec![0.0; self.m];
        for (var, &p) in self.pos.iter().enumerate() {
            out[var] = y[p];
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn to_dense(&self, m: &TiledSym) -> DMatrix<f64> {
        let n = self.m;
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.multiply(m, &e);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

fn sym_inner(entries: &[(usize, usize, f64)], y: &DMatrix<f64>) -> f64 {
    entries
        .iter()
        .map(|&(r, c, v)| {
            if r == c {
                v * y[(r, c)]
            } else {
                v * (y[(r, c)] + y[(c, r)])
            }
        })
        .sum()
}

/// `g[q + p n] += f · x[q] · z[p]`.
#[inline]
fn add_outer(g: &mut [f64], n: usize, f: f64, x: &[f64], z: &[f64]) {
    for (p, &zp) in z.iter().enumerate() {
        let coef = f * zp;
        if coef == 0.0 {
            continue;
        }
        let col = &mut g[p * n..(p + 1) * n];
        for (gq, &xq) in col.iter_mut().zip(x) {
            *gq += coef * xq;
        }
    }
}

/// In-place lower Cholesky (column-major); the strict upper part is zeroed.
/// Returns the failing local pivot index.
fn cholesky_in_place(a: &mut DMatrix<f64>, min_pivot: f64) -> Result<(), usize> {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if !(d > min_pivot) || !d.is_finite() {
            return Err(j);
        }
        let ljj = d.sqrt();
        a[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / ljj;
        }
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = s / l[(i, i)];
        }
    }
    inv
}

/// `c = alpha · op(a) · op(b) + beta · c` on column-major storage.
pub(crate) fn gemm(
    alpha: f64,
    a: &DMatrix<f64>,
    ta: bool,
    b: &DMatrix<f64>,
    tb: bool,
    beta: f64,
    c: &mut DMatrix<f64>,
) {
    let (m, k) = if ta {
        (a.ncols(), a.nrows())
    } else {
        (a.nrows(), a.ncols())
    };
    let n = if tb { b.nrows() } else { b.ncols() };
    assert_eq!(c.nrows(), m);
    assert_eq!(c.ncols(), n);
    assert_eq!(if tb { b.ncols() } else { b.nrows() }, k);
    let (rsa, csa) = if ta {
        (a.nrows() as isize, 1)
    } else {
        (1, a.nrows() as isize)
    };
    let (rsb, csb) = if tb {
        (b.nrows() as isize, 1)
    } else {
        (1, b.nrows() as isize)
    };
    let ldc = c.nrows() as isize;
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: strides describe the column-major buffers of `a`, `b` and `c`,
    // whose extents were checked above; `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            1,
            ldc,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Constraint, SdpProblem};

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| next());
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    /// Arrow-shaped problem: two groups with private blocks, each sharing
    /// one more block with a third group.
    fn arrow_problem() -> SdpProblem {
        let mut p = SdpProblem::new(vec![3, 3, 3, 3]).unwrap();
        for g in 0..2 {
            for (r, c) in [(0, 0), (0, 1), (1, 2), (2, 2)] {
                let mut k = Constraint::new(0.0);
                k.push(g, r, c, 1.0);
                k.push(2 + g, r, c, if g == 0 { 1.0 } else { -2.0 });
                p.add_constraint(k).unwrap();
            }
        }
        for (r, c) in [(0, 2), (1, 1)] {
            let mut k = Constraint::new(1.0);
            k.push(2, r, c, 1.5);
            k.push(3, r, c, -0.5);
            p.add_constraint(k).unwrap();
        }
        p
    }

    fn dense_schur(p: &SdpProblem, x: &[DMatrix<f64>], z: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = p.num_constraints();
        let dense: Vec<Vec<DMatrix<f64>>> = p
            .constraints()
            .iter()
            .map(|c| {
                p.block_dims()
                    .iter()
                    .enumerate()
                    .map(|(b, &d)| {
                        c.parts
                            .iter()
                            .find(|q| q.0 == b)
                            .map(|q| q.1.to_dense(d))
                            .unwrap_or_else(|| DMatrix::zeros(d, d))
                    })
                    .collect()
            })
            .collect();
        DMatrix::from_fn(m, m, |i, j| {
            (0..x.len())
                .map(|b| crate::problem::inner(&dense[i][b], &(&x[b] * &dense[j][b] * &z[b])))
                .sum()
        })
    }

    #[test]
    fn assembly_matches_dense_formula() {
        let p = arrow_problem();
        let layout = SchurLayout::new(&p);
        let x: Vec<_> = (0..4).map(|b| spd(3, b)).collect();
        let z: Vec<_> = (0..4).map(|b| spd(3, 10 + b)).collect();
        let tiled = layout.assemble(&x, &z);
        let got = layout.to_dense(&tiled);
        let want = dense_schur(&p, &x, &z);
        assert!((got - want).abs().max() < 1e-12);
    }

    #[test]
    fn factor_solves_the_assembled_system() {
        let p = arrow_problem();
        let layout = SchurLayout::new(&p);
        let x: Vec<_> = (0..4).map(|b| spd(3, 20 + b)).collect();
        let z: Vec<_> = (0..4).map(|b| spd(3, 30 + b)).collect();
        let m = layout.assemble(&x, &z);
        let f = layout.factor(&m, 0.0, 0.0).ok().unwrap();
        let rhs: Vec<f64> = (0..p.num_constraints()).map(|i| (i as f64).sin()).collect();
        let sol = layout.solve(&f, &rhs);
        let back = layout.multiply(&m, &sol);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn shared_block_group_is_eliminated_last() {
        let p = arrow_problem();
        let layout = SchurLayout::new(&p);
        // The two constraints living only in the shared block couple to every
        // group; minimum degree orders them after the private groups.
        assert!(layout.pos[8] >= 8 && layout.pos[9] >= 8);
        // Private groups do not couple to each other.
        assert_eq!(layout.num_tiles(), 3);
        assert!(!layout.pattern[3]);
    }

    #[test]
    fn gemm_transposes() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 2.0, 1.0, 0.0]);
        let mut c = DMatrix::zeros(2, 2);
        gemm(1.0, &a, false, &b, true, 0.0, &mut c);
        assert_eq!(c, &a * b.transpose());
        let mut d = DMatrix::zeros(3, 3);
        gemm(2.0, &a, true, &b, false, 0.0, &mut d);
        assert_eq!(d, a.transpose() * &b * 2.0);
    }
}
