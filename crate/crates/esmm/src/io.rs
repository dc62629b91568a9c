//! Output formats: field dumps (legacy VTK and the ESMM1 binary layout),
//! CSV tables, schlieren images and cut lines through curvilinear meshes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::adapt::MonitorVariable;
use crate::error::{Error, Result};
use crate::solver::{Solver, StepDiagnostics};
use crate::state::{PrimState, Vec3};

const MAGIC: &[u8; 5] = b"ESMM1";

/// Node data of one snapshot, interior nodes only, direction 0 fastest.
///
/// Coordinates are stored as the scalar fields `x1`, `x2`, `x3`; vector
/// quantities are split the same way (`v1`, `v2`, `v3`, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub dim: usize,
    pub n: [usize; 3],
    pub time: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl FieldDump {
    pub fn node_count(&self) -> usize {
        self.n.iter().product()
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    fn push(&mut self, name: &str, data: Vec<f64>) {
        self.fields.push((name.to_string(), data));
    }

    pub fn coords(&self, i: usize) -> Vec3 {
        let c = |name: &str| self.field(name).map_or(0.0, |v| v[i]);
        [c("x1"), c("x2"), c("x3")]
    }

    fn flat(&self, i: [usize; 3]) -> usize {
        i[0] + self.n[0] * (i[1] + self.n[1] * i[2])
    }

    /// Snapshot of the solver's current mesh and primitive state.
    pub fn from_solver(s: &Solver) -> Self {
        let g = s.grid();
        let mut n = [1; 3];
        n[..g.dim].copy_from_slice(&g.n[..g.dim]);
        let mut d = FieldDump { dim: g.dim, n, time: s.t, fields: Vec::new() };
        let nodes = s.interior();
        let pick = |f: &dyn Fn(usize) -> f64| nodes.iter().map(|&i| f(i)).collect::<Vec<f64>>();
        for c in 0..3 {
            d.push(&format!("x{}", c + 1), pick(&|i| s.mesh.x[i][c]));
        }
        d.push("rho", pick(&|i| s.prim[i].rho));
        for c in 0..3 {
            d.push(&format!("v{}", c + 1), pick(&|i| s.prim[i].v[c]));
        }
        d.push("p", pick(&|i| s.prim[i].p));
        for c in 0..3 {
            d.push(&format!("B{}", c + 1), pick(&|i| s.prim[i].b[c]));
        }
        d.push("J", pick(&|i| s.mesh.jac[i]));
        d.push("omega", pick(&|i| s.omega[i]));
        d
    }

    /// Primitive state at dump node `i`, using `gamma` for the closure.
    pub fn prim(&self, i: usize, gamma: f64) -> Option<PrimState> {
        let f = |name: &str| self.field(name).map(|v| v[i]);
        Some(PrimState::new(
            f("rho")?,
            [f("v1")?, f("v2")?, f("v3")?],
            f("p")?,
            [f("B1")?, f("B2")?, f("B3")?],
            gamma,
        ))
    }
}

fn vtk_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a legacy ASCII VTK structured grid. Field triples named `a1 a2 a3`
/// become one `VECTORS a` block; everything else is written as a scalar.
pub fn write_vtk(path: &Path, d: &FieldDump) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let npts = d.node_count();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "esmm t={}", vtk_float(d.time))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(w, "DIMENSIONS {} {} {}", d.n[0], d.n[1], d.n[2])?;
    writeln!(w, "POINTS {npts} double")?;
    for i in 0..npts {
        let x = d.coords(i);
        writeln!(w, "{} {} {}", vtk_float(x[0]), vtk_float(x[1]), vtk_float(x[2]))?;
    }
    writeln!(w, "POINT_DATA {npts}")?;
    let names: Vec<&str> = d.fields.iter().map(|(n, _)| n.as_str()).collect();
    let mut done = vec![false; names.len()];
    for (k, name) in names.iter().enumerate() {
        if done[k] || name.starts_with('x') && name.len() == 2 {
            continue;
        }
        let base = name.strip_suffix('1');
        let triple = base.and_then(|b| {
            let i2 = names.iter().position(|n| *n == format!("{b}2"))?;
            let i3 = names.iter().position(|n| *n == format!("{b}3"))?;
            Some((b, i2, i3))
        });
        match triple {
            Some((b, i2, i3)) => {
                done[i2] = true;
                done[i3] = true;
                writeln!(w, "VECTORS {b} double")?;
                let (a1, a2, a3) = (&d.fields[k].1, &d.fields[i2].1, &d.fields[i3].1);
                for i in 0..npts {
                    writeln!(w, "{} {} {}", vtk_float(a1[i]), vtk_float(a2[i]), vtk_float(a3[i]))?;
                }
            }
            None => {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in &d.fields[k].1 {
                    writeln!(w, "{}", vtk_float(*v))?;
                }
            }
        }
        done[k] = true;
    }
    w.flush()?;
    Ok(())
}

/// Binary dump: magic `ESMM1`, `u32` dimension, three `u64` node counts,
/// `f64` time, `u32` field count, then each name as `u32` byte length plus
/// UTF-8, then the field arrays in order. All numbers little-endian.
pub fn write_esmm1(path: &Path, d: &FieldDump) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(d.dim as u32).to_le_bytes())?;
    for n in d.n {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&d.time.to_le_bytes())?;
    w.write_all(&(d.fields.len() as u32).to_le_bytes())?;
    for (name, _) in &d.fields {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    for (name, data) in &d.fields {
        if data.len() != d.node_count() {
            return Err(Error::Format(format!("field {name} has {} values, expected {}", data.len(), d.node_count())));
        }
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated dump: {e}")))?;
    Ok(b)
}

pub fn read_esmm1(path: &Path) -> Result<FieldDump> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_array::<5>(&mut r)? != MAGIC {
        return Err(Error::Format("missing ESMM1 magic".into()));
    }
    let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("dimension {dim}")));
    }
    let mut n = [0usize; 3];
    for c in &mut n {
        *c = u64::from_le_bytes(read_array(&mut r)?) as usize;
    }
    let time = f64::from_le_bytes(read_array(&mut r)?);
    let nf = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut names = Vec::with_capacity(nf);
    for _ in 0..nf {
        let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut b = vec![0u8; len];
        r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated name: {e}")))?;
        names.push(String::from_utf8(b).map_err(|e| Error::Format(format!("field name: {e}")))?);
    }
    let count: usize = n.iter().product();
    let mut fields = Vec::with_capacity(nf);
    for name in names {
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        fields.push((name, data));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last field".into()));
    }
    Ok(FieldDump { dim, n, time, fields })
}

/// Write any serializable rows as CSV with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_time_series(path: &Path, series: &[StepDiagnostics]) -> Result<()> {
    write_csv(path, series)
}

/// Physical gradient of `sigma` at every dump node, from second-order index
/// differences (one-sided at the ends) mapped through the local Jacobian.
pub fn physical_gradient(d: &FieldDump, sigma: &[f64]) -> Vec<Vec3> {
    let dim = d.dim;
    let mut out = vec![[0.0; 3]; d.node_count()];
    for i2 in 0..d.n[2] {
        for i1 in 0..d.n[1] {
            for i0 in 0..d.n[0] {
                let idx = [i0, i1, i2];
                let f = d.flat(idx);
                // Rows: index direction k; columns: physical component.
                let mut a = Matrix3::<f64>::identity();
                let mut rhs = Vector3::<f64>::zeros();
                for k in 0..dim {
                    let (lo, hi) = if d.n[k] < 2 {
                        continue;
                    } else if idx[k] == 0 {
                        (0, 1)
                    } else if idx[k] == d.n[k] - 1 {
                        (idx[k] - 1, idx[k])
                    } else {
                        (idx[k] - 1, idx[k] + 1)
                    };
                    let mut il = idx;
                    let mut ih = idx;
                    il[k] = lo;
                    ih[k] = hi;
                    let (fl, fh) = (d.flat(il), d.flat(ih));
                    let span = (hi - lo) as f64;
                    let (xl, xh) = (d.coords(fl), d.coords(fh));
                    for j in 0..3 {
                        a[(k, j)] = if j < dim { (xh[j] - xl[j]) / span } else { 0.0 };
                    }
                    rhs[k] = (sigma[fh] - sigma[fl]) / span;
                }
                for j in dim..3 {
                    a[(j, j)] = 1.0;
                }
                if let Some(g) = a.lu().solve(&rhs) {
                    out[f] = [g[0], g[1], g[2]];
                }
            }
        }
    }
    out
}

/// Numerical schlieren image `exp(−k |∇σ| / max |∇σ|)`. A field with no
/// gradient anywhere maps to 1.
pub fn schlieren(d: &FieldDump, sigma: &[f64], k: f64) -> Vec<f64> {
    let mags: Vec<f64> = physical_gradient(d, sigma).iter().map(|g| (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return vec![1.0; mags.len()];
    }
    mags.iter().map(|m| (-k * m / max).exp()).collect()
}

/// Monitor-style variable evaluated at every dump node.
pub fn dump_variable(d: &FieldDump, var: MonitorVariable, gamma: f64) -> Option<Vec<f64>> {
    (0..d.node_count()).map(|i| d.prim(i, gamma).map(|w| var.eval(&w))).collect()
}

/// Samples along a straight physical segment.
#[derive(Clone, Debug, Default)]
pub struct CutLine {
    /// Arc-length parameter in `[0, 1]`.
    pub s: Vec<f64>,
    pub x: Vec<Vec3>,
    /// Field name and sampled values; NaN where the point is outside the mesh.
    pub values: Vec<(String, Vec<f64>)>,
}

impl CutLine {
    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["s".to_string(), "x1".into(), "x2".into(), "x3".into()];
        header.extend(self.values.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        let mut buf = ryu::Buffer::new();
        for i in 0..self.s.len() {
            let mut rec: Vec<String> = vec![buf.format(self.s[i]).to_string()];
            for c in 0..3 {
                rec.push(buf.format(self.x[i][c]).to_string());
            }
            for (_, v) in &self.values {
                rec.push(buf.format(v[i]).to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Multilinear weights of the point `x` inside the cell whose lowest corner
/// is `base`, or `None` when the point is outside that cell.
fn invert_cell(d: &FieldDump, base: [usize; 3], x: &Vec3) -> Option<Vec<(usize, f64)>> {
    let dim = d.dim;
    let corners: Vec<([usize; 3], [usize; 3])> = (0..1usize << dim)
        .map(|m| {
            let mut bits = [0usize; 3];
            let mut idx = base;
            for k in 0..dim {
                bits[k] = (m >> k) & 1;
                idx[k] += bits[k];
            }
            (bits, idx)
        })
        .collect();
    let pts: Vec<Vec3> = corners.iter().map(|(_, idx)| d.coords(d.flat(*idx))).collect();
    let weights = |s: &[f64; 3]| -> Vec<f64> {
        corners
            .iter()
            .map(|(b, _)| (0..dim).map(|k| if b[k] == 1 { s[k] } else { 1.0 - s[k] }).product())
            .collect()
    };
    let mut s = [0.5; 3];
    for _ in 0..30 {
        let w = weights(&s);
        let mut r = Vector3::<f64>::zeros();
        for (wi, p) in w.iter().zip(&pts) {
            for j in 0..dim {
                r[j] += wi * p[j];
            }
        }
        for j in 0..dim {
            r[j] -= x[j];
        }
        let mut jm = Matrix3::<f64>::identity();
        for k in 0..dim {
            for j in 0..dim {
                jm[(j, k)] = 0.0;
            }
            for ((b, _), p) in corners.iter().zip(&pts) {
                let dw: f64 = (0..dim)
                    .map(|q| {
                        if q == k {
                            if b[q] == 1 {
                                1.0
                            } else {
                                -1.0
                            }
                        } else if b[q] == 1 {
                            s[q]
                        } else {
                            1.0 - s[q]
                        }
                    })
                    .product();
                for j in 0..dim {
                    jm[(j, k)] += dw * p[j];
                }
            }
        }
        let ds = jm.lu().solve(&r)?;
        let mut step = 0.0f64;
        for k in 0..dim {
            s[k] -= ds[k];
            step = step.max(ds[k].abs());
        }
        if s.iter().take(dim).any(|v| !v.is_finite() || v.abs() > 10.0) {
            return None;
        }
        if step < 1e-14 {
            break;
        }
    }
    let tol = 1e-9;
    if s.iter().take(dim).all(|v| (-tol..=1.0 + tol).contains(v)) {
        let w = weights(&s.map(|v| v.clamp(0.0, 1.0)));
        Some(corners.iter().zip(w).map(|((_, idx), wi)| (d.flat(*idx), wi)).collect())
    } else {
        None
    }
}

/// Sample every non-coordinate field of `d` on `samples` equally spaced
/// points from `from` to `to`, by locating the containing cell and
/// inverting its multilinear map.
pub fn cut_line(d: &FieldDump, from: Vec3, to: Vec3, samples: usize) -> CutLine {
    let dim = d.dim;
    let mut cells = Vec::new();
    let cn: Vec<usize> = (0..3).map(|k| if k < dim { d.n[k].saturating_sub(1) } else { 1 }).collect();
    for c2 in 0..cn[2] {
        for c1 in 0..cn[1] {
            for c0 in 0..cn[0] {
                let base = [c0, c1, c2];
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for m in 0..1usize << dim {
                    let mut idx = base;
                    for k in 0..dim {
                        idx[k] += (m >> k) & 1;
                    }
                    let x = d.coords(d.flat(idx));
                    for j in 0..dim {
                        lo[j] = lo[j].min(x[j]);
                        hi[j] = hi[j].max(x[j]);
                    }
                }
                cells.push((base, lo, hi));
            }
        }
    }
    let names: Vec<String> = d.fields.iter().map(|(n, _)| n.clone()).filter(|n| !matches!(n.as_str(), "x1" | "x2" | "x3")).collect();
    let mut out = CutLine { values: names.iter().map(|n| (n.clone(), Vec::with_capacity(samples))).collect(), ..Default::default() };
    let samples = samples.max(2);
    for i in 0..samples {
        let s = i as f64 / (samples - 1) as f64;
        let x: Vec3 = std::array::from_fn(|j| from[j] + s * (to[j] - from[j]));
        let pad = 1e-12 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let hit = cells
            .iter()
            .filter(|(_, lo, hi)| (0..dim).all(|j| x[j] >= lo[j] - pad && x[j] <= hi[j] + pad))
            .find_map(|(base, _, _)| invert_cell(d, *base, &x));
        out.s.push(s);
        out.x.push(x);
        for (name, vals) in out.values.iter_mut() {
            let field = d.field(name).expect("listed above");
            vals.push(hit.as_ref().map_or(f64::NAN, |w| w.iter().map(|(f, wi)| wi * field[*f]).sum()));
        }
    }
    out
}

/// Largest excursion of a profile beyond its local data range, as a fraction
/// of the global range. The local range at a sample is the extent of the
/// 5-point median-filtered profile within ±3 samples, so monotone edges and
/// plateaus set the range while isolated spurious extrema do not.
pub fn overshoot_fraction(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 5 {
        return 0.0;
    }
    let (gmin, gmax) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = gmax - gmin;
    if !(range > 0.0) {
        return 0.0;
    }
    let med: Vec<f64> = (0..n)
        .map(|i| {
            // Truncated windows at the ends would clip monotone data.
            if i < 2 || i + 2 >= n {
                return values[i];
            }
            let mut w = values[i - 2..i + 3].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            w[w.len() / 2]
        })
        .collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        let lo = i.saturating_sub(3);
        let hi = (i + 4).min(n);
        let (mn, mx) = med[lo..hi].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let ex = (values[i] - mx).max(mn - values[i]).max(0.0);
        worst = worst.max(ex / range);
    }
    worst
}
