//! Binary container, Matrix Market and CSV matrix export.
//!
//! Container layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "MIPPDPG\0"
//! version  u32
//! kind     u32      0 empirical, 1 exact mean, 2 embedding, 3 distance
//! N M L d  u64 x 4
//! sections u32
//! per section: rows u64, cols u64, rows*cols f64 row-major
//! ```

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2};

use crate::binning::{IntensityKind, UnfoldedIntensity};
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"MIPPDPG\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainerKind {
    Empirical = 0,
    ExactMean = 1,
    Embedding = 2,
    Distance = 3,
}

impl ContainerKind {
    fn from_u32(v: u32) -> Result<Self> {
        Ok(match v {
            0 => Self::Empirical,
            1 => Self::ExactMean,
            2 => Self::Embedding,
            3 => Self::Distance,
            _ => return Err(Error::data(format!("unknown container kind {v}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: ContainerKind,
    pub n_nodes: u64,
    pub n_bins: u64,
    pub n_layers: u64,
    pub dim: u64,
    pub sections: Vec<Array2<f64>>,
}

pub fn write_container<W: Write>(mut w: W, c: &Container) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(c.kind as u32).to_le_bytes())?;
    for v in [c.n_nodes, c.n_bins, c.n_layers, c.dim] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(c.sections.len() as u32).to_le_bytes())?;
    for s in &c.sections {
        w.write_all(&(s.nrows() as u64).to_le_bytes())?;
        w.write_all(&(s.ncols() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(s.len() * 8);
        for x in s.iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::data("container is truncated")
    } else {
        Error::Io(e)
    }
}

pub fn read_container<R: Read>(mut r: R) -> Result<Container> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::data("not a mippdpg container (bad magic)"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::data(format!("unsupported container version {version}")));
    }
    let kind = ContainerKind::from_u32(read_u32(&mut r)?)?;
    let n_nodes = read_u64(&mut r)?;
    let n_bins = read_u64(&mut r)?;
    let n_layers = read_u64(&mut r)?;
    let dim = read_u64(&mut r)?;
    let n_sections = read_u32(&mut r)?;
    let mut sections = Vec::with_capacity(n_sections as usize);
    for _ in 0..n_sections {
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::data("section size overflows"))?;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(truncated)?;
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        sections.push(Array2::from_shape_vec((rows, cols), vals).map_err(|e| Error::data(e.to_string()))?);
    }
    Ok(Container {
        kind,
        n_nodes,
        n_bins,
        n_layers,
        dim,
        sections,
    })
}

fn to_f64<T: Scalar>(a: ArrayView2<'_, T>) -> Array2<f64> {
    a.mapv(|x| x.as_f64())
}

pub fn unfolded_to_container<T: Scalar>(u: &UnfoldedIntensity<T>) -> Container {
    Container {
        kind: match u.kind() {
            IntensityKind::Empirical => ContainerKind::Empirical,
            IntensityKind::ExactMean => ContainerKind::ExactMean,
        },
        n_nodes: u.n_nodes() as u64,
        n_bins: u.n_bins() as u64,
        n_layers: u.n_layers() as u64,
        dim: 0,
        sections: vec![to_f64(u.data().view())],
    }
}

pub fn unfolded_from_container<T: Scalar>(c: &Container) -> Result<UnfoldedIntensity<T>> {
    let kind = match c.kind {
        ContainerKind::Empirical => IntensityKind::Empirical,
        ContainerKind::ExactMean => IntensityKind::ExactMean,
        other => return Err(Error::data(format!("container holds {other:?}, not an unfolded matrix"))),
    };
    let data = c.sections.first().ok_or_else(|| Error::data("container has no sections"))?;
    UnfoldedIntensity::new(
        data.mapv(T::lit),
        c.n_nodes as usize,
        c.n_bins as usize,
        c.n_layers as usize,
        kind,
    )
    .map_err(|e| Error::data(e.to_string()))
}

/// Sections: left factor, right factor, singular values as a `1 x d` row.
pub fn embedding_to_container<T: Scalar>(e: &Embedding<T>) -> Container {
    let sv = e.singular_values.mapv(|x| x.as_f64()).insert_axis(ndarray::Axis(0));
    Container {
        kind: ContainerKind::Embedding,
        n_nodes: e.n_nodes as u64,
        n_bins: e.n_bins as u64,
        n_layers: e.n_layers as u64,
        dim: e.dim() as u64,
        sections: vec![to_f64(e.left.view()), to_f64(e.right.view()), sv],
    }
}

pub fn embedding_from_container<T: Scalar>(c: &Container) -> Result<Embedding<T>> {
    if c.kind != ContainerKind::Embedding || c.sections.len() != 3 {
        return Err(Error::data("container does not hold an embedding"));
    }
    let (n, m, l, d) = (c.n_nodes as usize, c.n_bins as usize, c.n_layers as usize, c.dim as usize);
    let [left, right, sv] = [&c.sections[0], &c.sections[1], &c.sections[2]];
    if left.dim() != (n * m, d) || right.dim() != (n * l, d) || sv.dim() != (1, d) {
        return Err(Error::data("embedding sections have inconsistent shapes"));
    }
    Ok(Embedding {
        left: left.mapv(T::lit),
        right: right.mapv(T::lit),
        singular_values: Array1::from_iter(sv.iter().map(|&x| T::lit(x))),
        n_nodes: n,
        n_bins: m,
        n_layers: l,
    })
}

/// `%%MatrixMarket matrix array real general`, column-major values.
pub fn write_matrix_market<W: Write, T: Scalar>(mut w: W, a: ArrayView2<'_, T>) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{:e}", a[[i, j]].as_f64())?;
        }
    }
    Ok(())
}

pub fn read_matrix_market<R: std::io::BufRead>(r: R) -> Result<Array2<f64>> {
    let mut lines = r.lines();
    let head = lines.next().ok_or_else(|| Error::data("empty Matrix Market file"))??;
    if !head.to_ascii_lowercase().starts_with("%%matrixmarket matrix array real") {
        return Err(Error::data(format!("unsupported Matrix Market header '{head}'")));
    }
    let mut dims = None;
    let mut vals = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if dims.is_none() {
            let mut it = t.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next()) {
                (Some(Ok(r)), Some(Ok(c))) => dims = Some((r, c)),
                _ => return Err(Error::data(format!("bad size line '{t}'"))),
            }
        } else {
            vals.push(t.parse::<f64>().map_err(|_| Error::data(format!("bad value '{t}'")))?);
        }
    }
    let (rows, cols) = dims.ok_or_else(|| Error::data("missing size line"))?;
    if vals.len() != rows * cols {
        return Err(Error::data(format!("expected {} values, found {}", rows * cols, vals.len())));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(i, j)| vals[j * rows + i]))
}

/// Plain CSV with a header row; values use the shortest round-trip decimal.
pub fn write_matrix_csv<W: Write, T: Scalar>(w: W, a: ArrayView2<'_, T>, header: &[String]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if !header.is_empty() {
        wtr.write_record(header)?;
    }
    for row in a.rows() {
        wtr.write_record(row.iter().map(|x| x.as_f64().to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn container_round_trip() {
        let a = array![[1.0, -2.5], [1e-300, f64::MAX], [0.1, 3.0]];
        let u = UnfoldedIntensity::new(a.clone(), 1, 3, 2, IntensityKind::Empirical).unwrap();
        let mut buf = Vec::new();
        write_container(&mut buf, &unfolded_to_container(&u)).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let back: UnfoldedIntensity<f64> = unfolded_from_container(&read_container(&buf[..]).unwrap()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let u = UnfoldedIntensity::new(Array2::<f64>::ones((2, 2)), 1, 2, 2, IntensityKind::ExactMean).unwrap();
        let mut buf = Vec::new();
        write_container(&mut buf, &unfolded_to_container(&u)).unwrap();
        assert!(matches!(read_container(&buf[..buf.len() - 3]), Err(Error::Data(_))));
        buf[0] = b'X';
        assert!(matches!(read_container(&buf[..]), Err(Error::Data(_))));
    }

    #[test]
    fn matrix_market_round_trip() {
        let a = array![[1.5, 2.0, -3.0], [0.1, 0.2, 1e-17]];
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, a.view()).unwrap();
        let back = read_matrix_market(&buf[..]).unwrap();
        assert_eq!(back, a);
    }
}
