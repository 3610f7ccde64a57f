//! Dataset file formats: numeric CSV (optional header, row-major samples,
//! final column = response when a single file is given) and the "SSEL1"
//! binary cache (magic bytes, little-endian f64, row-major).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"SSEL1";

fn parse_records(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if idx == 0 && rows.is_empty() => {
                // header row
            }
            Err(e) => {
                return Err(Error::InvalidData(format!(
                    "row {}: not numeric ({e})",
                    idx + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidData("no data rows".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidData("ragged rows".into()));
    }
    Ok(rows)
}

/// Reads a single CSV holding samples in rows with the response in the
/// final column. A non-numeric first row is treated as a header.
pub fn read_xy_csv(path: &Path) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let rows = parse_records(path)?;
    let width = rows[0].len();
    if width < 2 {
        return Err(Error::InvalidData(
            "need at least one feature column plus the response".into(),
        ));
    }
    let n = rows.len();
    let p = width - 1;
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..p {
            x[(i, j)] = row[j];
        }
        y[i] = row[p];
    }
    Ok((x, y))
}

/// Reads a design-only CSV (all columns are features).
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = parse_records(path)?;
    let n = rows.len();
    let p = rows[0].len();
    let mut x = DMatrix::zeros(n, p);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..p {
            x[(i, j)] = row[j];
        }
    }
    Ok(x)
}

/// Reads a single-column response CSV.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let rows = parse_records(path)?;
    if rows[0].len() != 1 {
        return Err(Error::InvalidData(format!(
            "expected one column, found {}",
            rows[0].len()
        )));
    }
    Ok(DVector::from_fn(rows.len(), |i, _| rows[i][0]))
}

/// Writes a `(X, y)` pair as CSV with an `x0,..,x{p-1},y` header.
pub fn write_xy_csv(path: &Path, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..x.ncols())
        .map(|j| format!("x{j}"))
        .chain(std::iter::once("y".to_string()))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols())
            .map(|j| x[(i, j)].to_string())
            .chain(std::iter::once(y[i].to_string()))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Binary cache layout: `SSEL1` magic, `u32` n, `u32` p (little endian),
/// then `n·p` row-major f64 design entries followed by `n` response entries.
pub fn write_dataset_bin(path: &Path, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::InvalidData("response length mismatch".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(p as u32).to_le_bytes())?;
    for i in 0..n {
        for j in 0..p {
            w.write_all(&x[(i, j)].to_le_bytes())?;
        }
    }
    for i in 0..n {
        w.write_all(&y[i].to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary cache written by [`write_dataset_bin`].
pub fn read_dataset_bin(path: &Path) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadCache(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut dims = [0u8; 4];
    r.read_exact(&mut dims)?;
    let n = u32::from_le_bytes(dims) as usize;
    r.read_exact(&mut dims)?;
    let p = u32::from_le_bytes(dims) as usize;
    if n == 0 || p == 0 {
        return Err(Error::BadCache(format!("degenerate shape {n}x{p}")));
    }
    let mut buf = [0u8; 8];
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            r.read_exact(&mut buf)?;
            x[(i, j)] = f64::from_le_bytes(buf);
        }
    }
    let mut y = DVector::zeros(n);
    for i in 0..n {
        r.read_exact(&mut buf)?;
        y[i] = f64::from_le_bytes(buf);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::BadCache("trailing bytes".into()));
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut dir = std::env::temp_dir();
        dir.push(format!("bss-io-{}-{name}", std::process::id()));
        dir
    }

    #[test]
    fn csv_roundtrip_with_header() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(7, 3, |_, _| rng.random::<f64>());
        let y = DVector::from_fn(7, |_, _| rng.random::<f64>());
        let path = tmp("roundtrip.csv");
        write_xy_csv(&path, &x, &y).unwrap();
        let (x2, y2) = read_xy_csv(&path).unwrap();
        assert_eq!(x, x2);
        assert_eq!(y, y2);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn csv_headerless_accepted() {
        let path = tmp("noheader.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "1.0,2.0,3.0").unwrap();
        writeln!(f, "4.0,5.0,6.0").unwrap();
        drop(f);
        let (x, y) = read_xy_csv(&path).unwrap();
        assert_eq!(x.shape(), (2, 2));
        assert_eq!(y.as_slice(), &[3.0, 6.0]);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn csv_rejects_garbage_rows() {
        let path = tmp("bad.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "a,b,c").unwrap();
        writeln!(f, "1.0,2.0,3.0").unwrap();
        writeln!(f, "1.0,oops,3.0").unwrap();
        drop(f);
        assert!(matches!(read_xy_csv(&path), Err(Error::InvalidData(_))));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn binary_cache_roundtrip_and_magic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random::<f64>() * 10.0 - 5.0);
        let y = DVector::from_fn(5, |_, _| rng.random::<f64>());
        let path = tmp("cache.bin");
        write_dataset_bin(&path, &x, &y).unwrap();
        let (x2, y2) = read_dataset_bin(&path).unwrap();
        assert_eq!(x, x2);
        assert_eq!(y, y2);
        // corrupt the magic
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_dataset_bin(&path), Err(Error::BadCache(_))));
        std::fs::remove_file(&path).ok();
    }
}
