//! File formats: complex-matrix CSV, the binary waveform layout, diagnostics
//! and Pareto CSV emission.
//!
//! CSV cells for complex values use the compact `re+imj` form (e.g.
//! `0.25-0.5j`), one matrix row per line. The binary waveform layout is
//! little-endian: magic `ISACWF1`, u32 antenna count, u32 sample count, then
//! row-major interleaved (re, im) float64 pairs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write as IoWrite};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frame::WaveformFrame;
use crate::metrics::to_db;
use crate::oracle::ParetoStudy;
use crate::solver::ConvergenceDiagnostics;

const MAGIC: &[u8; 7] = b"ISACWF1";

/// `re+imj` cell form; both parts in shortest round-trip decimal.
pub fn format_complex(z: Complex64) -> String {
    if z.im >= 0.0 || z.im.is_nan() {
        format!("{}+{}j", z.re, z.im)
    } else {
        format!("{}{}j", z.re, z.im)
    }
}

/// Parse the `re+imj` cell form.
pub fn parse_complex(cell: &str) -> Option<Complex64> {
    let t = cell.trim();
    let body = t.strip_suffix(['j', 'J'])?;
    // Split at the sign of the imaginary part: the last '+'/'-' that is
    // neither leading nor part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i];
        if (c == b'+' || c == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let i = split?;
    let re: f64 = body[..i].parse().ok()?;
    let im: f64 = body[i..].parse().ok()?;
    Some(Complex64::new(re, im))
}

fn write_complex_rows<W: IoWrite>(
    out: &mut W,
    nrows: usize,
    ncols: usize,
    at: impl Fn(usize, usize) -> Complex64,
) -> std::io::Result<()> {
    for r in 0..nrows {
        let row: Vec<String> = (0..ncols).map(|c| format_complex(at(r, c))).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn read_complex_rows(path: &Path) -> Result<Vec<Vec<Complex64>>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let z = parse_complex(cell).ok_or_else(|| {
                Error::format(
                    path.display().to_string(),
                    format!("line {}: bad complex cell {cell:?}", lineno + 1),
                )
            })?;
            row.push(z);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    path.display().to_string(),
                    format!(
                        "line {}: {} cells, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path.display().to_string(), "no data rows"));
    }
    Ok(rows)
}

pub fn write_waveform_csv(path: &Path, frame: &WaveformFrame) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    write_complex_rows(&mut out, frame.n_antennas(), frame.n_samples(), |r, c| {
        frame.get(r, c)
    })
    .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_waveform_csv(path: &Path) -> Result<WaveformFrame> {
    let rows = read_complex_rows(path)?;
    let n = rows.len();
    let l = rows[0].len();
    let mut frame = WaveformFrame::zeros(n, l);
    for (r, row) in rows.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            frame.set(r, c, *z);
        }
    }
    Ok(frame)
}

pub fn write_channel_csv(path: &Path, h: &DMatrix<Complex64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    write_complex_rows(&mut out, h.nrows(), h.ncols(), |r, c| h[(r, c)])
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_channel_csv(path: &Path) -> Result<DMatrix<Complex64>> {
    let rows = read_complex_rows(path)?;
    let nrows = rows.len();
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

pub fn write_waveform_binary(path: &Path, frame: &WaveformFrame) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let mut run = || -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(frame.n_antennas() as u32).to_le_bytes())?;
        out.write_all(&(frame.n_samples() as u32).to_le_bytes())?;
        for r in 0..frame.n_antennas() {
            for c in 0..frame.n_samples() {
                let z = frame.get(r, c);
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
        out.flush()
    };
    run().map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_waveform_binary(path: &Path) -> Result<WaveformFrame> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = BufReader::new(file);
    let ctx = || path.display().to_string();

    let mut magic = [0u8; 7];
    reader.read_exact(&mut magic).map_err(|e| Error::io(ctx(), e))?;
    if &magic != MAGIC {
        return Err(Error::format(ctx(), "bad magic, not a waveform file"));
    }
    let mut u32buf = [0u8; 4];
    reader.read_exact(&mut u32buf).map_err(|e| Error::io(ctx(), e))?;
    let n = u32::from_le_bytes(u32buf) as usize;
    reader.read_exact(&mut u32buf).map_err(|e| Error::io(ctx(), e))?;
    let l = u32::from_le_bytes(u32buf) as usize;
    if n == 0 || l == 0 || n.saturating_mul(l) > 1 << 28 {
        return Err(Error::format(ctx(), format!("implausible dimensions {n}x{l}")));
    }
    let mut frame = WaveformFrame::zeros(n, l);
    let mut f64buf = [0u8; 8];
    for r in 0..n {
        for c in 0..l {
            reader.read_exact(&mut f64buf).map_err(|e| Error::io(ctx(), e))?;
            let re = f64::from_le_bytes(f64buf);
            reader.read_exact(&mut f64buf).map_err(|e| Error::io(ctx(), e))?;
            let im = f64::from_le_bytes(f64buf);
            frame.set(r, c, Complex64::new(re, im));
        }
    }
    Ok(frame)
}

fn db_or_floor(linear: f64) -> f64 {
    to_db(linear.max(1e-300))
}

/// Per-iteration solver traces, one CSV row per iteration. The
/// `inner_iters_used` column appears only when the robust solver populated
/// it.
pub fn write_diagnostics_csv(path: &Path, diag: &ConvergenceDiagnostics) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let robust = !diag.inner_iters_used.is_empty();
    let mut run = || -> std::io::Result<()> {
        if robust {
            writeln!(
                out,
                "iter,objective_db,drift_norm,aux_step_norm,papr_db,similarity,inner_iters_used"
            )?;
        } else {
            writeln!(out, "iter,objective_db,drift_norm,aux_step_norm,papr_db,similarity")?;
        }
        for i in 0..diag.len() {
            write!(
                out,
                "{},{},{},{},{},{}",
                i + 1,
                db_or_floor(diag.objective[i]),
                diag.drift_norm[i],
                diag.aux_step_norm[i],
                diag.papr_db[i],
                diag.similarity[i]
            )?;
            if robust {
                write!(out, ",{}", diag.inner_iters_used[i])?;
            }
            writeln!(out)?;
        }
        out.flush()
    };
    run().map_err(|e| Error::io(path.display().to_string(), e))
}

/// All three trade-off families in one long table:
/// `family,eta,w,e_mui_db,similarity,papr_db`.
pub fn write_pareto_csv(path: &Path, study: &ParetoStudy) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let mut run = || -> std::io::Result<()> {
        writeln!(out, "family,eta,w,e_mui_db,similarity,papr_db")?;
        for p in &study.unconstrained {
            writeln!(
                out,
                "unconstrained,,{},{},{},{}",
                p.weight,
                db_or_floor(p.mui_energy),
                p.similarity,
                p.papr_db
            )?;
        }
        for (eta, front) in &study.clipped {
            for p in front {
                writeln!(
                    out,
                    "clipped,{},{},{},{},{}",
                    eta,
                    p.weight,
                    db_or_floor(p.mui_energy),
                    p.similarity,
                    p.papr_db
                )?;
            }
        }
        for (eta, front) in &study.constrained {
            for p in front {
                writeln!(
                    out,
                    "constrained,{},{},{},{},{}",
                    eta,
                    p.weight,
                    db_or_floor(p.mui_energy),
                    p.similarity,
                    p.papr_db
                )?;
            }
        }
        out.flush()
    };
    run().map_err(|e| Error::io(path.display().to_string(), e))
}
