//! Plain-text dataset and ground-truth files.
//!
//! Dataset: a `d_x d_y n` header line followed by `n` rows of `d_x + d_y`
//! space-separated numbers. Values are written in shortest round-trip form,
//! so a save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{CcaError, Result};
use crate::evaluation::GroundTruth;
use crate::sample::PairedSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub d_x: usize,
    pub d_y: usize,
    pub n: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> CcaError {
    CcaError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_usizes(text: &str, line: usize, expected: usize) -> Result<Vec<usize>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} integers, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<usize>()
                .map_err(|_| parse_err(line, format!("`{f}` is not a nonnegative integer")))
        })
        .collect()
}

fn parse_reals(text: &str, line: usize, expected: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(expected);
    for f in text.split_whitespace() {
        let v: f64 = f
            .parse()
            .map_err(|_| parse_err(line, format!("`{f}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value `{f}`")));
        }
        out.push(v);
    }
    if out.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} values, found {}", out.len()),
        ));
    }
    Ok(out)
}

fn write_row<W: Write>(w: &mut W, values: impl IntoIterator<Item = f64>) -> std::io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v}")?;
        first = false;
    }
    w.write_all(b"\n")
}

/// Streaming reader over the rows of a dataset file.
pub struct DatasetReader {
    header: DatasetHeader,
    lines: Lines<BufReader<File>>,
    /// 1-based number of the last line consumed.
    line: usize,
    emitted: usize,
    done: bool,
}

impl DatasetReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .transpose()?
            .ok_or_else(|| parse_err(1, "empty file, expected a `d_x d_y n` header"))?;
        let v = parse_usizes(&first, 1, 3)?;
        if v[0] == 0 || v[1] == 0 {
            return Err(parse_err(1, "dimensions must be positive"));
        }
        Ok(DatasetReader {
            header: DatasetHeader {
                d_x: v[0],
                d_y: v[1],
                n: v[2],
            },
            lines,
            line: 1,
            emitted: 0,
            done: false,
        })
    }

    pub fn header(&self) -> DatasetHeader {
        self.header
    }

    /// Skip `count` rows without parsing their values.
    pub fn skip_rows(&mut self, count: usize) -> Result<()> {
        for _ in 0..count {
            if self.emitted >= self.header.n {
                return Err(parse_err(self.line, "skipped past the last row"));
            }
            match self.lines.next().transpose()? {
                Some(_) => {
                    self.line += 1;
                    self.emitted += 1;
                }
                None => {
                    return Err(parse_err(
                        self.line + 1,
                        format!("file ends after {} of {} rows", self.emitted, self.header.n),
                    ))
                }
            }
        }
        Ok(())
    }

    fn next_row(&mut self) -> Result<Option<PairedSample>> {
        let h = self.header;
        if self.emitted == h.n {
            // anything but blank lines after the last row is an error
            for extra in self.lines.by_ref() {
                let extra = extra?;
                self.line += 1;
                if !extra.trim().is_empty() {
                    return Err(parse_err(
                        self.line,
                        format!("more rows than the {} declared in the header", h.n),
                    ));
                }
            }
            return Ok(None);
        }
        let text = self.lines.next().transpose()?.ok_or_else(|| {
            parse_err(
                self.line + 1,
                format!("file ends after {} of {} rows", self.emitted, h.n),
            )
        })?;
        self.line += 1;
        let v = parse_reals(&text, self.line, h.d_x + h.d_y)?;
        self.emitted += 1;
        Ok(Some(PairedSample::from_slices(&v[..h.d_x], &v[h.d_x..])))
    }
}

impl Iterator for DatasetReader {
    type Item = Result<PairedSample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_row() {
            Ok(Some(s)) => Some(Ok(s)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Header plus a streaming iterator over the samples.
pub fn load_dataset(path: &Path) -> Result<(DatasetHeader, DatasetReader)> {
    let reader = DatasetReader::open(path)?;
    Ok((reader.header(), reader))
}

/// Load every sample into memory.
pub fn load_dataset_all(path: &Path) -> Result<(DatasetHeader, Vec<PairedSample>)> {
    let (h, reader) = load_dataset(path)?;
    let samples = reader.collect::<Result<Vec<_>>>()?;
    Ok((h, samples))
}

pub fn save_dataset(path: &Path, samples: &[PairedSample]) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| CcaError::input("cannot save an empty dataset"))?;
    let (dx, dy) = (first.x.len(), first.y.len());
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{dx} {dy} {}", samples.len())?;
    for (i, s) in samples.iter().enumerate() {
        if s.x.len() != dx || s.y.len() != dy {
            return Err(CcaError::input(format!(
                "sample {i} has inconsistent dimensions"
            )));
        }
        if !s.is_finite() {
            return Err(CcaError::input(format!(
                "sample {i} has non-finite entries"
            )));
        }
        write_row(&mut w, s.x.iter().chain(s.y.iter()).copied())?;
    }
    w.flush()?;
    Ok(())
}

/// Ground-truth file: `d_x d_y k_true`, the correlations on one line, then
/// the rows of `C_x`, `C_y` and `C_xy`.
pub fn save_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {} {}", gt.d_x(), gt.d_y(), gt.rho.len())?;
    write_row(&mut w, gt.rho.iter().copied())?;
    for m in [&gt.c_x, &gt.c_y, &gt.c_xy] {
        for r in 0..m.nrows() {
            write_row(&mut w, m.row(r).iter().copied())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let mut line_no = 0usize;
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        line_no += 1;
        let text = lines
            .next()
            .transpose()?
            .ok_or_else(|| parse_err(line_no, format!("file ends before {what}")))?;
        Ok((line_no, text))
    };
    let (ln, header) = next_line("the header")?;
    let h = parse_usizes(&header, ln, 3)?;
    let (dx, dy, k) = (h[0], h[1], h[2]);
    if dx == 0 || dy == 0 {
        return Err(parse_err(ln, "dimensions must be positive"));
    }
    let (ln, rho_line) = next_line("the correlations")?;
    let rho = parse_reals(&rho_line, ln, k)?;
    let mut read_matrix = |rows: usize, cols: usize, what: &str| -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            let (ln, text) = next_line(what)?;
            m.set_row(
                r,
                &DVector::from_vec(parse_reals(&text, ln, cols)?).transpose(),
            );
        }
        Ok(m)
    };
    let c_x = read_matrix(dx, dx, "C_x")?;
    let c_y = read_matrix(dy, dy, "C_y")?;
    let c_xy = read_matrix(dx, dy, "C_xy")?;
    GroundTruth::new(c_x, c_y, c_xy, rho)
}

/// Random-access view of a sample sequence, streamed by index range.
pub trait SampleSource {
    fn dims(&self) -> (usize, usize);
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Samples with indices in `start..end`.
    fn stream(
        &self,
        start: usize,
        end: usize,
    ) -> Result<Box<dyn Iterator<Item = Result<PairedSample>> + '_>>;
}

/// Samples held in memory.
pub struct MemorySource {
    samples: Vec<PairedSample>,
    dims: (usize, usize),
}

impl MemorySource {
    pub fn new(samples: Vec<PairedSample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| CcaError::input("empty sample set"))?;
        let dims = (first.x.len(), first.y.len());
        if samples.iter().any(|s| (s.x.len(), s.y.len()) != dims) {
            return Err(CcaError::input("samples have inconsistent dimensions"));
        }
        Ok(MemorySource { samples, dims })
    }
}

impl SampleSource for MemorySource {
    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn len(&self) -> usize {
        self.samples.len()
    }

    fn stream(
        &self,
        start: usize,
        end: usize,
    ) -> Result<Box<dyn Iterator<Item = Result<PairedSample>> + '_>> {
        let end = end.min(self.samples.len());
        let start = start.min(end);
        Ok(Box::new(self.samples[start..end].iter().cloned().map(Ok)))
    }
}

/// Samples read lazily from a dataset file; each stream reopens the file.
pub struct FileSource {
    path: PathBuf,
    header: DatasetHeader,
}

impl FileSource {
    pub fn open(path: &Path) -> Result<Self> {
        let header = DatasetReader::open(path)?.header();
        Ok(FileSource {
            path: path.to_path_buf(),
            header,
        })
    }
}

impl SampleSource for FileSource {
    fn dims(&self) -> (usize, usize) {
        (self.header.d_x, self.header.d_y)
    }

    fn len(&self) -> usize {
        self.header.n
    }

    fn stream(
        &self,
        start: usize,
        end: usize,
    ) -> Result<Box<dyn Iterator<Item = Result<PairedSample>> + '_>> {
        let end = end.min(self.header.n);
        let start = start.min(end);
        let mut reader = DatasetReader::open(&self.path)?;
        reader.skip_rows(start)?;
        Ok(Box::new(reader.take(end - start)))
    }
}
