//! CSV interchange for matrices and vectors.
//!
//! Layout: one comment header line
//! `# rows=<m> cols=<n> kind=<...> mu=<...> seed=<...>` followed by the
//! entries in row-major order, one matrix row per line. Vectors are written
//! as a single column. `kind`, `mu` and `seed` are optional on input.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};

/// Metadata carried in the header line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvHeader {
    pub rows: usize,
    pub cols: usize,
    pub kind: Option<String>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
}

impl CsvHeader {
    pub fn plain(rows: usize, cols: usize) -> Self {
        Self { rows, cols, ..Default::default() }
    }

    pub fn from_spec(spec: &EnsembleSpec) -> Self {
        Self {
            rows: spec.m,
            cols: spec.n,
            kind: Some(spec.kind.to_string()),
            mu: Some(spec.mu),
            seed: Some(spec.seed),
        }
    }

    fn render(&self) -> String {
        let mut line = format!("# rows={} cols={}", self.rows, self.cols);
        line.push_str(&format!(" kind={}", self.kind.as_deref().unwrap_or("data")));
        if let Some(mu) = self.mu {
            line.push_str(&format!(" mu={mu}"));
        }
        if let Some(seed) = self.seed {
            line.push_str(&format!(" seed={seed}"));
        }
        line
    }

    fn parse(line: &str) -> Result<Self> {
        let body = line
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::InvalidData("missing `# rows=.. cols=..` header".into()))?;
        let mut header = CsvHeader::default();
        let (mut rows, mut cols) = (None, None);
        for token in body.split_whitespace() {
            let Some((key, value)) = token.split_once('=') else {
                continue;
            };
            let bad = || Error::InvalidData(format!("bad header field `{token}`"));
            match key {
                "rows" => rows = Some(value.parse().map_err(|_| bad())?),
                "cols" => cols = Some(value.parse().map_err(|_| bad())?),
                "kind" => header.kind = Some(value.to_string()),
                "mu" => header.mu = Some(value.parse().map_err(|_| bad())?),
                "seed" => header.seed = Some(value.parse().map_err(|_| bad())?),
                _ => {}
            }
        }
        header.rows = rows.ok_or_else(|| Error::InvalidData("header lacks rows=".into()))?;
        header.cols = cols.ok_or_else(|| Error::InvalidData("header lacks cols=".into()))?;
        Ok(header)
    }
}

pub fn write_matrix<W: Write>(mut w: W, a: &DMatrix<f64>, header: &CsvHeader) -> Result<()> {
    let header = CsvHeader { rows: a.nrows(), cols: a.ncols(), ..header.clone() };
    writeln!(w, "{}", header.render())?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..a.nrows() {
        out.write_record(a.row(i).iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_vector<W: Write>(w: W, v: &DVector<f64>, header: &CsvHeader) -> Result<()> {
    let as_matrix = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    write_matrix(w, &as_matrix, header)
}

pub fn read_matrix<R: Read>(r: R) -> Result<(DMatrix<f64>, CsvHeader)> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = CsvHeader::parse(&first)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::with_capacity(header.rows * header.cols);
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        if record.len() != header.cols {
            return Err(Error::InvalidData(format!(
                "row {} has {} entries, header says cols={}",
                rows + 1,
                record.len(),
                header.cols
            )));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::InvalidData(format!("not a number: `{field}`")))?;
            data.push(v);
        }
        rows += 1;
    }
    if rows != header.rows {
        return Err(Error::InvalidData(format!("found {rows} rows, header says rows={}", header.rows)));
    }
    Ok((DMatrix::from_row_slice(header.rows, header.cols, &data), header))
}

/// Reads a vector stored either as one column or as one row.
pub fn read_vector<R: Read>(r: R) -> Result<(DVector<f64>, CsvHeader)> {
    let (a, header) = read_matrix(r)?;
    if a.ncols() == 1 || a.nrows() == 1 {
        Ok((DVector::from_iterator(a.len(), a.iter().copied()), header))
    } else {
        Err(Error::InvalidData(format!("expected a vector, got a {}x{} matrix", a.nrows(), a.ncols())))
    }
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<(DMatrix<f64>, CsvHeader)> {
    read_matrix(File::open(path)?)
}

pub fn read_vector_file(path: impl AsRef<Path>) -> Result<(DVector<f64>, CsvHeader)> {
    read_vector(File::open(path)?)
}

pub fn write_matrix_file(path: impl AsRef<Path>, a: &DMatrix<f64>, header: &CsvHeader) -> Result<()> {
    write_matrix(File::create(path)?, a, header)
}

pub fn write_vector_file(path: impl AsRef<Path>, v: &DVector<f64>, header: &CsvHeader) -> Result<()> {
    write_vector(File::create(path)?, v, header)
}
