use std::io::{BufRead, Write};

use super::SketcherKind;
use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::linalg::Mat;

/// `k × n` node embedding; column `j` is the vector of node `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    values: Mat,
    kind: SketcherKind,
    rows_seen: u64,
    exponent: f64,
}

impl Embedding {
    pub fn new(values: Mat, kind: SketcherKind, rows_seen: u64, exponent: f64) -> Self {
        Embedding {
            values,
            kind,
            rows_seen,
            exponent,
        }
    }

    pub fn k(&self) -> usize {
        self.values.rows()
    }

    pub fn n(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn kind(&self) -> SketcherKind {
        self.kind
    }

    pub fn rows_seen(&self) -> u64 {
        self.rows_seen
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn node_vector(&self, node: usize) -> Vec<f64> {
        (0..self.k()).map(|i| self.values[(i, node)]).collect()
    }

    /// Node vectors as rows (`n × k`).
    pub fn node_matrix(&self) -> Mat {
        self.values.transpose()
    }

    /// Text format: header `n k`, then `original_id v_1 … v_k` per node.
    pub fn write_text<W: Write>(&self, ids: &IdMap, mut out: W) -> Result<()> {
        if ids.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: ids.len(),
            });
        }
        writeln!(out, "{} {}", self.n(), self.k())?;
        let mut line = String::new();
        for j in 0..self.n() {
            use std::fmt::Write as _;
            line.clear();
            let _ = write!(line, "{}", ids.original(j));
            for i in 0..self.k() {
                let _ = write!(line, " {}", self.values[(i, j)]);
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// An embedding read back from text, with the original node ids in file order.
#[derive(Clone, Debug)]
pub struct LabeledEmbedding {
    pub ids: IdMap,
    pub embedding: Embedding,
}

impl LabeledEmbedding {
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (n, k) = loop {
            let Some((lineno, line)) = lines.next() else {
                return Err(Error::EmptyInput("embedding file has no header"));
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let n = parse_field::<usize>(it.next(), lineno + 1)?;
            let k = parse_field::<usize>(it.next(), lineno + 1)?;
            break (n, k);
        };
        let mut values = Mat::zeros(k, n);
        let mut id_lines = String::new();
        let mut j = 0;
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if j >= n {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("more than {n} node lines"),
                });
            }
            let mut it = line.split_whitespace();
            let id = parse_field::<u64>(it.next(), lineno + 1)?;
            id_lines.push_str(&format!("{id} {j}\n"));
            for i in 0..k {
                values[(i, j)] = parse_field::<f64>(it.next(), lineno + 1)?;
            }
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected {k} values"),
                });
            }
            j += 1;
        }
        if j != n {
            return Err(Error::Parse {
                line: 0,
                message: format!("header promises {n} nodes, found {j}"),
            });
        }
        let ids = IdMap::read(id_lines.as_bytes())?;
        if ids.len() != n {
            return Err(Error::Parse {
                line: 0,
                message: "duplicate node ids in embedding file".into(),
            });
        }
        Ok(LabeledEmbedding {
            ids,
            embedding: Embedding::new(values, SketcherKind::Fd, 0, f64::NAN),
        })
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: "missing field".into(),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid field {tok:?}"),
    })
}
