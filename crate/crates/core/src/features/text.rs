use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::hangul::CharVocab;
use super::sequence::FeatureSequence;
use crate::error::{Error, Result};

fn trimmed(text: &str) -> Result<&str> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::EmptyInput("transcript is empty".into()));
    }
    Ok(t)
}

/// One multi-hot row per character, end-aligned.
pub fn encode_sparse(text: &str, t_max: Option<usize>) -> Result<FeatureSequence> {
    let text = trimmed(text)?;
    let mut rows = Vec::new();
    for ch in text.chars() {
        let mut row = [0.0; CharVocab::DIM];
        for slot in CharVocab::slots(ch) {
            row[slot] = 1.0;
        }
        rows.extend_from_slice(&row);
    }
    FeatureSequence::end_aligned(&rows, CharVocab::DIM, t_max)
}

/// Per-character dense vectors; characters missing from the table map to
/// a zero row that still counts as valid.
pub fn encode_dense(text: &str, table: &EmbeddingTable, t_max: Option<usize>) -> Result<FeatureSequence> {
    let text = trimmed(text)?;
    let mut rows = Vec::new();
    let mut buf = [0u8; 4];
    for ch in text.chars() {
        rows.extend_from_slice(table.lookup(ch.encode_utf8(&mut buf)));
    }
    FeatureSequence::end_aligned(&rows, table.dim(), t_max)
}

/// Token → vector dictionary in the plain word-vector text format:
/// a `count dim` header, then one token and `dim` decimals per line.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    zero: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            tokens: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            zero: vec![0.0; dim],
        })
    }

    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::shape("embedding insert", &[self.dim], &[vector.len()]));
        }
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!("invalid embedding token {token:?}")));
        }
        match self.index.get(token) {
            Some(&i) => self.vectors[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector),
            None => {
                self.index.insert(token.to_owned(), self.tokens.len());
                self.tokens.push(token.to_owned());
                self.vectors.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        let i = *self.index.get(token)?;
        Some(&self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Stored vector, or the zero vector for unknown tokens.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.get(token).unwrap_or(&self.zero)
    }

    pub fn parse(reader: impl BufRead, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing `count dim` header".into()))?;
        let header = header?;
        let mut fields = header.split_whitespace();
        let (count, dim) = match (fields.next(), fields.next(), fields.next()) {
            (Some(c), Some(d), None) => (
                c.parse::<usize>()
                    .map_err(|e| err(1, format!("bad count {c:?}: {e}")))?,
                d.parse::<usize>().map_err(|e| err(1, format!("bad dim {d:?}: {e}")))?,
            ),
            _ => return Err(err(1, format!("expected `count dim`, got {header:?}"))),
        };
        let mut table = Self::new(dim).map_err(|e| err(1, e.to_string()))?;
        let mut last_line = 1;
        for (line_no, line) in lines {
            let line = line?;
            last_line = line_no;
            if line.trim().is_empty() {
                continue;
            }
            if table.len() == count {
                return Err(err(line_no, format!("more than {count} entries")));
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-empty line");
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| err(line_no, format!("bad value {f:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != dim {
                return Err(err(
                    line_no,
                    format!("token {token:?} has {} values, expected {dim}", values.len()),
                ));
            }
            if table.get(token).is_some() {
                return Err(err(line_no, format!("duplicate token {token:?}")));
            }
            table.insert(token, &values).map_err(|e| err(line_no, e.to_string()))?;
        }
        if table.len() != count {
            return Err(err(
                last_line + 1,
                format!("header promises {count} entries, found {}", table.len()),
            ));
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::file(path, e))?;
        Self::parse(BufReader::new(f), path)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, token) in self.tokens.iter().enumerate() {
            write!(w, "{token}")?;
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                // `{:?}` on f64 prints the shortest exactly round-tripping form
                write!(w, " {v:?}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_to(BufWriter::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<EmbeddingTable> {
        EmbeddingTable::parse(s.as_bytes(), Path::new("emb.txt"))
    }

    #[test]
    fn sparse_single_syllables() {
        let s = encode_sparse("가", None).unwrap();
        assert_eq!(s.valid_len(), 1);
        let ones: Vec<usize> = (0..69).filter(|&i| s.row(0)[i] == 1.0).collect();
        assert_eq!(ones, vec![0, 19]);

        let s = encode_sparse("간", Some(3)).unwrap();
        let ones: Vec<usize> = (0..69).filter(|&i| s.row(2)[i] == 1.0).collect();
        assert_eq!(ones, vec![0, 19, 43]);
        assert_eq!(s.mask(), &[false, false, true]);
    }

    #[test]
    fn sparse_space_and_other() {
        let s = encode_sparse("가 x", None).unwrap();
        assert_eq!(s.valid_len(), 3);
        assert_eq!(s.row(1)[CharVocab::SPACE_SLOT], 1.0);
        assert_eq!(s.row(2)[CharVocab::OTHER_SLOT], 1.0);
        assert_eq!(s.row(2).iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn empty_text_is_error() {
        assert!(matches!(encode_sparse("", None), Err(Error::EmptyInput(_))));
        assert!(matches!(encode_sparse("   ", None), Err(Error::EmptyInput(_))));
        let t = EmbeddingTable::new(2).unwrap();
        assert!(matches!(encode_dense("", &t, None), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn dense_lookup_and_oov() {
        let t = parse("2 3\n가 0.5 -1 2\n나 1 1 1\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        let s = encode_dense("가다", &t, Some(3)).unwrap();
        assert_eq!(s.row(1), &[0.5, -1.0, 2.0]);
        assert_eq!(s.row(2), &[0.0, 0.0, 0.0]);
        assert_eq!(s.mask(), &[false, true, true]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse("2 3\n가 1 2 3\n나 1 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse("2 3\n가 1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse("1 3\n가 1 2 3\n나 1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        assert!(parse("three 3\n").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn written_table_round_trips_exactly() {
        let mut t = EmbeddingTable::new(3).unwrap();
        t.insert("가", &[0.1, 1.0 / 3.0, -2.5e-7]).unwrap();
        t.insert("나", &[1e300, -0.0, 7.0]).unwrap();
        t.insert("다", &[f64::MIN_POSITIVE, 2.0, -1.0]).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        let s = encode_dense("가나다", &back, None).unwrap();
        assert_eq!(s.row(0), t.get("가").unwrap());
        assert_eq!(s.row(1), t.get("나").unwrap());
        assert_eq!(s.row(2), t.get("다").unwrap());
    }
}
