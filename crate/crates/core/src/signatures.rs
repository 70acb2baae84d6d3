//! Labelled spectral-signature sets and their CSV container.
//!
//! A signature is the B-vector of band intensities at one pixel. Sets carry a
//! trial id and reheat-class label per row; the CSV layout is
//! `trial,reheat_class,b0..b{B-1}`, one row per signature.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeding::derive_seed;

/// N x B matrix of spectral signatures with per-row trial and reheat-class
/// labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSet {
    dim: usize,
    values: Vec<f64>,
    trials: Vec<u32>,
    classes: Vec<u32>,
}

impl SignatureSet {
    pub fn new(dim: usize) -> Self {
        SignatureSet {
            dim,
            values: Vec::new(),
            trials: Vec::new(),
            classes: Vec::new(),
        }
    }

    /// Build from row-major values with every row labelled `(trial, class)`.
    pub fn from_values(dim: usize, values: Vec<f64>, trial: u32, class: u32) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "value count {} is not a multiple of dim {}",
                values.len(),
                dim
            )));
        }
        let n = values.len() / dim;
        Ok(SignatureSet {
            dim,
            values,
            trials: vec![trial; n],
            classes: vec![class; n],
        })
    }

    pub fn push(&mut self, signature: &[f64], trial: u32, class: u32) -> Result<()> {
        if signature.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "signature length {} does not match dim {}",
                signature.len(),
                self.dim
            )));
        }
        self.values.extend_from_slice(signature);
        self.trials.push(trial);
        self.classes.push(class);
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn signature(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn trial(&self, i: usize) -> u32 {
        self.trials[i]
    }

    #[inline]
    pub fn class(&self, i: usize) -> u32 {
        self.classes[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn classes_present(&self) -> BTreeSet<u32> {
        self.classes.iter().copied().collect()
    }

    pub fn trials_present(&self) -> BTreeSet<u32> {
        self.trials.iter().copied().collect()
    }

    /// Indices of all rows with the given class label.
    pub fn indices_of_class(&self, class: u32) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == class).collect()
    }

    /// New set holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> SignatureSet {
        let mut out = SignatureSet::new(self.dim);
        for &i in indices {
            out.values.extend_from_slice(self.signature(i));
            out.trials.push(self.trials[i]);
            out.classes.push(self.classes[i]);
        }
        out
    }

    pub fn append(&mut self, other: &SignatureSet) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch("appending sets of different dim".into()));
        }
        self.values.extend_from_slice(&other.values);
        self.trials.extend_from_slice(&other.trials);
        self.classes.extend_from_slice(&other.classes);
        Ok(())
    }

    /// Overwrite every row label.
    pub fn relabel(&mut self, trial: u32, class: u32) {
        self.trials.iter_mut().for_each(|t| *t = trial);
        self.classes.iter_mut().for_each(|c| *c = class);
    }

    pub fn has_finite_values(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Seeded uniform subsample of at most `cap` rows per class, preserving
    /// ascending class order. Used to keep dense eigensolves at desk scale.
    pub fn subsample_per_class(&self, cap: usize, seed: u64) -> SignatureSet {
        let mut picked = Vec::new();
        for class in self.classes_present() {
            let mut idx = self.indices_of_class(class);
            if idx.len() > cap {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5353 + class as u64));
                idx.shuffle(&mut rng);
                idx.truncate(cap);
                idx.sort_unstable();
            }
            picked.extend(idx);
        }
        self.select(&picked)
    }

    /// Write as CSV with header `trial,reheat_class,b0..b{B-1}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["trial".to_string(), "reheat_class".to_string()];
        header.extend((0..self.dim).map(|b| format!("b{b}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.trials[i].to_string(), self.classes[i].to_string()];
            rec.extend(self.signature(i).iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<SignatureSet> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "trial" || &headers[1] != "reheat_class" {
            return Err(Error::Format(
                "signature CSV must start with header columns trial,reheat_class,b0..".into(),
            ));
        }
        let dim = headers.len() - 2;
        for (b, name) in headers.iter().skip(2).enumerate() {
            if name != format!("b{b}") {
                return Err(Error::Format(format!(
                    "unexpected band column name {name:?} (wanted b{b})"
                )));
            }
        }
        let mut set = SignatureSet::new(dim);
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != dim + 2 {
                return Err(Error::Format(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    dim + 2
                )));
            }
            let parse_u32 = |s: &str, what: &str| {
                s.trim().parse::<u32>().map_err(|_| {
                    Error::Format(format!("row {}: bad {} value {:?}", line + 2, what, s))
                })
            };
            let trial = parse_u32(&rec[0], "trial")?;
            let class = parse_u32(&rec[1], "reheat_class")?;
            let mut sig = Vec::with_capacity(dim);
            for b in 0..dim {
                let v: f64 = rec[b + 2].trim().parse().map_err(|_| {
                    Error::Format(format!("row {}: bad band value {:?}", line + 2, &rec[b + 2]))
                })?;
                sig.push(v);
            }
            set.push(&sig, trial, class)?;
        }
        Ok(set)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<SignatureSet> {
        let file = std::fs::File::open(path)?;
        SignatureSet::read_csv(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> SignatureSet {
        let mut s = SignatureSet::new(3);
        s.push(&[1.0, 2.0, 3.0], 0, 0).unwrap();
        s.push(&[4.0, 5.0, 6.0], 0, 1).unwrap();
        s.push(&[7.5, 8.25, 9.125], 1, 1).unwrap();
        s
    }

    #[test]
    fn csv_round_trip_preserves_everything() {
        let s = sample_set();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("trial,reheat_class,b0,b1,b2\n"));
        let back = SignatureSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let data = b"foo,bar,b0\n0,0,1.0\n";
        assert!(matches!(SignatureSet::read_csv(&data[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_rejects_bad_values() {
        let data = b"trial,reheat_class,b0\n0,0,notanumber\n";
        assert!(SignatureSet::read_csv(&data[..]).is_err());
        let data = b"trial,reheat_class,b0\n-1,0,1.0\n";
        assert!(SignatureSet::read_csv(&data[..]).is_err());
    }

    #[test]
    fn select_keeps_labels_aligned() {
        let s = sample_set();
        let sub = s.select(&[2, 0]);
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.trial(0), 1);
        assert_eq!(sub.class(0), 1);
        assert_eq!(sub.signature(1), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn subsample_caps_each_class_and_is_deterministic() {
        let mut s = SignatureSet::new(1);
        for i in 0..50 {
            s.push(&[i as f64], 0, (i % 2) as u32).unwrap();
        }
        let a = s.subsample_per_class(10, 99);
        let b = s.subsample_per_class(10, 99);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert_eq!(a.indices_of_class(0).len(), 10);
        assert_eq!(a.indices_of_class(1).len(), 10);
        // Different seed gives a different draw.
        let c = s.subsample_per_class(10, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn push_checks_dim() {
        let mut s = SignatureSet::new(2);
        assert!(s.push(&[1.0], 0, 0).is_err());
    }
}
