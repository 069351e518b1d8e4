//! Named-tensor checkpoints: one tensor per line,
//! `name<TAB>rows,cols<TAB>v0 v1 ...` in row-major order.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::Matrix;
use super::tape::ParamStore;
use crate::error::{Error, Result};

const MAGIC: &str = "# signal-lab checkpoint v1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Matrix)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends every parameter of `store` under `prefix.`.
    pub fn extend_from(&mut self, prefix: &str, store: &ParamStore) {
        for (name, value) in store.iter() {
            self.tensors.push((format!("{prefix}.{name}"), value.clone()));
        }
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Overwrites every parameter of `store` from the tensors stored under
    /// `prefix.`; names and shapes must match exactly.
    pub fn restore_into(&self, prefix: &str, store: &mut ParamStore) -> Result<()> {
        for id in store.ids().collect::<Vec<_>>() {
            let key = format!("{prefix}.{}", store.name(id));
            let value = self
                .get(&key)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{key}`")))?;
            if value.shape() != store.get(id).shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{key}` is {:?}, network expects {:?}",
                    value.shape(),
                    store.get(id).shape()
                )));
            }
            *store.get_mut(id) = value.clone();
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (name, m) in &self.tensors {
            let _ = write!(out, "{name}\t{},{}\t", m.rows(), m.cols());
            for (i, v) in m.as_slice().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                // shortest round-trip representation
                let _ = write!(out, "{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(Error::Checkpoint("missing header line".into()));
        }
        let mut tensors = Vec::new();
        for (no, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Checkpoint(format!("line {}: {what}", no + 2));
            let mut fields = line.split('\t');
            let name = fields.next().ok_or_else(|| bad("no name"))?;
            let shape = fields.next().ok_or_else(|| bad("no shape"))?;
            let values = fields.next().unwrap_or("");
            let (r, c) = shape.split_once(',').ok_or_else(|| bad("bad shape"))?;
            let rows: usize = r.parse().map_err(|_| bad("bad rows"))?;
            let cols: usize = c.parse().map_err(|_| bad("bad cols"))?;
            let data = values
                .split_ascii_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| bad("bad value")))
                .collect::<Result<Vec<_>>>()?;
            let m = Matrix::from_vec(rows, cols, data).map_err(|_| bad("value count != rows*cols"))?;
            tensors.push((name.to_string(), m));
        }
        Ok(Self { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn text_round_trip_is_exact(values in prop::collection::vec(-1e6f64..1e6, 1..40), split in 1usize..5) {
            let cols = split.min(values.len());
            let rows = values.len() / cols;
            let m = Matrix::from_vec(rows, cols, values[..rows * cols].to_vec()).unwrap();
            let ck = Checkpoint { tensors: vec![("a.w".into(), m.clone()), ("b".into(), Matrix::zeros(1, 1))] };
            let back = Checkpoint::parse(&ck.to_text()).unwrap();
            prop_assert_eq!(back, ck);
        }
    }

    #[test]
    fn restore_checks_names_and_shapes() {
        let mut store = ParamStore::new();
        store.add("w", Matrix::zeros(2, 2));
        let mut ck = Checkpoint::new();
        ck.tensors.push(("net.w".into(), Matrix::zeros(2, 3)));
        assert!(ck.restore_into("net", &mut store).is_err());
        assert!(ck.restore_into("other", &mut store).is_err());
        ck.tensors[0].1 = Matrix::filled(2, 2, 4.0);
        ck.restore_into("net", &mut store).unwrap();
        assert_eq!(store.get(store.find("w").unwrap()).sum(), 16.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Checkpoint::parse("nope").is_err());
        assert!(Checkpoint::parse(&format!("{MAGIC}\nw\t2,2\t1 2 3\n")).is_err());
    }
}
