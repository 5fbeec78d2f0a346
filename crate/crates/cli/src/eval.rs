//! Pixel-accuracy evaluation against ground-truth label maps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gal_core::raster::read_label_map;
use gal_core::{GalError, GeometricClass, LabelMap, Result, NUM_CLASSES};

#[derive(Clone, Debug, PartialEq, Default)]
pub struct EvalReport {
    /// `confusion[truth][pred]` pixel counts.
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
    pub per_image: Vec<(String, f64)>,
}

impl EvalReport {
    pub fn add(&mut self, name: &str, pred: &LabelMap, truth: &LabelMap) -> Result<f64> {
        if pred.width() != truth.width() || pred.height() != truth.height() {
            return Err(GalError::Dimension(format!(
                "{name}: prediction {}x{} vs truth {}x{}",
                pred.width(),
                pred.height(),
                truth.width(),
                truth.height()
            )));
        }
        let mut correct = 0u64;
        for (&t, &p) in truth.codes().iter().zip(pred.codes()) {
            self.confusion[t as usize][p as usize] += 1;
            correct += u64::from(t == p);
        }
        let acc = correct as f64 / truth.codes().len() as f64;
        self.per_image.push((name.to_string(), acc));
        Ok(acc)
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn overall(&self) -> f64 {
        let diag: u64 = (0..NUM_CLASSES).map(|i| self.confusion[i][i]).sum();
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            diag as f64 / t as f64
        }
    }

    /// Diagonal over row sum; `None` for classes absent from the truth.
    pub fn per_class(&self) -> [Option<f64>; NUM_CLASSES] {
        std::array::from_fn(|i| {
            let row: u64 = self.confusion[i].iter().sum();
            (row > 0).then(|| self.confusion[i][i] as f64 / row as f64)
        })
    }

    pub fn merge(&mut self, other: &EvalReport) {
        for i in 0..NUM_CLASSES {
            for j in 0..NUM_CLASSES {
                self.confusion[i][j] += other.confusion[i][j];
            }
        }
        self.per_image.extend(other.per_image.iter().cloned());
    }

    /// Human-readable summary followed by `key value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "pixel accuracy: {:.2}% over {} images",
            100.0 * self.overall(),
            self.per_image.len()
        );
        let pc = self.per_class();
        for c in GeometricClass::ALL {
            match pc[c.index()] {
                Some(a) => {
                    let _ = writeln!(s, "  {:<14} {:.2}%", c.name(), 100.0 * a);
                }
                None => {
                    let _ = writeln!(s, "  {:<14} n/a", c.name());
                }
            }
        }
        let _ = writeln!(s, "overall {:.6}", self.overall());
        for c in GeometricClass::ALL {
            if let Some(a) = pc[c.index()] {
                let _ = writeln!(s, "class.{} {a:.6}", c.name());
            }
        }
        for (i, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                s,
                "confusion.{} {}",
                GeometricClass::ALL[i].name(),
                cells.join(" ")
            );
        }
        for (name, a) in &self.per_image {
            let _ = writeln!(s, "image.{name} {a:.6}");
        }
        s
    }
}

fn pgm_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| GalError::io(dir, e))? {
        let path = entry.map_err(|e| GalError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "pgm") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

/// Compare every `<stem>.pgm` in `pred_dir` that has a partner in
/// `truth_dir`. Failed pairs are reported and skipped.
pub fn evaluate_dirs(pred_dir: &Path, truth_dir: &Path) -> Result<(EvalReport, Vec<String>)> {
    let preds = pgm_stems(pred_dir)?;
    let truths = pgm_stems(truth_dir)?;
    let mut report = EvalReport::default();
    let mut errors = Vec::new();
    for (stem, tp) in &truths {
        let Some(pp) = preds.get(stem) else {
            errors.push(format!("{stem}: no prediction"));
            continue;
        };
        let res = read_label_map(pp).and_then(|p| read_label_map(tp).map(|t| (p, t)));
        match res.and_then(|(p, t)| report.add(stem, &p, &t)) {
            Ok(_) => {}
            Err(e) => errors.push(format!("{stem}: {e}")),
        }
    }
    if truths.is_empty() {
        errors.push(format!("no ground-truth maps in {}", truth_dir.display()));
    }
    Ok((report, errors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_quarter_error() {
        let t = LabelMap::filled(10, 10, GeometricClass::Sky);
        let mut r = EvalReport::default();
        assert_eq!(r.add("a", &t, &t).unwrap(), 1.0);
        let mut p = t.clone();
        for i in 0..25 {
            p.set(i % 10, i / 10, GeometricClass::Support);
        }
        let mut r2 = EvalReport::default();
        assert_eq!(r2.add("b", &p, &t).unwrap(), 0.75);
        assert_eq!(
            r2.confusion[GeometricClass::Sky.index()][GeometricClass::Support.index()],
            25
        );
        assert!(r2
            .add("c", &LabelMap::filled(3, 3, GeometricClass::Sky), &t)
            .is_err());
    }
}
