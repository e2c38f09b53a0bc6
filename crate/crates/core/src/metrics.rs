//! Confusion matrices, OA / AA / Cohen's kappa, and PPM map rendering.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{arg, Error, Result};

/// `counts[t][p]`: samples of true class `t + 1` predicted as `p + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 || counts.iter().any(|r| r.len() != k) {
            return arg("confusion matrix must be square and non-empty");
        }
        Ok(Self { counts })
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Count `(truth, pred)` pairs; classes are `1..=num_classes`.
pub fn confusion(truth: &[usize], pred: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return arg(format!("truth has {} entries, predictions {}", truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return arg("no samples to evaluate");
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == 0 || t > num_classes || p == 0 || p > num_classes {
            return arg(format!("class pair ({t}, {p}) outside 1..={num_classes}"));
        }
        counts[t - 1][p - 1] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    #[serde(serialize_with = "crate::config::fixed6")]
    pub oa: f64,
    #[serde(serialize_with = "crate::config::fixed6")]
    pub aa: f64,
    #[serde(serialize_with = "crate::config::fixed6")]
    pub kappa: f64,
    /// Accuracy per class; `None` for classes with no samples.
    #[serde(serialize_with = "crate::config::fixed6_opt_vec")]
    pub per_class: Vec<Option<f64>>,
}

/// OA, AA (over classes that have samples), and Cohen's kappa.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let total = cm.total();
    if total == 0 {
        return arg("confusion matrix is empty");
    }
    let k = cm.num_classes();
    let n = total as f64;
    let diag: u64 = (0..k).map(|i| cm.counts[i][i]).sum();
    let oa = diag as f64 / n;
    let rows: Vec<u64> = cm.counts.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..k).map(|j| cm.counts.iter().map(|r| r[j]).sum()).collect();
    let per_class: Vec<Option<f64>> = (0..k)
        .map(|i| (rows[i] > 0).then(|| cm.counts[i][i] as f64 / rows[i] as f64))
        .collect();
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    let aa = defined.iter().sum::<f64>() / defined.len() as f64;
    let pe: f64 = rows.iter().zip(&cols).map(|(&r, &c)| r as f64 * c as f64).sum::<f64>() / (n * n);
    let kappa = if pe == 1.0 {
        if oa == 1.0 { 1.0 } else { 0.0 }
    } else {
        (oa - pe) / (1.0 - pe)
    };
    Ok(MetricReport { oa, aa, kappa, per_class })
}

/// RGB palette indexed by class; entry 0 is the unlabeled colour.
pub type Palette = Vec<[u8; 3]>;

/// Black for unlabeled, then a fixed set of distinct colours.
pub fn default_palette(num_classes: usize) -> Palette {
    const BASE: [[u8; 3]; 16] = [
        [230, 25, 75], [60, 180, 75], [255, 225, 25], [0, 130, 200],
        [245, 130, 48], [145, 30, 180], [70, 240, 240], [240, 50, 230],
        [210, 245, 60], [250, 190, 212], [0, 128, 128], [220, 190, 255],
        [170, 110, 40], [255, 250, 200], [128, 0, 0], [170, 255, 195],
    ];
    let mut p = vec![[0, 0, 0]];
    p.extend((0..num_classes).map(|k| BASE[k % BASE.len()]));
    p
}

fn ppm(width: usize, height: usize, pixels: impl Iterator<Item = [u8; 3]>) -> String {
    let mut out = format!("P3\n{width} {height}\n255");
    for [r, g, b] in pixels {
        write!(out, "\n{r} {g} {b}").unwrap();
    }
    out
}

/// Plain-text PPM of a class grid (`0` = unlabeled, drawn with `palette[0]`).
pub fn render_class_map(classes: &[usize], width: usize, height: usize, palette: &Palette) -> Result<String> {
    if classes.len() != width * height {
        return Err(Error::Render(format!("grid has {} cells, expected {}", classes.len(), width * height)));
    }
    if let Some(c) = classes.iter().find(|&&c| c >= palette.len()) {
        return Err(Error::Render(format!("class {c} has no palette entry")));
    }
    Ok(ppm(width, height, classes.iter().map(|&c| palette[c])))
}

/// Plain-text PPM of an uncertainty grid: grey level `floor(u * 255)`.
pub fn render_uncertainty_map(values: &[f64], width: usize, height: usize) -> Result<String> {
    if values.len() != width * height {
        return Err(Error::Render(format!("grid has {} cells, expected {}", values.len(), width * height)));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Render(format!("uncertainty {v} outside [0, 1]")));
    }
    Ok(ppm(width, height, values.iter().map(|&u| {
        let g = (u * 255.0).floor() as u8;
        [g, g, g]
    })))
}

/// Parse a P3 PPM back into `(width, height, pixels)`.
pub fn parse_ppm(text: &str) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| tokens.next().ok_or_else(|| Error::Format(format!("PPM missing {what}")));
    if next("magic")? != "P3" {
        return Err(Error::Format("not a P3 PPM".into()));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PPM number {s:?}")));
    let width = num(next("width")?)?;
    let height = num(next("height")?)?;
    if num(next("maxval")?)? != 255 {
        return Err(Error::Format("PPM maxval must be 255".into()));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let mut px = [0u8; 3];
        for c in px.iter_mut() {
            *c = next("pixel")?.parse().map_err(|_| Error::Format("bad PPM sample".into()))?;
        }
        pixels.push(px);
    }
    Ok((width, height, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement() {
        let t = [1, 2, 3, 3, 2, 1];
        let cm = confusion(&t, &t, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cm.counts()[i][j] > 0, i == j);
            }
        }
        let m = compute_metrics(&cm).unwrap();
        assert_eq!((m.oa, m.aa, m.kappa), (1.0, 1.0, 1.0));
    }

    #[test]
    fn confusion_errors() {
        assert!(confusion(&[], &[], 2).is_err());
        assert!(confusion(&[1], &[1, 2], 2).is_err());
        assert!(confusion(&[1], &[3], 2).is_err());
        assert!(confusion(&[0], &[1], 2).is_err());
    }

    #[test]
    fn chance_level_kappa_is_zero() {
        let cm = ConfusionMatrix::from_counts(vec![vec![1, 1], vec![1, 1]]).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.oa, 0.5);
        assert_eq!(m.kappa, 0.0);
    }

    #[test]
    fn empty_rows_excluded_from_aa() {
        let cm = ConfusionMatrix::from_counts(vec![vec![3, 1, 0], vec![0, 0, 0], vec![0, 2, 2]]).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.per_class, vec![Some(0.75), None, Some(0.5)]);
        assert_eq!(m.aa, 0.625);
    }

    #[test]
    fn single_class_all_correct() {
        let cm = ConfusionMatrix::from_counts(vec![vec![5, 0], vec![0, 0]]).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.kappa, 1.0);
        let cm = ConfusionMatrix::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(compute_metrics(&cm).is_err());
    }

    #[test]
    fn single_pixel_ppm_bytes() {
        let mut palette = default_palette(1);
        palette[1] = [255, 0, 0];
        assert_eq!(render_class_map(&[1], 1, 1, &palette).unwrap(), "P3\n1 1\n255\n255 0 0");
    }

    #[test]
    fn unlabeled_is_black_and_out_of_palette_fails() {
        let s = render_class_map(&[0, 0, 0, 0], 2, 2, &default_palette(3)).unwrap();
        let (_, _, px) = parse_ppm(&s).unwrap();
        assert!(px.iter().all(|p| *p == [0, 0, 0]));
        assert!(matches!(render_class_map(&[4], 1, 1, &default_palette(3)), Err(Error::Render(_))));
    }

    #[test]
    fn uncertainty_greyscale() {
        let s = render_uncertainty_map(&[0.5; 6], 3, 2).unwrap();
        let (w, h, px) = parse_ppm(&s).unwrap();
        assert_eq!((w, h), (3, 2));
        assert!(px.iter().all(|p| *p == [127, 127, 127]));
        assert!(render_uncertainty_map(&[1.5], 1, 1).is_err());
    }
}
