//! Peak finding on spectrum cuts and crossing detection on line series.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub index: usize,
    pub freq: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Local maxima of `y` (interior points only) with their topographic
/// prominence. NaN samples are never peaks and act as barriers of height
/// minus infinity.
pub fn find_peaks(x: &[f64], y: &[f64]) -> Vec<Peak> {
    let n = y.len();
    let val = |i: usize| if y[i].is_nan() { f64::NEG_INFINITY } else { y[i] };
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if val(i) > val(i - 1) {
            let mut j = i;
            while j + 1 < n && val(j + 1) == val(i) {
                j += 1;
            }
            if j + 1 < n && val(j + 1) < val(i) {
                let h = val(i);
                let mut left = h;
                let mut k = i;
                while k > 0 {
                    k -= 1;
                    if val(k) > h {
                        break;
                    }
                    left = left.min(val(k));
                }
                let mut right = h;
                let mut k = j;
                while k + 1 < n {
                    k += 1;
                    if val(k) > h {
                        break;
                    }
                    right = right.min(val(k));
                }
                peaks.push(Peak { index: i, freq: x[i], height: h, prominence: h - left.max(right) });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Peaks that count as separate lines: prominence at least `rel_floor` of the
/// most prominent peak in the cut (a numerical-noise guard), and separated by
/// more than `min_separation` from every taller accepted peak.
pub fn resolved_lines(x: &[f64], y: &[f64], min_separation: f64, rel_floor: f64) -> Vec<Peak> {
    let peaks = find_peaks(x, y);
    let top = peaks.iter().map(|p| p.prominence).fold(0.0, f64::max);
    let mut candidates: Vec<Peak> = peaks.into_iter().filter(|p| p.prominence >= rel_floor * top).collect();
    candidates.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.index.cmp(&b.index)));
    let mut accepted: Vec<Peak> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|a| (a.freq - c.freq).abs() > min_separation) {
            accepted.push(c);
        }
    }
    accepted.sort_by_key(|p| p.index);
    accepted
}

/// Abscissae where `a - b` changes sign, by linear interpolation.
pub fn crossings(x: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    let mut out = Vec::new();
    for k in 1..d.len() {
        let (d0, d1) = (d[k - 1], d[k]);
        if d0 == 0.0 {
            out.push(x[k - 1]);
        } else if d0.signum() != d1.signum() && d1 != 0.0 {
            let f = d0 / (d0 - d1);
            out.push(x[k - 1] + f * (x[k] - x[k - 1]));
        }
    }
    if let (Some(&last), Some(&xl)) = (d.last(), x.last()) {
        if last == 0.0 {
            out.push(xl);
        }
    }
    out
}
