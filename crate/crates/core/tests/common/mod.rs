#![allow(dead_code)]

use tailcop::synth::Timeline;
use tailcop::ReturnMatrix64;

pub fn matrix(rows: Vec<Vec<f64>>) -> ReturnMatrix64 {
    let len = rows[0].len();
    let ids = (0..rows.len()).map(|k| format!("S{k}")).collect();
    let tl = Timeline::default();
    ReturnMatrix64::new(ids, tl.interval_minutes, rows, tl.stamps(len).unwrap()).unwrap()
}

/// Sample values with many ties: roughly half the entries are zero.
pub fn tie_heavy(raw: &[f64], keep: &[bool]) -> Vec<f64> {
    raw.iter()
        .zip(keep)
        .map(|(&x, &k)| if k { (x * 8.0).round() / 8.0 } else { 0.0 })
        .collect()
}
