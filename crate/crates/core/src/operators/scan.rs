//! Exhaustive lattice suprema of the multipliers that control the normal
//! form estimates.
//!
//! * `M`: `<xi1>^s <xi2>^s <xi>^{1-s} / (|xi1| |xi2|^{1/2-eps})` over pairs
//!   with `xi = xi1 + xi2`, `xi1 xi2 xi != 0` and `|xi1| >= |xi2|`.
//! * `Mprime`: `(<xi1><xi2><xi3>)^{s+delta} <xi>^{1/2-s} / (|xi3| L^{1/2-delta})`
//!   over non-resonant triples.
//! * `Mstar`: `<xi>^delta <xi2>^delta <xi3>^delta / L^{1/2-delta}` over the same
//!   triples.
//!
//! Here `L = max(1, 3 |(xi1+xi2)(xi2+xi3)(xi3+xi1)|)`, the algebraic size of
//! the cubic modulation. A tuple lies within cutoff `C` when every input
//! frequency has `|xi_j| <= C`. All input frequencies are nonzero (fields are
//! mean-zero) and so is the output frequency.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{bracket, SobolevIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplierKind {
    M,
    Mprime,
    Mstar,
}

impl MultiplierKind {
    pub fn name(self) -> &'static str {
        match self {
            MultiplierKind::M => "M",
            MultiplierKind::Mprime => "Mprime",
            MultiplierKind::Mstar => "Mstar",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "M" | "m" => Some(MultiplierKind::M),
            "Mprime" | "mprime" | "M'" => Some(MultiplierKind::Mprime),
            "Mstar" | "mstar" | "M*" => Some(MultiplierKind::Mstar),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierScan {
    pub kind: MultiplierKind,
    pub s: SobolevIndex,
    pub delta: f64,
    pub epsilon: f64,
    pub cutoffs: Vec<i64>,
    pub sups: Vec<f64>,
    /// Maximizing input frequencies per cutoff (two entries for `M`).
    pub argmax: Vec<Vec<i64>>,
}

impl MultiplierScan {
    /// Relative change of the supremum between two cutoffs (by index).
    pub fn relative_change(&self, from: usize, to: usize) -> f64 {
        (self.sups[to] - self.sups[from]) / self.sups[from]
    }
}

#[derive(Clone, Copy)]
struct Best {
    log_value: f64,
    tuple: [i64; 3],
}

impl Best {
    const NONE: Best = Best {
        log_value: f64::NEG_INFINITY,
        tuple: [0; 3],
    };

    fn offer(&mut self, log_value: f64, tuple: [i64; 3]) {
        if log_value > self.log_value {
            *self = Best { log_value, tuple };
        }
    }
}

struct LogTable {
    /// ln <n> for n in 0..len
    bracket: Vec<f64>,
    /// ln n for n in 0..len (index 0 unused)
    abs: Vec<f64>,
}

impl LogTable {
    fn new(max: i64) -> Self {
        let n = max as usize + 1;
        LogTable {
            bracket: (0..n).map(|m| bracket(m as i64).ln()).collect(),
            abs: (0..n).map(|m| (m as f64).ln()).collect(),
        }
    }

    #[inline]
    fn br(&self, xi: i64) -> f64 {
        self.bracket[xi.unsigned_abs() as usize]
    }

    #[inline]
    fn abs(&self, xi: i64) -> f64 {
        self.abs[xi.unsigned_abs() as usize]
    }
}

fn validate(delta: f64, epsilon: f64, cutoffs: &[i64]) -> Result<()> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1/4), got {delta}")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    if cutoffs.is_empty() {
        return Err(Error::InvalidParameter("no cutoffs given".into()));
    }
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("cutoffs must be strictly increasing".into()));
    }
    Ok(())
}

/// Per-shell maxima for the pair multiplier `M`; shell = `|xi1|`.
fn scan_m(s: f64, epsilon: f64, cmax: i64) -> Vec<Best> {
    let logs = LogTable::new(2 * cmax);
    let rows: Vec<(usize, Best)> = (-cmax..=cmax)
        .into_par_iter()
        .filter(|&xi1| xi1 != 0)
        .map(|xi1| {
            let mut best = Best::NONE;
            let a = xi1.abs();
            for xi2 in -a..=a {
                let xi = xi1 + xi2;
                if xi2 == 0 || xi == 0 {
                    continue;
                }
                let lv = s * (logs.br(xi1) + logs.br(xi2)) + (1.0 - s) * logs.br(xi)
                    - logs.abs(xi1)
                    - (0.5 - epsilon) * logs.abs(xi2);
                best.offer(lv, [xi1, xi2, 0]);
            }
            (a as usize, best)
        })
        .collect();
    let mut shells = vec![Best::NONE; cmax as usize + 1];
    for (shell, best) in rows {
        shells[shell].offer(best.log_value, best.tuple);
    }
    shells
}

/// Per-shell maxima for the trilinear multipliers; shell = `max |xi_j|`.
fn scan_triple(kind: MultiplierKind, s: f64, delta: f64, cmax: i64) -> Vec<Best> {
    let logs = LogTable::new(3 * cmax);
    let n_shells = cmax as usize + 1;
    let rows: Vec<Vec<Best>> = (-cmax..=cmax)
        .into_par_iter()
        .filter(|&xi1| xi1 != 0)
        .map(|xi1| {
            let mut shells = vec![Best::NONE; n_shells];
            for xi2 in -cmax..=cmax {
                if xi2 == 0 || xi1 + xi2 == 0 {
                    continue;
                }
                let m12 = xi1.abs().max(xi2.abs());
                for xi3 in -cmax..=cmax {
                    let xi = xi1 + xi2 + xi3;
                    if xi3 == 0 || xi == 0 || xi2 + xi3 == 0 || xi3 + xi1 == 0 {
                        continue;
                    }
                    let p = ((xi1 + xi2) * (xi2 + xi3) * (xi3 + xi1)).unsigned_abs() as f64;
                    let log_l = (3.0 * p).max(1.0).ln();
                    let lv = match kind {
                        MultiplierKind::Mprime => {
                            (s + delta) * (logs.br(xi1) + logs.br(xi2) + logs.br(xi3))
                                + (0.5 - s) * logs.br(xi)
                                - logs.abs(xi3)
                                - (0.5 - delta) * log_l
                        }
                        MultiplierKind::Mstar => {
                            delta * (logs.br(xi) + logs.br(xi2) + logs.br(xi3)) - (0.5 - delta) * log_l
                        }
                        MultiplierKind::M => unreachable!(),
                    };
                    let shell = m12.max(xi3.abs()) as usize;
                    shells[shell].offer(lv, [xi1, xi2, xi3]);
                }
            }
            shells
        })
        .collect();
    let mut shells = vec![Best::NONE; n_shells];
    for row in rows {
        for (acc, b) in shells.iter_mut().zip(row) {
            acc.offer(b.log_value, b.tuple);
        }
    }
    shells
}

/// Suprema of `kind` over the admissible lattice within each cutoff.
///
/// The lattice is enumerated once up to the largest cutoff, in parallel over
/// `xi1`, keeping the maximum per shell; the per-cutoff suprema are running
/// maxima over shells, so they are nondecreasing by construction. Ties keep
/// the first tuple in enumeration order, which makes the output
/// deterministic.
pub fn multiplier_sup(
    kind: MultiplierKind,
    s: SobolevIndex,
    delta: f64,
    epsilon: f64,
    cutoffs: &[i64],
) -> Result<MultiplierScan> {
    validate(delta, epsilon, cutoffs)?;
    if let Some(&bad) = cutoffs.iter().find(|&&c| c < 1) {
        return Err(Error::EmptyAdmissibleSet { cutoff: bad });
    }
    let cmax = *cutoffs.last().unwrap();
    let shells = match kind {
        MultiplierKind::M => scan_m(s.value(), epsilon, cmax),
        _ => scan_triple(kind, s.value(), delta, cmax),
    };

    let mut sups = Vec::with_capacity(cutoffs.len());
    let mut argmax = Vec::with_capacity(cutoffs.len());
    let mut running = Best::NONE;
    let mut next_shell = 0usize;
    for &c in cutoffs {
        while next_shell <= c as usize {
            running.offer(shells[next_shell].log_value, shells[next_shell].tuple);
            next_shell += 1;
        }
        if running.log_value == f64::NEG_INFINITY {
            return Err(Error::EmptyAdmissibleSet { cutoff: c });
        }
        sups.push(running.log_value.exp());
        argmax.push(match kind {
            MultiplierKind::M => running.tuple[..2].to_vec(),
            _ => running.tuple.to_vec(),
        });
    }
    Ok(MultiplierScan {
        kind,
        s,
        delta,
        epsilon,
        cutoffs: cutoffs.to_vec(),
        sups,
        argmax,
    })
}

/// CSV rows `name,s,delta,epsilon,cutoff,sup,argmax_xi1,argmax_xi2,argmax_xi3`
/// preceded by a header; `argmax_xi3` is empty for `M`.
pub fn write_scan_csv<W: Write>(w: W, scans: &[MultiplierScan]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "name", "s", "delta", "epsilon", "cutoff", "sup", "argmax_xi1", "argmax_xi2", "argmax_xi3",
    ])?;
    for scan in scans {
        for ((c, sup), arg) in scan.cutoffs.iter().zip(&scan.sups).zip(&scan.argmax) {
            let get = |i: usize| arg.get(i).map_or(String::new(), |x| x.to_string());
            csv.write_record([
                scan.kind.name().to_string(),
                scan.s.value().to_string(),
                scan.delta.to_string(),
                scan.epsilon.to_string(),
                c.to_string(),
                format!("{sup:e}"),
                get(0),
                get(1),
                get(2),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m_value(s: f64, eps: f64, xi1: i64, xi2: i64) -> f64 {
        let xi = xi1 + xi2;
        bracket(xi1).powf(s) * bracket(xi2).powf(s) * bracket(xi).powf(1.0 - s)
            / ((xi1.abs() as f64) * (xi2.abs() as f64).powf(0.5 - eps))
    }

    #[test]
    fn m_matches_direct_enumeration() {
        let (s, eps) = (0.3, 0.1);
        let scan = multiplier_sup(MultiplierKind::M, SobolevIndex::new(s), 0.01, eps, &[3, 9]).unwrap();
        for (ci, &c) in scan.cutoffs.iter().enumerate() {
            let mut best = 0.0f64;
            for xi1 in -c..=c {
                for xi2 in -c..=c {
                    if xi1 == 0 || xi2 == 0 || xi1 + xi2 == 0 || xi2.abs() > xi1.abs() {
                        continue;
                    }
                    best = best.max(m_value(s, eps, xi1, xi2));
                }
            }
            assert!((scan.sups[ci] - best).abs() <= 1e-12 * best);
            let a = &scan.argmax[ci];
            assert!((m_value(s, eps, a[0], a[1]) - best).abs() <= 1e-12 * best);
        }
    }

    #[test]
    fn triple_scan_matches_direct_enumeration() {
        let (s, d) = (0.45, 0.01);
        let c = 6;
        let scan = multiplier_sup(MultiplierKind::Mprime, SobolevIndex::new(s), d, 0.1, &[c]).unwrap();
        let mut best = 0.0f64;
        for a in -c..=c {
            for b in -c..=c {
                for e in -c..=c {
                    let p = (a + b) * (b + e) * (e + a);
                    if a == 0 || b == 0 || e == 0 || p == 0 || a + b + e == 0 {
                        continue;
                    }
                    let l = (3.0 * p.abs() as f64).max(1.0);
                    let v = (bracket(a) * bracket(b) * bracket(e)).powf(s + d)
                        * bracket(a + b + e).powf(0.5 - s)
                        / (e.abs() as f64 * l.powf(0.5 - d));
                    best = best.max(v);
                }
            }
        }
        assert!((scan.sups[0] - best).abs() <= 1e-12 * best);
    }

    #[test]
    fn sups_nondecreasing() {
        for kind in [MultiplierKind::M, MultiplierKind::Mprime, MultiplierKind::Mstar] {
            let scan = multiplier_sup(kind, SobolevIndex::new(0.6), 0.05, 0.1, &[1, 2, 4, 8, 16]).unwrap();
            assert!(scan.sups.windows(2).all(|w| w[0] <= w[1]), "{kind:?}");
        }
    }

    #[test]
    fn parameter_validation() {
        let s = SobolevIndex::new(0.2);
        assert!(multiplier_sup(MultiplierKind::M, s, 0.3, 0.1, &[4]).is_err());
        assert!(multiplier_sup(MultiplierKind::M, s, 0.01, 0.6, &[4]).is_err());
        assert!(multiplier_sup(MultiplierKind::M, s, 0.01, 0.1, &[4, 4]).is_err());
        assert!(matches!(
            multiplier_sup(MultiplierKind::Mstar, s, 0.01, 0.1, &[0, 4]),
            Err(Error::EmptyAdmissibleSet { cutoff: 0 })
        ));
    }

    #[test]
    fn csv_layout() {
        let scan = multiplier_sup(MultiplierKind::M, SobolevIndex::new(0.0), 0.01, 0.1, &[2]).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &[scan]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "name,s,delta,epsilon,cutoff,sup,argmax_xi1,argmax_xi2,argmax_xi3");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 9);
        assert_eq!(row[0], "M");
        assert_eq!(row[8], "");
    }
}
