use alloc::vec;
use alloc::vec::Vec;

use super::path::PathSet;
use crate::{Error, Result};

/// Signed channel-by-path incidence matrix `R` with entries in `{-1, 0, 1}`.
///
/// Column `p` is the signed edge vector of global path `p`. The positive and
/// negative parts `R+` and `R-` are read off the same storage, so
/// `R = R+ - R-` holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingMatrix {
    channels: usize,
    paths: usize,
    // row-major, channels x paths
    entries: Vec<i8>,
}

impl RoutingMatrix {
    pub fn from_paths(paths: &PathSet, num_channels: usize) -> Self {
        let n = paths.len();
        let mut entries = vec![0i8; num_channels * n];
        for (col, path) in paths.iter().enumerate() {
            for hop in path.hops() {
                entries[hop.channel.0 * n + col] = hop.direction.sign();
            }
        }
        RoutingMatrix {
            channels: num_channels,
            paths: n,
            entries,
        }
    }

    /// Builds a matrix from explicit rows. Entries must be in `{-1, 0, 1}`.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let paths = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * paths);
        for row in rows {
            if row.len() != paths {
                return Err(Error::DimensionMismatch {
                    what: "routing matrix row",
                    expected: paths,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !(-1..=1).contains(v)) {
                return Err(Error::InvalidInput(
                    "routing matrix entries must be -1, 0 or 1".into(),
                ));
            }
            entries.extend_from_slice(row);
        }
        Ok(RoutingMatrix {
            channels: rows.len(),
            paths,
            entries,
        })
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    pub fn num_paths(&self) -> usize {
        self.paths
    }

    pub fn get(&self, channel: usize, path: usize) -> i8 {
        self.entries[channel * self.paths + path]
    }

    pub fn plus(&self, channel: usize, path: usize) -> u8 {
        self.get(channel, path).max(0) as u8
    }

    pub fn minus(&self, channel: usize, path: usize) -> u8 {
        (-self.get(channel, path)).max(0) as u8
    }

    pub fn row(&self, channel: usize) -> &[i8] {
        &self.entries[channel * self.paths..(channel + 1) * self.paths]
    }

    pub fn column(&self, path: usize) -> Vec<i8> {
        (0..self.channels).map(|e| self.get(e, path)).collect()
    }

    /// Net flow per channel, `R f`; positive means net flow `u -> v`.
    pub fn apply(&self, flows: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(flows, f64::from)
    }

    /// `R+ f`: flow each channel carries in the `u -> v` direction.
    pub fn apply_plus(&self, flows: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(flows, |v| f64::from(v.max(0)))
    }

    /// `R- f`: flow each channel carries in the `v -> u` direction.
    pub fn apply_minus(&self, flows: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(flows, |v| f64::from((-v).max(0)))
    }

    /// `R^T x`, one value per path.
    pub fn apply_transpose(&self, per_channel: &[f64]) -> Result<Vec<f64>> {
        check_len("channel vector", self.channels, per_channel.len())?;
        let mut out = vec![0.0; self.paths];
        for (p, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (e, x) in per_channel.iter().enumerate() {
                match self.get(e, p) {
                    1 => acc += x,
                    -1 => acc -= x,
                    _ => {}
                }
            }
            *slot = acc;
        }
        Ok(out)
    }

    fn apply_with(&self, flows: &[f64], weight: impl Fn(i8) -> f64) -> Result<Vec<f64>> {
        check_len("flow vector", self.paths, flows.len())?;
        Ok((0..self.channels)
            .map(|e| {
                self.row(e)
                    .iter()
                    .zip(flows)
                    .filter(|(r, _)| **r != 0)
                    .map(|(r, f)| weight(*r) * f)
                    .sum()
            })
            .collect())
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NodeId, Topology};

    #[test]
    fn single_channel_single_path() {
        let t = Topology::new(["A", "B"], &[("A", "B", 1.0)]).unwrap();
        let ps = PathSet::enumerate(&t, &[(NodeId(0), NodeId(1))], 1).unwrap();
        let r = RoutingMatrix::from_paths(&ps, 1);
        assert_eq!(r.column(0), [1]);
        assert_eq!(r.apply(&[3.0]).unwrap(), [3.0]);
    }

    #[test]
    fn parts_and_products() {
        let r = RoutingMatrix::from_rows(&[vec![1, -1, 0], vec![0, 1, 1]]).unwrap();
        let f = [2.0, 3.0, 5.0];
        assert_eq!(r.apply(&f).unwrap(), [-1.0, 8.0]);
        assert_eq!(r.apply_plus(&f).unwrap(), [2.0, 8.0]);
        assert_eq!(r.apply_minus(&f).unwrap(), [3.0, 0.0]);
        assert_eq!(r.apply_transpose(&[0.5, 2.0]).unwrap(), [0.5, 1.5, 2.0]);
        assert!(r.apply(&[1.0]).is_err());
        assert!(RoutingMatrix::from_rows(&[vec![2]]).is_err());
    }
}
